// Copyright 2026 The CE3 Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ce3/viz.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace ce3 {
namespace {

constexpr std::size_t kMargin = 2;
constexpr std::size_t kRowHeight = 3;
constexpr std::size_t kPanelWidth = 16;
constexpr std::size_t kPanelGap = 4;

struct Rgb {
  std::uint8_t r, g, b;
};
constexpr Rgb kBackground{0, 0, 0};
constexpr Rgb kUnvisited{60, 80, 110};
constexpr Rgb kVisited{18, 18, 22};
constexpr Rgb kSelected{255, 255, 255};
constexpr Rgb kSeparator{64, 224, 208};

enum class Cell { kUnvisited, kVisited, kSelected };

struct Layout {
  std::vector<ExplorationRow> rows;
  std::vector<std::size_t> row_y;        // top pixel of each document row
  std::vector<std::size_t> separator_y;  // dotted lines
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t panels = 0;
};

Layout make_layout(std::span<const IterationRecord> records,
                   const TopicGroundTruth& topic, std::span<const std::string> doc_ids) {
  Layout layout;
  layout.rows = exploration_rows(topic, doc_ids);
  layout.panels = records.size();
  std::size_t y = kMargin;
  for (std::size_t i = 0; i < layout.rows.size(); ++i) {
    if (i > 0 && layout.rows[i].group != layout.rows[i - 1].group) {
      layout.separator_y.push_back(y);
      y += 1;
    }
    layout.row_y.push_back(y);
    y += kRowHeight;
  }
  layout.height = y + kMargin;
  layout.width = 2 * kMargin;
  if (layout.panels > 0) {
    layout.width += layout.panels * kPanelWidth + (layout.panels - 1) * kPanelGap;
  }
  return layout;
}

Cell cell_state(const IterationRecord& record, const std::string& doc_id) {
  for (const auto& doc : record.retrieved) {
    if (doc.doc_id == doc_id) return Cell::kSelected;
  }
  if (std::binary_search(record.visited.begin(), record.visited.end(), doc_id)) {
    return Cell::kVisited;
  }
  return Cell::kUnvisited;
}

Rgb cell_color(Cell cell) {
  switch (cell) {
    case Cell::kSelected:
      return kSelected;
    case Cell::kVisited:
      return kVisited;
    case Cell::kUnvisited:
      break;
  }
  return kUnvisited;
}

}  // namespace

std::vector<ExplorationRow> exploration_rows(const TopicGroundTruth& topic,
                                             std::span<const std::string> doc_ids) {
  std::vector<ExplorationRow> rows;
  for (std::size_t g = 0; g < topic.subtopics.size(); ++g) {
    for (const auto& doc : doc_ids) {
      auto it = topic.ratings.find(doc);
      if (it == topic.ratings.end() || it->second.rating <= 0) continue;
      const auto& subs = it->second.subtopics;
      if (std::find(subs.begin(), subs.end(), topic.subtopics[g]) != subs.end()) {
        rows.push_back({doc, static_cast<int>(g)});
      }
    }
  }
  for (const auto& doc : doc_ids) {
    if (!topic.is_relevant(doc)) rows.push_back({doc, -1});
  }
  return rows;
}

Image render_exploration(std::span<const IterationRecord> records,
                         const TopicGroundTruth& topic,
                         std::span<const std::string> doc_ids) {
  const Layout layout = make_layout(records, topic, doc_ids);
  Image image;
  image.width = layout.width;
  image.height = layout.height;
  image.rgb.assign(image.width * image.height * 3, 0);
  auto paint = [&](std::size_t x, std::size_t y, Rgb c) {
    std::uint8_t* px = &image.rgb[(y * image.width + x) * 3];
    px[0] = c.r;
    px[1] = c.g;
    px[2] = c.b;
  };
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) paint(x, y, kBackground);
  }
  for (std::size_t p = 0; p < layout.panels; ++p) {
    const std::size_t x0 = kMargin + p * (kPanelWidth + kPanelGap);
    for (std::size_t r = 0; r < layout.rows.size(); ++r) {
      const Rgb color = cell_color(cell_state(records[p], layout.rows[r].doc_id));
      for (std::size_t dy = 0; dy < kRowHeight; ++dy) {
        for (std::size_t dx = 0; dx < kPanelWidth; ++dx) {
          paint(x0 + dx, layout.row_y[r] + dy, color);
        }
      }
    }
    for (std::size_t y : layout.separator_y) {
      for (std::size_t dx = 0; dx < kPanelWidth; dx += 2) paint(x0 + dx, y, kSeparator);
    }
  }
  return image;
}

void write_ppm(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image " + path);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw std::runtime_error("failed writing image " + path);
}

namespace {

void write_svg(std::span<const IterationRecord> records, const TopicGroundTruth& topic,
               std::span<const std::string> doc_ids, const std::string& path) {
  const Layout layout = make_layout(records, topic, doc_ids);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write image " + path);
  auto hex = [](Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
    return std::string(buf);
  };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << layout.width
      << "\" height=\"" << layout.height << "\">\n";
  out << "<rect width=\"" << layout.width << "\" height=\"" << layout.height
      << "\" fill=\"" << hex(kBackground) << "\"/>\n";
  for (std::size_t p = 0; p < layout.panels; ++p) {
    const std::size_t x0 = kMargin + p * (kPanelWidth + kPanelGap);
    for (std::size_t r = 0; r < layout.rows.size(); ++r) {
      const Rgb color = cell_color(cell_state(records[p], layout.rows[r].doc_id));
      out << "<rect x=\"" << x0 << "\" y=\"" << layout.row_y[r] << "\" width=\""
          << kPanelWidth << "\" height=\"" << kRowHeight << "\" fill=\"" << hex(color)
          << "\"/>\n";
    }
    for (std::size_t y : layout.separator_y) {
      out << "<line x1=\"" << x0 << "\" y1=\"" << y << ".5\" x2=\"" << x0 + kPanelWidth
          << "\" y2=\"" << y << ".5\" stroke=\"" << hex(kSeparator)
          << "\" stroke-dasharray=\"1,1\"/>\n";
    }
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("failed writing image " + path);
}

}  // namespace

void export_exploration_image(std::span<const IterationRecord> records,
                              const TopicGroundTruth& topic,
                              std::span<const std::string> doc_ids,
                              const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".svg") == 0) {
    write_svg(records, topic, doc_ids, path);
  } else {
    write_ppm(render_exploration(records, topic, doc_ids), path);
  }
}

}  // namespace ce3
