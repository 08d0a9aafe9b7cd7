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

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

namespace ce3 {
namespace {

namespace fs = std::filesystem;

// Four relevant documents over two subtopics (r1 in both), four irrelevant.
class VizTest : public ::testing::Test {
 protected:
  void SetUp() override {
    topic_.topic_id = "V";
    topic_.query = "q";
    topic_.subtopics = {320, 318};
    topic_.ratings["r0"] = Judgment{2, {320}, std::nullopt};
    topic_.ratings["r1"] = Judgment{4, {320, 318}, std::nullopt};
    topic_.ratings["r2"] = Judgment{1, {318}, std::nullopt};
    topic_.ratings["r3"] = Judgment{3, {318}, std::nullopt};
    topic_.ratings["i0"] = Judgment{-1, {}, std::nullopt};
    ids_ = {"i0", "i1", "i2", "i3", "r0", "r1", "r2", "r3"};
    dir_ = fs::temp_directory_path() / ("ce3_viz_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static IterationRecord record(int t, std::vector<std::string> visited,
                                std::vector<std::string> retrieved) {
    IterationRecord r;
    r.t = t;
    std::sort(visited.begin(), visited.end());
    r.visited = std::move(visited);
    for (std::size_t i = 0; i < retrieved.size(); ++i) {
      r.retrieved.push_back({retrieved[i], 0.0, i + 1});
    }
    return r;
  }

  TopicGroundTruth topic_;
  std::vector<std::string> ids_;
  fs::path dir_;
};

bool is_white(const Image& img, std::size_t x, std::size_t y) {
  const auto* p = &img.rgb[(y * img.width + x) * 3];
  return p[0] == 255 && p[1] == 255 && p[2] == 255;
}

// First column of the first panel (the first non-black pixel on any row).
std::size_t first_panel_column(const Image& img) {
  for (std::size_t x = 0; x < img.width; ++x) {
    for (std::size_t y = 0; y < img.height; ++y) {
      const auto* p = &img.rgb[(y * img.width + x) * 3];
      if (p[0] || p[1] || p[2]) return x;
    }
  }
  return img.width;
}

// Number of separate white bands down column x.
std::size_t white_bands(const Image& img, std::size_t x) {
  std::size_t bands = 0;
  bool inside = false;
  for (std::size_t y = 0; y < img.height; ++y) {
    const bool w = is_white(img, x, y);
    if (w && !inside) ++bands;
    inside = w;
  }
  return bands;
}

TEST_F(VizTest, RowsGroupRelevantFirst) {
  const auto rows = exploration_rows(topic_, ids_);
  ASSERT_EQ(rows.size(), 9u);  // r1 appears twice
  EXPECT_EQ(rows[0].doc_id, "r0");
  EXPECT_EQ(rows[0].group, 0);
  EXPECT_EQ(rows[1].doc_id, "r1");
  EXPECT_EQ(rows[2].doc_id, "r1");
  EXPECT_EQ(rows[2].group, 1);
  for (std::size_t i = 5; i < 9; ++i) EXPECT_EQ(rows[i].group, -1);
}

TEST_F(VizTest, RelevantOnlyEpisodeLightsTopHalf) {
  const std::vector<IterationRecord> records = {record(1, {}, {"r0", "r3"}),
                                                record(2, {"r0", "r3"}, {"r1", "r2"})};
  const auto img = render_exploration(records, topic_, ids_);
  // Where the irrelevant block starts: the first white row when only
  // irrelevant documents are selected.
  const std::vector<IterationRecord> irrelevant = {record(1, {}, {"i0", "i1", "i2", "i3"}),
                                                   record(2, {}, {"i0"})};
  const auto ref = render_exploration(irrelevant, topic_, ids_);
  ASSERT_EQ(ref.height, img.height);
  std::size_t boundary = ref.height;
  for (std::size_t y = 0; y < ref.height && boundary == ref.height; ++y) {
    for (std::size_t x = 0; x < ref.width; ++x) {
      if (is_white(ref, x, y)) {
        boundary = y;
        break;
      }
    }
  }
  ASSERT_LT(boundary, img.height);
  std::size_t above = 0, below = 0;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      if (is_white(img, x, y)) ++(y < boundary ? above : below);
    }
  }
  EXPECT_GT(above, 0u);
  EXPECT_EQ(below, 0u);
}

TEST_F(VizTest, MultiSubtopicDocHighlightedInBothGroups) {
  const std::vector<IterationRecord> records = {record(1, {}, {"r1"})};
  const auto img = render_exploration(records, topic_, ids_);
  EXPECT_EQ(white_bands(img, first_panel_column(img)), 2u);
}

TEST_F(VizTest, VisitedRowsAreDarkerThanUnvisited) {
  const std::vector<IterationRecord> records = {record(2, {"i0"}, {"r0"})};
  const auto img = render_exploration(records, topic_, ids_);
  const std::size_t x = first_panel_column(img);
  // Brightness of every painted row, top to bottom.
  std::vector<int> levels;
  for (std::size_t y = 0; y < img.height; ++y) {
    const auto* p = &img.rgb[(y * img.width + x) * 3];
    const int level = p[0] + p[1] + p[2];
    if (level > 0 && (levels.empty() || levels.back() != level)) levels.push_back(level);
  }
  // white (r0), unvisited, separators..., dark (i0) somewhere below.
  EXPECT_EQ(levels.front(), 765);
  EXPECT_LT(*std::min_element(levels.begin(), levels.end()), 100);
}

TEST_F(VizTest, ZeroIterationsStillWritesValidFile) {
  const auto path = (dir_ / "empty.ppm").string();
  export_exploration_image({}, topic_, ids_, path);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  EXPECT_EQ(magic, "P6");
  EXPECT_GT(w, 0u);
  EXPECT_GT(h, 0u);
  EXPECT_EQ(maxval, 255u);
  const std::string pixels((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(pixels.size(), w * h * 3);
}

TEST_F(VizTest, PpmMatchesRenderedImage) {
  const std::vector<IterationRecord> records = {record(1, {}, {"r0", "i1"})};
  const auto img = render_exploration(records, topic_, ids_);
  const auto path = (dir_ / "one.ppm").string();
  export_exploration_image(records, topic_, ids_, path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::ostringstream header;
  header << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  ASSERT_EQ(bytes.size(), header.str().size() + img.rgb.size());
  EXPECT_EQ(bytes.substr(0, header.str().size()), header.str());
  EXPECT_TRUE(std::equal(img.rgb.begin(), img.rgb.end(),
                         reinterpret_cast<const std::uint8_t*>(bytes.data()) + header.str().size()));
}

TEST_F(VizTest, SvgOutput) {
  const std::vector<IterationRecord> records = {record(1, {}, {"r1"})};
  const auto path = (dir_ / "one.svg").string();
  export_exploration_image(records, topic_, ids_, path);
  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text.rfind("<svg", 0), 0u);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
  // Two white cells for r1, one per subtopic group.
  std::size_t whites = 0;
  for (auto pos = text.find("#ffffff"); pos != std::string::npos;
       pos = text.find("#ffffff", pos + 1)) {
    ++whites;
  }
  EXPECT_EQ(whites, 2u);
}

TEST_F(VizTest, UnwritablePathReported) {
  const std::vector<IterationRecord> records = {record(1, {}, {"r0"})};
  EXPECT_THROW(export_exploration_image(records, topic_, ids_, "/nonexistent/dir/x.ppm"),
               std::runtime_error);
  EXPECT_THROW(export_exploration_image(records, topic_, ids_, "/nonexistent/dir/x.svg"),
               std::runtime_error);
}

}  // namespace
}  // namespace ce3
