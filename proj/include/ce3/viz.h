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

#ifndef CE3_VIZ_H_
#define CE3_VIZ_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ce3/episode.h"
#include "ce3/sim.h"

namespace ce3 {

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

// Row layout of the exploration picture: relevant documents grouped by
// subtopic (a document appears once per subtopic it belongs to), then the
// irrelevant documents. `group` is -1 for the irrelevant block.
struct ExplorationRow {
  std::string doc_id;
  int group = -1;
};
std::vector<ExplorationRow> exploration_rows(const TopicGroundTruth& topic,
                                             std::span<const std::string> doc_ids);

// One panel per iteration. Previously visited documents are dark, the
// current selection is white, dotted turquoise lines separate the groups.
Image render_exploration(std::span<const IterationRecord> records,
                         const TopicGroundTruth& topic,
                         std::span<const std::string> doc_ids);

// Binary PPM (P6), or SVG when the path ends in ".svg".
void export_exploration_image(std::span<const IterationRecord> records,
                              const TopicGroundTruth& topic,
                              std::span<const std::string> doc_ids,
                              const std::string& path);

void write_ppm(const Image& image, const std::string& path);

}  // namespace ce3

#endif  // CE3_VIZ_H_
