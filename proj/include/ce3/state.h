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

#ifndef CE3_STATE_H_
#define CE3_STATE_H_

#include <cstddef>
#include <span>
#include <vector>

#include "ce3/embed.h"

namespace ce3 {

// Marker written over every channel of a visited document.
inline constexpr double kVisitedSentinel = -2.0;

inline constexpr std::size_t kPoolRows = 32;
inline constexpr std::size_t kPoolCols = 20;

// Dense rows x cols x channels tensor, channel-fastest layout.
struct Tensor3 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t r, std::size_t c, std::size_t ch, double fill = 0.0)
      : rows(r), cols(c), channels(ch), data(r * c * ch, fill) {}

  double& at(std::size_t r, std::size_t c, std::size_t ch) {
    return data[(r * cols + c) * channels + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch) const {
    return data[(r * cols + c) * channels + ch];
  }
  bool operator==(const Tensor3&) const = default;
};

// C x B x n stack of compressed segment vectors. Row i holds document
// doc_order[i].
struct GlobalRep {
  Tensor3 values;
  std::vector<std::size_t> doc_order;

  std::size_t documents() const { return values.rows; }
  std::size_t segments() const { return values.cols; }
  std::size_t dims() const { return values.channels; }
};

// Immutable search state: the representation with visited rows overwritten
// by the sentinel. Row indices are the document handles.
struct SearchState {
  GlobalRep rep;
  std::vector<bool> visited;
  int t = 1;

  std::size_t visited_count() const;
};

GlobalRep build_global_rep(const Embedding& embedding, std::size_t documents,
                           std::size_t segments,
                           std::span<const std::size_t> doc_order);

// Identity stacking order.
GlobalRep build_global_rep(const Embedding& embedding, std::size_t documents,
                           std::size_t segments);

SearchState initial_state(GlobalRep rep);

// Returns the successor state: t + 1, visited set unioned, sentinel written
// over each newly visited row.
SearchState mark_visited(const SearchState& state,
                         std::span<const std::size_t> rows);

// Adaptive average pooling of the C x B grid onto rows x cols bins with bin
// i spanning [floor(i*C/rows), floor((i+1)*C/rows)). When C < rows an empty
// bin takes the single row floor(i*C/rows).
Tensor3 pool_state(const SearchState& state, std::size_t rows = kPoolRows,
                   std::size_t cols = kPoolCols);
Tensor3 pool_tensor(const Tensor3& input, std::size_t rows, std::size_t cols);

}  // namespace ce3

#endif  // CE3_STATE_H_
