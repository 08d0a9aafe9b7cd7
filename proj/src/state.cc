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

#include "ce3/state.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ce3 {

std::size_t SearchState::visited_count() const {
  return static_cast<std::size_t>(std::count(visited.begin(), visited.end(), true));
}

GlobalRep build_global_rep(const Embedding& embedding, std::size_t documents,
                           std::size_t segments,
                           std::span<const std::size_t> doc_order) {
  if (documents == 0 || segments == 0) {
    throw std::invalid_argument("build_global_rep: C and B must be positive");
  }
  if (embedding.size() != documents * segments) {
    throw std::invalid_argument("build_global_rep: embedding has " +
                                std::to_string(embedding.size()) +
                                " rows, expected C*B");
  }
  if (doc_order.size() != documents) {
    throw std::invalid_argument("build_global_rep: doc_order has wrong length");
  }
  std::vector<bool> used(documents, false);
  for (auto d : doc_order) {
    if (d >= documents || used[d]) {
      throw std::invalid_argument("build_global_rep: doc_order is not a permutation");
    }
    used[d] = true;
  }
  const std::size_t dims = embedding.dims();
  GlobalRep rep;
  rep.values = Tensor3(documents, segments, dims);
  rep.doc_order.assign(doc_order.begin(), doc_order.end());
  for (std::size_t row = 0; row < documents; ++row) {
    const std::size_t doc = doc_order[row];
    for (std::size_t b = 0; b < segments; ++b) {
      const auto src = static_cast<Eigen::Index>(doc * segments + b);
      for (std::size_t k = 0; k < dims; ++k) {
        rep.values.at(row, b, k) = embedding.coords(src, static_cast<Eigen::Index>(k));
      }
    }
  }
  return rep;
}

GlobalRep build_global_rep(const Embedding& embedding, std::size_t documents,
                           std::size_t segments) {
  std::vector<std::size_t> order(documents);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return build_global_rep(embedding, documents, segments, order);
}

SearchState initial_state(GlobalRep rep) {
  SearchState state;
  state.visited.assign(rep.documents(), false);
  state.rep = std::move(rep);
  return state;
}

SearchState mark_visited(const SearchState& state,
                         std::span<const std::size_t> rows) {
  const std::size_t documents = state.rep.documents();
  for (auto r : rows) {
    if (r >= documents) {
      throw std::out_of_range("mark_visited: document index " +
                              std::to_string(r) + " out of range");
    }
  }
  SearchState next = state;
  next.t = state.t + 1;
  Tensor3& values = next.rep.values;
  for (auto r : rows) {
    if (next.visited[r]) continue;
    next.visited[r] = true;
    for (std::size_t b = 0; b < values.cols; ++b) {
      for (std::size_t k = 0; k < values.channels; ++k) {
        values.at(r, b, k) = kVisitedSentinel;
      }
    }
  }
  return next;
}

namespace {

std::pair<std::size_t, std::size_t> bin_bounds(std::size_t i, std::size_t n,
                                               std::size_t bins) {
  std::size_t lo = i * n / bins;
  std::size_t hi = (i + 1) * n / bins;
  if (hi <= lo) hi = std::min(lo + 1, n);
  return {lo, hi};
}

}  // namespace

Tensor3 pool_tensor(const Tensor3& input, std::size_t rows, std::size_t cols) {
  if (input.rows == 0 || input.cols == 0) {
    throw std::invalid_argument("pool_state: empty input");
  }
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("pool_state: grid must be positive");
  }
  Tensor3 out(rows, cols, input.channels);
  for (std::size_t i = 0; i < rows; ++i) {
    auto [r0, r1] = bin_bounds(i, input.rows, rows);
    for (std::size_t j = 0; j < cols; ++j) {
      auto [c0, c1] = bin_bounds(j, input.cols, cols);
      const double count = static_cast<double>((r1 - r0) * (c1 - c0));
      for (std::size_t k = 0; k < input.channels; ++k) {
        double sum = 0.0;
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) sum += input.at(r, c, k);
        }
        out.at(i, j, k) = sum / count;
      }
    }
  }
  return out;
}

Tensor3 pool_state(const SearchState& state, std::size_t rows, std::size_t cols) {
  return pool_tensor(state.rep.values, rows, cols);
}

}  // namespace ce3
