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
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

namespace ce3 {
namespace {

// C*B x n embedding with entries in [-1, 1]; row doc*B + b is segment b of doc.
Embedding random_embedding(std::size_t docs, std::size_t segments, std::size_t dims,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Embedding e;
  e.coords.resize(static_cast<Eigen::Index>(docs * segments), static_cast<Eigen::Index>(dims));
  for (Eigen::Index i = 0; i < e.coords.size(); ++i) e.coords.data()[i] = u(rng);
  return e;
}

std::vector<double> row_of(const Tensor3& t, std::size_t r) {
  std::vector<double> out;
  for (std::size_t c = 0; c < t.cols; ++c) {
    for (std::size_t k = 0; k < t.channels; ++k) out.push_back(t.at(r, c, k));
  }
  return out;
}

TEST(GlobalRep, SingleDocumentIsItsSegments) {
  const auto e = random_embedding(1, 20, 3, 1);
  const auto rep = build_global_rep(e, 1, 20);
  for (std::size_t b = 0; b < 20; ++b) {
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_EQ(rep.values.at(0, b, k),
                e.coords(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)));
    }
  }
}

TEST(GlobalRep, ToyCorpusShape) {
  const auto rep = build_global_rep(random_embedding(5, 20, 3, 2), 5, 20);
  EXPECT_EQ(rep.documents(), 5u);
  EXPECT_EQ(rep.segments(), 20u);
  EXPECT_EQ(rep.dims(), 3u);
  EXPECT_EQ(rep.values.data.size(), 300u);
}

TEST(GlobalRep, ReversedOrderPermutesRows) {
  const auto e = random_embedding(5, 4, 3, 3);
  const std::vector<std::size_t> reversed = {4, 3, 2, 1, 0};
  const auto a = build_global_rep(e, 5, 4);
  const auto b = build_global_rep(e, 5, 4, reversed);
  EXPECT_EQ(b.doc_order, reversed);
  for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(row_of(a.values, r), row_of(b.values, 4 - r));
}

TEST(GlobalRep, RowMultisetInvariantUnderAnyOrder) {
  const auto e = random_embedding(7, 3, 2, 4);
  std::vector<std::size_t> order = {0, 1, 2, 3, 4, 5, 6};
  std::mt19937_64 rng(5);
  std::vector<std::vector<double>> base;
  const auto identity = build_global_rep(e, 7, 3);
  for (std::size_t r = 0; r < 7; ++r) base.push_back(row_of(identity.values, r));
  std::sort(base.begin(), base.end());
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    const auto rep = build_global_rep(e, 7, 3, order);
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < 7; ++r) rows.push_back(row_of(rep.values, r));
    std::sort(rows.begin(), rows.end());
    EXPECT_EQ(rows, base);
  }
}

TEST(GlobalRep, ShapeMismatchRejected) {
  const auto e = random_embedding(5, 20, 3, 6);
  EXPECT_THROW(build_global_rep(e, 4, 20), std::invalid_argument);
  const std::vector<std::size_t> bad = {0, 1, 1, 2, 3};
  EXPECT_THROW(build_global_rep(e, 5, 20, bad), std::invalid_argument);
  const std::vector<std::size_t> short_order = {0, 1};
  EXPECT_THROW(build_global_rep(e, 5, 20, short_order), std::invalid_argument);
}

class MarkVisitedTest : public ::testing::Test {
 protected:
  SearchState state_ = initial_state(build_global_rep(random_embedding(5, 20, 3, 7), 5, 20));
};

TEST_F(MarkVisitedTest, EmptySetOnlyAdvancesTime) {
  const auto next = mark_visited(state_, {});
  EXPECT_EQ(next.t, state_.t + 1);
  EXPECT_EQ(next.visited, state_.visited);
  EXPECT_EQ(next.rep.values, state_.rep.values);
}

TEST_F(MarkVisitedTest, Idempotent) {
  const std::vector<std::size_t> two = {2};
  const auto once = mark_visited(state_, two);
  const auto twice = mark_visited(once, two);
  EXPECT_EQ(once.rep.values, twice.rep.values);
  EXPECT_EQ(twice.visited_count(), 1u);
}

TEST_F(MarkVisitedTest, SentinelCountIsTwoBn) {
  const std::vector<std::size_t> rows = {1, 3};
  const auto next = mark_visited(state_, rows);
  const auto sentinels =
      std::count(next.rep.values.data.begin(), next.rep.values.data.end(), kVisitedSentinel);
  EXPECT_EQ(sentinels, 2 * 20 * 3);
  EXPECT_EQ(std::count(state_.rep.values.data.begin(), state_.rep.values.data.end(),
                       kVisitedSentinel),
            0);
}

TEST_F(MarkVisitedTest, UnvisitedRowsUntouched) {
  const std::vector<std::size_t> rows = {0, 4};
  const auto next = mark_visited(state_, rows);
  for (std::size_t r : {1, 2, 3}) {
    EXPECT_EQ(row_of(next.rep.values, r), row_of(state_.rep.values, r));
  }
  EXPECT_FALSE(state_.visited[0]);  // the input state is not modified
}

TEST_F(MarkVisitedTest, OutOfRangeRejected) {
  const std::vector<std::size_t> rows = {5};
  EXPECT_THROW(mark_visited(state_, rows), std::out_of_range);
}

TEST(Sentinel, OutsideNormalizedRange) { EXPECT_LT(kVisitedSentinel, -1.0); }

TEST(Pool, IdentityWhenGridMatches) {
  const auto state = initial_state(build_global_rep(random_embedding(32, 20, 3, 8), 32, 20));
  EXPECT_EQ(pool_state(state), state.rep.values);
}

TEST(Pool, ConstantStaysConstant) {
  Tensor3 t(13, 7, 2, 0.25);
  const auto out = pool_tensor(t, 32, 20);
  for (double v : out.data) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Pool, FourRowsToTwoAveragesPairs) {
  Tensor3 t(4, 3, 2);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t k = 0; k < 2; ++k) t.at(r, c, k) = 10.0 * r + c + 0.5 * k;
    }
  }
  const auto out = pool_tensor(t, 2, 3);
  ASSERT_EQ(out.rows, 2u);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_DOUBLE_EQ(out.at(0, c, k), (t.at(0, c, k) + t.at(1, c, k)) / 2.0);
      EXPECT_DOUBLE_EQ(out.at(1, c, k), (t.at(2, c, k) + t.at(3, c, k)) / 2.0);
    }
  }
}

TEST(Pool, FewerRowsThanBinsRepeatsRows) {
  Tensor3 t(2, 1, 1);
  t.at(0, 0, 0) = 1.0;
  t.at(1, 0, 0) = 3.0;
  const auto out = pool_tensor(t, 4, 1);
  EXPECT_EQ(out.data, (std::vector<double>{1.0, 1.0, 3.0, 3.0}));
}

TEST(Pool, EmptyGridRejected) {
  Tensor3 t(2, 2, 1);
  EXPECT_THROW(pool_tensor(t, 0, 2), std::invalid_argument);
}

}  // namespace
}  // namespace ce3
