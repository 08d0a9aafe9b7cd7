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

#include "ce3/embed.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "support/oracles.h"

namespace ce3 {
namespace {

// Two Gaussian blobs in `dim` dimensions, `per` points each, centers
// `separation` apart along the first axis.
Matrix two_clusters(std::size_t per, std::size_t dim, double separation, std::uint64_t seed,
                    std::vector<int>* labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(static_cast<Eigen::Index>(2 * per), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int label = i < static_cast<Eigen::Index>(per) ? 0 : 1;
    for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = noise(rng);
    x(i, 0) += label * separation;
    if (labels) labels->push_back(label);
  }
  return x;
}

// Diameter in units of the mean nearest-neighbour distance. t-SNE sets its
// own output scale, so raw diameters are not comparable across inputs.
double relative_diameter(const Matrix& y) {
  double diameter = 0.0;
  double nn_total = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    double nn = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      if (j == i) continue;
      const double d = (y.row(i) - y.row(j)).norm();
      diameter = std::max(diameter, d);
      nn = std::min(nn, d);
    }
    nn_total += nn;
  }
  return diameter / (nn_total / static_cast<double>(y.rows()));
}

TEST(Calibrate, TwoPointsHaveCertainNeighbour) {
  Matrix d(2, 2);
  d << 0, 4, 4, 0;
  const auto bw = calibrate_bandwidths(d, 1.0);
  EXPECT_DOUBLE_EQ(bw.conditional(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(bw.conditional(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(bw.conditional(0, 0), 0.0);
  for (double s : bw.sigma) EXPECT_TRUE(std::isfinite(s) && s > 0.0);
}

TEST(Calibrate, EquidistantSimplexIsUniform) {
  Matrix d = Matrix::Constant(4, 4, 2.0);
  d.diagonal().setZero();
  const auto bw = calibrate_bandwidths(d, 3.0);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (i != j) EXPECT_NEAR(bw.conditional(i, j), 1.0 / 3.0, 1e-12);
    }
  }
}

TEST(Calibrate, MatchesTargetPerplexity) {
  std::vector<int> labels;
  const Matrix x = two_clusters(8, 5, 3.0, 7, &labels);
  const auto bw = calibrate_bandwidths(squared_distances(x), 5.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double h = 0.0;
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      const double p = bw.conditional(i, j);
      if (p > 0.0) h -= p * std::log(p);
    }
    EXPECT_NEAR(std::exp(h), 5.0, 1e-5);
  }
}

TEST(Calibrate, ClustersKeepMassInside) {
  // Two clusters of 5: intra-cluster spacing ~1, clusters 10x further apart.
  Matrix x = Matrix::Zero(10, 2);
  for (int i = 0; i < 5; ++i) {
    x(i, 0) = std::cos(i * 1.2566);
    x(i, 1) = std::sin(i * 1.2566);
    x(i + 5, 0) = 20.0 + std::cos(i * 1.2566);
    x(i + 5, 1) = std::sin(i * 1.2566);
  }
  const auto bw = calibrate_bandwidths(squared_distances(x), 4.0);
  for (Eigen::Index i = 0; i < 10; ++i) {
    double inside = 0.0;
    for (Eigen::Index j = 0; j < 10; ++j) {
      if ((i < 5) == (j < 5)) inside += bw.conditional(i, j);
    }
    EXPECT_GT(inside, 0.9);
  }
}

TEST(Calibrate, RejectsBadInput) {
  Matrix d = Matrix::Zero(3, 3);
  EXPECT_THROW(calibrate_bandwidths(d, 0.5), std::invalid_argument);
  EXPECT_THROW(calibrate_bandwidths(d, 2.5), std::invalid_argument);
  d(0, 1) = std::nan("");
  EXPECT_THROW(calibrate_bandwidths(d, 1.5), std::invalid_argument);
}

TEST(HighDim, TwoPointsSplitEvenly) {
  Matrix x(2, 3);
  x << 0, 0, 0, 1, 2, 3;
  const auto p = high_dim_affinities(x, 1.0);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(p(1, 0), 0.5);
}

TEST(HighDim, SymmetricAndNormalized) {
  std::vector<int> labels;
  const Matrix x = two_clusters(6, 4, 2.0, 3, &labels);
  const auto p = high_dim_affinities(x, 3.0);
  EXPECT_TRUE(p.isApprox(p.transpose(), 0.0));
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  EXPECT_EQ(p.diagonal().cwiseAbs().sum(), 0.0);
}

TEST(HighDim, CollinearNearPairWins) {
  Matrix x(3, 1);
  x << 0.0, 1.0, 11.0;
  const auto p = high_dim_affinities(x, 1.5);
  EXPECT_GT(p(0, 1), p(1, 2));
  EXPECT_GT(p(0, 1), p(0, 2));
}

TEST(LowDim, CoincidentPair) {
  Matrix y = Matrix::Zero(2, 3);
  const auto q = low_dim_affinities(y);
  EXPECT_DOUBLE_EQ(q(0, 1), 0.5);
}

TEST(LowDim, EquilateralTriangle) {
  Matrix y(3, 2);
  y << 0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2.0;
  const auto q = low_dim_affinities(y);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) EXPECT_NEAR(q(i, j), 1.0 / 6.0, 1e-12);
    }
  }
}

TEST(LowDim, KernelRatioFiveToTwo) {
  Matrix y(3, 1);
  y << 0.0, 1.0, 3.0;  // pair (0,1) at distance 1, pair (1,2) at distance 2
  const auto q = low_dim_affinities(y);
  EXPECT_NEAR(q(0, 1) / q(1, 2), 5.0 / 2.0, 1e-12);
}

TEST(Kl, IdentityIsZero) {
  Matrix y(4, 2);
  y << 0, 0, 1, 0, 0, 2, 3, 1;
  const auto q = low_dim_affinities(y);
  EXPECT_NEAR(kl_objective(q, q), 0.0, 1e-15);
}

TEST(Kl, HandComputedValue) {
  Matrix p = Matrix::Zero(3, 3);
  Matrix q = Matrix::Zero(3, 3);
  p(0, 1) = 0.75;
  p(0, 2) = 0.25;
  q(0, 1) = 0.5;
  q(0, 2) = 0.5;
  const double expected = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
  EXPECT_NEAR(kl_objective(p, q), expected, 1e-15);
  EXPECT_NEAR(kl_objective(p, q), 0.1308, 1e-4);
}

TEST(Kl, NonNegativeOnRandomPairs) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x(5, 3), y(5, 2);
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index k = 0; k < 3; ++k) x(i, k) = g(rng);
      for (Eigen::Index k = 0; k < 2; ++k) y(i, k) = g(rng);
    }
    const auto p = high_dim_affinities(x, 1.2);
    EXPECT_GE(kl_objective(p, low_dim_affinities(y)), -1e-15);
  }
}

TEST(Kl, DimensionMismatchThrows) {
  EXPECT_THROW(kl_objective(Matrix::Zero(2, 2), Matrix::Zero(3, 3)), std::invalid_argument);
}

TEST(Kl, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x(5, 4), y(5, 3);
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index k = 0; k < 4; ++k) x(i, k) = g(rng);
      for (Eigen::Index k = 0; k < 3; ++k) y(i, k) = g(rng);
    }
    const auto p = high_dim_affinities(x, 1.3);
    const Matrix grad = kl_gradient(p, y);
    std::vector<double> flat(y.data(), y.data() + y.size());
    auto f = [&](const std::vector<double>& v) {
      Matrix yy = Eigen::Map<const Matrix>(v.data(), y.rows(), y.cols());
      return kl_objective(p, low_dim_affinities(yy));
    };
    std::vector<std::size_t> coords(flat.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    const auto numeric = testing::central_differences(f, flat, coords);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      EXPECT_LT(testing::relative_error(grad.data()[i], numeric[i]), 1e-4) << "coord " << i;
    }
  }
}

TEST(Tsne, SeparatesTwoClusters) {
  std::vector<int> labels;
  const Matrix x = two_clusters(10, 50, 10.0, 21, &labels);
  TsneConfig config;
  config.seed = 4;
  const auto result = tsne_fit(x, config);
  EXPECT_EQ(result.embedding.dims(), 3u);
  EXPECT_GE(testing::one_nn_purity(result.embedding.coords, labels), 0.9);
  EXPECT_DOUBLE_EQ(result.perplexity_used, 19.0 / 3.0);
  EXPECT_LE(result.final_objective, result.objective_after_exaggeration + 1e-9);
}

TEST(Tsne, NearDuplicatesCollapse) {
  std::vector<int> labels;
  TsneConfig config;
  config.seed = 9;
  const Matrix separated = two_clusters(10, 50, 10.0, 21, &labels);
  Matrix copies = Matrix::Zero(20, 50);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> jitter(0.0, 1e-6);
  for (Eigen::Index i = 0; i < copies.rows(); ++i) {
    copies(i, 0) = 1.0 + jitter(rng);
    copies(i, 1) = jitter(rng);
  }
  const double d_copies = relative_diameter(tsne_fit(copies, config).embedding.coords);
  const double d_separated = relative_diameter(tsne_fit(separated, config).embedding.coords);
  EXPECT_LT(d_copies, d_separated);
}

TEST(Tsne, DeterministicUnderSeed) {
  std::vector<int> labels;
  const Matrix x = two_clusters(5, 6, 4.0, 1, &labels);
  TsneConfig config;
  config.iterations = 300;
  config.seed = 77;
  const auto a = tsne_fit(x, config);
  const auto b = tsne_fit(x, config);
  EXPECT_TRUE(a.embedding.coords == b.embedding.coords);
}

TEST(Tsne, DefaultsToThreeDimensions) {
  TsneConfig config;
  EXPECT_EQ(config.dims, 3u);
  EXPECT_EQ(kDefaultEmbeddingDims, 3u);
}

TEST(Tsne, RejectsTinyInput) {
  EXPECT_THROW(tsne_fit(Matrix::Zero(3, 2), TsneConfig{}), std::invalid_argument);
}

TEST(Svd, RankOneReconstruction) {
  Eigen::VectorXd u(6), v(4);
  u << 1, 2, -1, 0.5, 3, 2;
  v << 0.5, -1, 2, 1;
  const Matrix x = u * v.transpose();
  const auto proj = truncated_svd(x, 1);
  const Matrix back = proj.embedding.coords * proj.basis.transpose();
  EXPECT_LT((back - x).norm(), 1e-10);
}

TEST(Svd, OrthonormalRowsKeepDistances) {
  Matrix x = Matrix::Zero(3, 5);
  x(0, 0) = 1.0;
  x(1, 2) = 1.0;
  x(2, 4) = 1.0;
  const auto y = svd_compress(x, 3).coords;
  const Matrix dx = squared_distances(x);
  const Matrix dy = squared_distances(y);
  EXPECT_LT((dx - dy).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Svd, RejectsTooManyDims) {
  EXPECT_THROW(svd_compress(Matrix::Zero(3, 2), 3), std::invalid_argument);
}

TEST(Svd, ClusterPurityIsReported) {
  std::vector<int> labels;
  const Matrix x = two_clusters(10, 50, 10.0, 21, &labels);
  const double purity = testing::one_nn_purity(svd_compress(x, 3).coords, labels);
  EXPECT_GE(purity, 0.0);
  EXPECT_LE(purity, 1.0);
}

TEST(Normalize, MapsColumnsOntoUnitRange) {
  Embedding e;
  e.coords = Matrix(3, 2);
  e.coords << 0, 5, 5, 5, 10, 5;
  normalize_embedding(e);
  EXPECT_DOUBLE_EQ(e.coords(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(e.coords(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(e.coords(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(e.coords(1, 1), 0.0);  // constant column
}

TEST(EmbeddingIo, RoundTripIsExact) {
  Embedding e;
  e.coords = Matrix(4, 3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < e.coords.size(); ++i) e.coords.data()[i] = g(rng);
  std::stringstream buffer;
  write_embedding(buffer, e, 2);
  std::size_t segments = 0;
  const auto back = read_embedding(buffer, &segments);
  EXPECT_EQ(segments, 2u);
  EXPECT_TRUE(back.coords == e.coords);
}

}  // namespace
}  // namespace ce3
