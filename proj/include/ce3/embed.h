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

#ifndef CE3_EMBED_H_
#define CE3_EMBED_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ce3/corpus.h"

namespace ce3 {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// N x N symmetric probability matrix with a zero diagonal.
using AffinityMatrix = Matrix;

inline constexpr std::size_t kDefaultEmbeddingDims = 3;

// N x n low-dimensional coordinates; row r is (doc r / B, segment r % B).
struct Embedding {
  Matrix coords;
  std::size_t dims() const { return static_cast<std::size_t>(coords.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(coords.rows()); }
};

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iteration = 250;
  double init_stddev = 1e-4;
  std::size_t dims = kDefaultEmbeddingDims;
  std::uint64_t seed = 0;
};

struct Bandwidths {
  std::vector<double> sigma;
  // Row i holds p(j|i).
  Matrix conditional;
};

struct TsneResult {
  Embedding embedding;
  double objective_after_exaggeration = 0.0;
  double final_objective = 0.0;
  double perplexity_used = 0.0;
};

// Stacks sparse segment vectors into a dense N x dim matrix.
Matrix dense_features(std::span<const SegmentFeatures> features,
                      std::size_t dim);

Matrix squared_distances(const Matrix& points);

// Per-point Gaussian bandwidths found by bisection so that the conditional
// distribution's perplexity matches the target.
Bandwidths calibrate_bandwidths(const Matrix& squared_dist, double perplexity);

// p_ij = (p(j|i) + p(i|j)) / 2N, floored at 1e-12 off the diagonal and
// renormalized.
AffinityMatrix high_dim_affinities(const Matrix& points, double perplexity);

// Student-t kernel, normalized over all i != j.
AffinityMatrix low_dim_affinities(const Matrix& embedding);

double kl_objective(const AffinityMatrix& p, const AffinityMatrix& q);

// d KL(P || Q(Y)) / dY for the current layout.
Matrix kl_gradient(const AffinityMatrix& p, const Matrix& embedding);

// Exact-gradient t-SNE. The perplexity is capped at (N - 1) / 3.
TsneResult tsne_fit(const Matrix& points, const TsneConfig& config);

// Rescales each column affinely onto [-1, 1]. Constant columns map to 0.
void normalize_embedding(Embedding& embedding);

struct SvdProjection {
  Embedding embedding;
  Matrix basis;  // W x n right singular vectors
};

// Rank-n truncated SVD (no centering). Rejects n > min(N, W).
SvdProjection truncated_svd(const Matrix& points, std::size_t dims);
Embedding svd_compress(const Matrix& points, std::size_t dims);

// Text cache: one "doc_index segment_index c_1 .. c_n" line per point using
// hex floats so values round-trip exactly.
void write_embedding(std::ostream& out, const Embedding& embedding,
                     std::size_t segments);
Embedding read_embedding(std::istream& in, std::size_t* segments = nullptr);

}  // namespace ce3

#endif  // CE3_EMBED_H_
