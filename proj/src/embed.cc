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

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

namespace ce3 {
namespace {

constexpr double kAffinityFloor = 1e-12;
constexpr double kPerplexityTolerance = 1e-7;
constexpr int kMaxBisectionSteps = 500;

// Entropy (nats) of row i under precision beta, filling the row of `row`.
double conditional_row(const Matrix& d2, Eigen::Index i, double beta,
                       double min_dist, Matrix& row) {
  const Eigen::Index n = d2.cols();
  double sum = 0.0;
  double weighted = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) {
      row(i, j) = 0.0;
      continue;
    }
    double shifted = d2(i, j) - min_dist;
    double v = std::exp(-beta * shifted);
    row(i, j) = v;
    sum += v;
    weighted += shifted * v;
  }
  for (Eigen::Index j = 0; j < n; ++j) row(i, j) /= sum;
  return std::log(sum) + beta * weighted / sum;
}

}  // namespace

Matrix dense_features(std::span<const SegmentFeatures> features,
                      std::size_t dim) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(features.size()),
                            static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < features.size(); ++r) {
    for (const auto& [index, value] : features[r].weights.entries) {
      if (index >= dim) {
        throw std::invalid_argument("dense_features: index exceeds dimension");
      }
      out(static_cast<Eigen::Index>(r), index) = value;
    }
  }
  return out;
}

Matrix squared_distances(const Matrix& points) {
  const Eigen::Index n = points.rows();
  Eigen::VectorXd norms = points.rowwise().squaredNorm();
  Matrix gram = points * points.transpose();
  Matrix d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      d2(i, j) = i == j ? 0.0 : std::max(0.0, norms(i) + norms(j) - 2.0 * gram(i, j));
    }
  }
  return d2;
}

Bandwidths calibrate_bandwidths(const Matrix& squared_dist, double perplexity) {
  const Eigen::Index n = squared_dist.rows();
  if (n < 2 || squared_dist.cols() != n) {
    throw std::invalid_argument("calibrate_bandwidths: need a square N >= 2 matrix");
  }
  if (!squared_dist.allFinite()) {
    throw std::invalid_argument("calibrate_bandwidths: non-finite distance");
  }
  if (!(perplexity >= 1.0) || perplexity > static_cast<double>(n - 1)) {
    throw std::invalid_argument(
        "calibrate_bandwidths: perplexity must lie in [1, N-1]");
  }
  const double target = std::log(perplexity);
  Bandwidths out;
  out.sigma.resize(static_cast<std::size_t>(n));
  out.conditional = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double min_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) min_dist = std::min(min_dist, squared_dist(i, j));
    }
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double best_beta = beta;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int step = 0; step < kMaxBisectionSteps; ++step) {
      double entropy = conditional_row(squared_dist, i, beta, min_dist,
                                       out.conditional);
      double gap = std::exp(entropy) - perplexity;
      if (std::abs(gap) < best_gap) {
        best_gap = std::abs(gap);
        best_beta = beta;
      }
      if (std::abs(gap) < kPerplexityTolerance) break;
      if (entropy > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      if (beta > 1e300 || (hi - lo) < 1e-300) break;
    }
    conditional_row(squared_dist, i, best_beta, min_dist, out.conditional);
    out.sigma[static_cast<std::size_t>(i)] = std::sqrt(0.5 / best_beta);
  }
  return out;
}

AffinityMatrix high_dim_affinities(const Matrix& points, double perplexity) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw std::invalid_argument("high_dim_affinities: need N >= 2");
  Bandwidths bw = calibrate_bandwidths(squared_distances(points), perplexity);
  AffinityMatrix p(n, n);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    p(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = (bw.conditional(i, j) + bw.conditional(j, i)) * scale;
      v = std::max(v, kAffinityFloor);
      p(i, j) = v;
      p(j, i) = v;
      total += 2.0 * v;
    }
  }
  p /= total;
  return p;
}

AffinityMatrix low_dim_affinities(const Matrix& embedding) {
  const Eigen::Index n = embedding.rows();
  if (n < 2) throw std::invalid_argument("low_dim_affinities: need N >= 2");
  AffinityMatrix q(n, n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    q(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = 1.0 / (1.0 + (embedding.row(i) - embedding.row(j)).squaredNorm());
      q(i, j) = v;
      q(j, i) = v;
      total += 2.0 * v;
    }
  }
  q /= total;
  return q;
}

double kl_objective(const AffinityMatrix& p, const AffinityMatrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols() || p.rows() != p.cols()) {
    throw std::invalid_argument("kl_objective: dimension mismatch");
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (i == j || p(i, j) <= 0.0) continue;
      kl += p(i, j) * std::log(p(i, j) / q(i, j));
    }
  }
  return kl;
}

namespace {

// Gradient of KL(scale * P || Q) with respect to the layout; returns the
// normalizing constant of the kernel through `kernel_sum`.
Matrix tsne_gradient(const AffinityMatrix& p, const Matrix& y, double scale,
                     Matrix& kernel, double& kernel_sum) {
  const Eigen::Index n = y.rows();
  const Eigen::Index dims = y.cols();
  kernel_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    kernel(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (Eigen::Index k = 0; k < dims; ++k) {
        double diff = y(i, k) - y(j, k);
        d2 += diff * diff;
      }
      double w = 1.0 / (1.0 + d2);
      kernel(i, j) = w;
      kernel(j, i) = w;
      kernel_sum += 2.0 * w;
    }
  }
  Matrix grad = Matrix::Zero(n, dims);
  const double inv_sum = 1.0 / kernel_sum;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double w = kernel(i, j);
      double coeff = 4.0 * (scale * p(i, j) - w * inv_sum) * w;
      for (Eigen::Index k = 0; k < dims; ++k) {
        double g = coeff * (y(i, k) - y(j, k));
        grad(i, k) += g;
        grad(j, k) -= g;
      }
    }
  }
  return grad;
}

}  // namespace

Matrix kl_gradient(const AffinityMatrix& p, const Matrix& embedding) {
  Matrix kernel(embedding.rows(), embedding.rows());
  double kernel_sum = 0.0;
  return tsne_gradient(p, embedding, 1.0, kernel, kernel_sum);
}

TsneResult tsne_fit(const Matrix& points, const TsneConfig& config) {
  const Eigen::Index n = points.rows();
  if (n < 4) throw std::invalid_argument("tsne_fit: need N >= 4");
  if (config.dims < 1) throw std::invalid_argument("tsne_fit: dims must be >= 1");
  if (config.iterations < 1) {
    throw std::invalid_argument("tsne_fit: iterations must be >= 1");
  }
  if (!(config.perplexity > 0.0)) {
    throw std::invalid_argument("tsne_fit: perplexity must be positive");
  }
  TsneResult result;
  result.perplexity_used = std::max(
      1.0, std::min(config.perplexity, static_cast<double>(n - 1) / 3.0));
  AffinityMatrix p = high_dim_affinities(points, result.perplexity_used);

  const auto dims = static_cast<Eigen::Index>(config.dims);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.init_stddev);
  Matrix y(n, dims);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < dims; ++k) y(i, k) = normal(rng);
  }

  Matrix update = Matrix::Zero(n, dims);
  Matrix gains = Matrix::Ones(n, dims);
  Matrix kernel(n, n);
  double kernel_sum = 0.0;
  bool recorded = false;
  for (int iter = 0; iter < config.iterations; ++iter) {
    const bool exaggerating = iter < config.exaggeration_iterations;
    if (!exaggerating && !recorded) {
      result.objective_after_exaggeration = kl_objective(p, low_dim_affinities(y));
      recorded = true;
    }
    const double scale = exaggerating ? config.early_exaggeration : 1.0;
    const double momentum = iter < config.momentum_switch_iteration
                                ? config.initial_momentum
                                : config.final_momentum;
    Matrix grad = tsne_gradient(p, y, scale, kernel, kernel_sum);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < dims; ++k) {
        double& gain = gains(i, k);
        gain = (grad(i, k) > 0.0) != (update(i, k) > 0.0) ? gain + 0.2
                                                           : gain * 0.8;
        gain = std::max(gain, 0.01);
        update(i, k) = momentum * update(i, k) -
                       config.learning_rate * gain * grad(i, k);
        y(i, k) += update(i, k);
      }
    }
    y.rowwise() -= y.colwise().mean();
  }
  result.final_objective = kl_objective(p, low_dim_affinities(y));
  if (!recorded) result.objective_after_exaggeration = result.final_objective;
  if (!y.allFinite()) throw std::runtime_error("tsne_fit: diverged");
  result.embedding.coords = std::move(y);
  return result;
}

void normalize_embedding(Embedding& embedding) {
  Matrix& c = embedding.coords;
  for (Eigen::Index k = 0; k < c.cols(); ++k) {
    double lo = c.col(k).minCoeff();
    double hi = c.col(k).maxCoeff();
    if (hi - lo <= 0.0) {
      c.col(k).setZero();
      continue;
    }
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      c(i, k) = std::clamp(2.0 * (c(i, k) - lo) / (hi - lo) - 1.0, -1.0, 1.0);
    }
  }
}

SvdProjection truncated_svd(const Matrix& points, std::size_t dims) {
  const auto rank_cap = static_cast<std::size_t>(std::min(points.rows(), points.cols()));
  if (dims < 1 || dims > rank_cap) {
    throw std::invalid_argument("svd_compress: n must lie in [1, min(N, W)]");
  }
  Eigen::MatrixXd dense = points;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinV);
  const auto n = static_cast<Eigen::Index>(dims);
  Eigen::MatrixXd basis = svd.matrixV().leftCols(n);
  // Fix the sign of each component: largest-magnitude loading is positive.
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index arg = 0;
    basis.col(k).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, k) < 0.0) basis.col(k) *= -1.0;
  }
  SvdProjection out;
  out.basis = basis;
  out.embedding.coords = points * basis;
  return out;
}

Embedding svd_compress(const Matrix& points, std::size_t dims) {
  return truncated_svd(points, dims).embedding;
}

void write_embedding(std::ostream& out, const Embedding& embedding,
                     std::size_t segments) {
  if (segments == 0 || embedding.size() % segments != 0) {
    throw std::invalid_argument("write_embedding: rows not divisible by B");
  }
  out << "# ce3-embedding v1 " << embedding.size() / segments << ' ' << segments
      << ' ' << embedding.dims() << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < embedding.coords.rows(); ++r) {
    out << r / static_cast<Eigen::Index>(segments) << ' '
        << r % static_cast<Eigen::Index>(segments);
    for (Eigen::Index k = 0; k < embedding.coords.cols(); ++k) {
      std::snprintf(buf, sizeof(buf), " %a", embedding.coords(r, k));
      out << buf;
    }
    out << '\n';
  }
}

Embedding read_embedding(std::istream& in, std::size_t* segments) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("embedding cache: empty");
  std::istringstream header(line);
  std::string hash, tag, version;
  std::size_t docs = 0, segs = 0, dims = 0;
  header >> hash >> tag >> version >> docs >> segs >> dims;
  if (tag != "ce3-embedding" || version != "v1" || segs == 0 || dims == 0) {
    throw std::runtime_error("embedding cache: bad header");
  }
  Embedding out;
  out.coords = Matrix::Zero(static_cast<Eigen::Index>(docs * segs),
                            static_cast<Eigen::Index>(dims));
  std::vector<bool> seen(docs * segs, false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* cursor = line.c_str();
    char* end = nullptr;
    auto doc = std::strtoull(cursor, &end, 10);
    cursor = end;
    auto seg = std::strtoull(cursor, &end, 10);
    cursor = end;
    if (doc >= docs || seg >= segs) {
      throw std::runtime_error("embedding cache line " + std::to_string(line_no) +
                               ": key out of range");
    }
    const std::size_t row = doc * segs + seg;
    for (std::size_t k = 0; k < dims; ++k) {
      double v = std::strtod(cursor, &end);
      if (end == cursor) {
        throw std::runtime_error("embedding cache line " +
                                 std::to_string(line_no) + ": missing value");
      }
      cursor = end;
      out.coords(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(k)) = v;
    }
    seen[row] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw std::runtime_error("embedding cache: missing rows");
  }
  if (segments) *segments = segs;
  return out;
}

}  // namespace ce3
