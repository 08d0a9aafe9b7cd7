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

#include "ce3/network.h"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ce3 {

NetworkShape policy_shape(std::size_t action_dims) {
  NetworkShape shape;
  shape.in_channels = action_dims;
  shape.outputs = action_dims;
  shape.has_log_std = true;
  return shape;
}

NetworkShape value_shape(std::size_t input_channels) {
  NetworkShape shape;
  shape.in_channels = input_channels;
  shape.outputs = 1;
  return shape;
}

Network::Network(NetworkShape shape) : shape_(shape) {
  const std::size_t k = shape_.kernel;
  if (k == 0 || shape_.in_rows < 2 * k - 1 || shape_.in_cols < 2 * k - 1 ||
      shape_.in_channels == 0 || shape_.outputs == 0) {
    throw std::invalid_argument("Network: input too small for two conv layers");
  }
  conv1_rows_ = shape_.in_rows - k + 1;
  conv1_cols_ = shape_.in_cols - k + 1;
  conv2_rows_ = conv1_rows_ - k + 1;
  conv2_cols_ = conv1_cols_ - k + 1;
  flat_ = conv2_rows_ * conv2_cols_ * shape_.conv2_filters;

  const std::size_t sizes[kLayerCount] = {
      shape_.conv1_filters * (k * k * shape_.in_channels + 1),
      shape_.conv2_filters * (k * k * shape_.conv1_filters + 1),
      shape_.hidden * (flat_ + 1),
      shape_.outputs * (shape_.hidden + 1),
      shape_.has_log_std ? shape_.outputs : 0,
  };
  for (std::size_t i = 0; i < kLayerCount; ++i) {
    ranges_[i] = {total_, sizes[i]};
    total_ += sizes[i];
  }
}

NetworkParams Network::zeros() const {
  return NetworkParams{shape_, std::vector<double>(total_, 0.0)};
}

NetworkParams Network::init(std::uint64_t seed, double head_scale) const {
  NetworkParams params = zeros();
  std::mt19937_64 rng(seed);
  const std::size_t k = shape_.kernel;
  const std::size_t fan_in[4] = {k * k * shape_.in_channels,
                                 k * k * shape_.conv1_filters, flat_,
                                 shape_.hidden};
  const std::size_t units[4] = {shape_.conv1_filters, shape_.conv2_filters,
                                shape_.hidden, shape_.outputs};
  for (std::size_t layer = 0; layer < 4; ++layer) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in[layer]));
    if (layer == 3) bound *= head_scale;
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t offset = ranges_[layer].offset;
    for (std::size_t i = 0; i < units[layer] * fan_in[layer]; ++i) {
      params.values[offset + i] = dist(rng);
    }
  }
  return params;
}

void Network::check(const NetworkParams& params) const {
  if (params.shape != shape_ || params.values.size() != total_) {
    throw std::invalid_argument("Network: parameter shape mismatch");
  }
}

std::span<const double> Network::log_std(const NetworkParams& params) const {
  check(params);
  auto r = range(Layer::kLogStd);
  return std::span<const double>(params.values).subspan(r.offset, r.size);
}

std::vector<double> Network::forward(const NetworkParams& params,
                                     const Tensor3& input,
                                     ForwardCache* cache) const {
  check(params);
  if (input.rows != shape_.in_rows || input.cols != shape_.in_cols ||
      input.channels != shape_.in_channels) {
    throw std::invalid_argument("Network: input shape mismatch");
  }
  const std::size_t k = shape_.kernel;
  const double* p = params.values.data();
  const std::size_t cin = shape_.in_channels;
  const std::size_t f1 = shape_.conv1_filters;
  const std::size_t f2 = shape_.conv2_filters;

  // conv1
  std::vector<double> z1(conv1_rows_ * conv1_cols_ * f1);
  std::vector<double> a1(z1.size());
  {
    const double* w = p + ranges_[0].offset;
    const double* b = w + f1 * k * k * cin;
    for (std::size_t r = 0; r < conv1_rows_; ++r) {
      for (std::size_t c = 0; c < conv1_cols_; ++c) {
        for (std::size_t f = 0; f < f1; ++f) {
          double sum = b[f];
          const double* wf = w + f * k * k * cin;
          for (std::size_t kr = 0; kr < k; ++kr) {
            for (std::size_t kc = 0; kc < k; ++kc) {
              const double* x = &input.data[((r + kr) * shape_.in_cols + c + kc) * cin];
              const double* wk = wf + (kr * k + kc) * cin;
              for (std::size_t ch = 0; ch < cin; ++ch) sum += wk[ch] * x[ch];
            }
          }
          const std::size_t idx = (r * conv1_cols_ + c) * f1 + f;
          z1[idx] = sum;
          a1[idx] = sum > 0.0 ? sum : 0.0;
        }
      }
    }
  }
  // conv2
  std::vector<double> z2(conv2_rows_ * conv2_cols_ * f2);
  std::vector<double> a2(z2.size());
  {
    const double* w = p + ranges_[1].offset;
    const double* b = w + f2 * k * k * f1;
    for (std::size_t r = 0; r < conv2_rows_; ++r) {
      for (std::size_t c = 0; c < conv2_cols_; ++c) {
        for (std::size_t f = 0; f < f2; ++f) {
          double sum = b[f];
          const double* wf = w + f * k * k * f1;
          for (std::size_t kr = 0; kr < k; ++kr) {
            for (std::size_t kc = 0; kc < k; ++kc) {
              const double* x = &a1[((r + kr) * conv1_cols_ + c + kc) * f1];
              const double* wk = wf + (kr * k + kc) * f1;
              for (std::size_t ch = 0; ch < f1; ++ch) sum += wk[ch] * x[ch];
            }
          }
          const std::size_t idx = (r * conv2_cols_ + c) * f2 + f;
          z2[idx] = sum;
          a2[idx] = sum > 0.0 ? sum : 0.0;
        }
      }
    }
  }
  // dense hidden layer
  std::vector<double> z3(shape_.hidden);
  std::vector<double> a3(shape_.hidden);
  {
    const double* w = p + ranges_[2].offset;
    const double* b = w + shape_.hidden * flat_;
    for (std::size_t h = 0; h < shape_.hidden; ++h) {
      double sum = b[h];
      const double* wh = w + h * flat_;
      for (std::size_t i = 0; i < flat_; ++i) sum += wh[i] * a2[i];
      z3[h] = sum;
      a3[h] = sum > 0.0 ? sum : 0.0;
    }
  }
  // linear head
  std::vector<double> out(shape_.outputs);
  {
    const double* w = p + ranges_[3].offset;
    const double* b = w + shape_.outputs * shape_.hidden;
    for (std::size_t o = 0; o < shape_.outputs; ++o) {
      double sum = b[o];
      for (std::size_t h = 0; h < shape_.hidden; ++h) {
        sum += w[o * shape_.hidden + h] * a3[h];
      }
      out[o] = sum;
    }
  }
  if (cache) {
    cache->input = input;
    cache->conv1_pre = std::move(z1);
    cache->conv1_out = std::move(a1);
    cache->conv2_pre = std::move(z2);
    cache->conv2_out = std::move(a2);
    cache->hidden_pre = std::move(z3);
    cache->hidden_out = std::move(a3);
  }
  return out;
}

void Network::backward(const NetworkParams& params, const ForwardCache& cache,
                       std::span<const double> upstream, std::span<double> grad,
                       std::span<const bool> frozen) const {
  check(params);
  if (upstream.size() != shape_.outputs || grad.size() != total_) {
    throw std::invalid_argument("Network::backward: size mismatch");
  }
  auto is_frozen = [&](Layer layer) {
    auto i = static_cast<std::size_t>(layer);
    return i < frozen.size() && frozen[i];
  };
  const std::size_t k = shape_.kernel;
  const std::size_t cin = shape_.in_channels;
  const std::size_t f1 = shape_.conv1_filters;
  const std::size_t f2 = shape_.conv2_filters;
  const std::size_t hidden = shape_.hidden;
  const double* p = params.values.data();

  // head
  std::vector<double> d_hidden(hidden, 0.0);
  {
    const double* w = p + ranges_[3].offset;
    double* gw = grad.data() + ranges_[3].offset;
    double* gb = gw + shape_.outputs * hidden;
    for (std::size_t o = 0; o < shape_.outputs; ++o) {
      const double g = upstream[o];
      if (g == 0.0) continue;
      if (!is_frozen(Layer::kHead)) {
        for (std::size_t h = 0; h < hidden; ++h) {
          gw[o * hidden + h] += g * cache.hidden_out[h];
        }
        gb[o] += g;
      }
      for (std::size_t h = 0; h < hidden; ++h) d_hidden[h] += g * w[o * hidden + h];
    }
    for (std::size_t h = 0; h < hidden; ++h) {
      if (cache.hidden_pre[h] <= 0.0) d_hidden[h] = 0.0;
    }
  }
  // dense hidden layer
  std::vector<double> d_a2(flat_, 0.0);
  {
    const double* w = p + ranges_[2].offset;
    double* gw = grad.data() + ranges_[2].offset;
    double* gb = gw + hidden * flat_;
    for (std::size_t h = 0; h < hidden; ++h) {
      const double g = d_hidden[h];
      if (g == 0.0) continue;
      if (!is_frozen(Layer::kHidden)) {
        double* gwh = gw + h * flat_;
        for (std::size_t i = 0; i < flat_; ++i) gwh[i] += g * cache.conv2_out[i];
        gb[h] += g;
      }
      const double* wh = w + h * flat_;
      for (std::size_t i = 0; i < flat_; ++i) d_a2[i] += g * wh[i];
    }
  }
  // conv2
  std::vector<double> d_a1(conv1_rows_ * conv1_cols_ * f1, 0.0);
  {
    const double* w = p + ranges_[1].offset;
    double* gw = grad.data() + ranges_[1].offset;
    double* gb = gw + f2 * k * k * f1;
    const bool train = !is_frozen(Layer::kConv2);
    for (std::size_t r = 0; r < conv2_rows_; ++r) {
      for (std::size_t c = 0; c < conv2_cols_; ++c) {
        for (std::size_t f = 0; f < f2; ++f) {
          const std::size_t idx = (r * conv2_cols_ + c) * f2 + f;
          if (cache.conv2_pre[idx] <= 0.0) continue;
          const double g = d_a2[idx];
          if (g == 0.0) continue;
          if (train) gb[f] += g;
          for (std::size_t kr = 0; kr < k; ++kr) {
            for (std::size_t kc = 0; kc < k; ++kc) {
              const std::size_t base = ((r + kr) * conv1_cols_ + c + kc) * f1;
              const std::size_t woff = f * k * k * f1 + (kr * k + kc) * f1;
              for (std::size_t ch = 0; ch < f1; ++ch) {
                if (train) gw[woff + ch] += g * cache.conv1_out[base + ch];
                d_a1[base + ch] += g * w[woff + ch];
              }
            }
          }
        }
      }
    }
  }
  // conv1
  if (!is_frozen(Layer::kConv1)) {
    double* gw = grad.data() + ranges_[0].offset;
    double* gb = gw + f1 * k * k * cin;
    for (std::size_t r = 0; r < conv1_rows_; ++r) {
      for (std::size_t c = 0; c < conv1_cols_; ++c) {
        for (std::size_t f = 0; f < f1; ++f) {
          const std::size_t idx = (r * conv1_cols_ + c) * f1 + f;
          if (cache.conv1_pre[idx] <= 0.0) continue;
          const double g = d_a1[idx];
          if (g == 0.0) continue;
          gb[f] += g;
          for (std::size_t kr = 0; kr < k; ++kr) {
            for (std::size_t kc = 0; kc < k; ++kc) {
              const double* x =
                  &cache.input.data[((r + kr) * shape_.in_cols + c + kc) * cin];
              double* gk = gw + f * k * k * cin + (kr * k + kc) * cin;
              for (std::size_t ch = 0; ch < cin; ++ch) gk[ch] += g * x[ch];
            }
          }
        }
      }
    }
  }
}

std::vector<double> Network::backward(const NetworkParams& params,
                                      const ForwardCache& cache,
                                      std::span<const double> upstream) const {
  std::vector<double> grad(total_, 0.0);
  backward(params, cache, upstream, grad);
  return grad;
}

}  // namespace ce3
