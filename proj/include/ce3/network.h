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

#ifndef CE3_NETWORK_H_
#define CE3_NETWORK_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ce3/state.h"

namespace ce3 {

// conv(2x2, stride 1, valid, ReLU) x 2 -> flatten -> dense(ReLU) -> linear head.
struct NetworkShape {
  std::size_t in_rows = kPoolRows;
  std::size_t in_cols = kPoolCols;
  std::size_t in_channels = 3;
  std::size_t kernel = 2;
  std::size_t conv1_filters = 8;
  std::size_t conv2_filters = 16;
  std::size_t hidden = 32;
  std::size_t outputs = 3;
  // Policy networks carry one learnable log standard deviation per output.
  bool has_log_std = false;

  bool operator==(const NetworkShape&) const = default;
};

NetworkShape policy_shape(std::size_t action_dims);
NetworkShape value_shape(std::size_t input_channels);

enum class Layer : std::uint8_t { kConv1, kConv2, kHidden, kHead, kLogStd };
inline constexpr std::size_t kLayerCount = 5;

struct ParamRange {
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Flat parameter vector laid out layer by layer: weights then biases.
struct NetworkParams {
  NetworkShape shape;
  std::vector<double> values;

  bool operator==(const NetworkParams&) const = default;
};

// Activations kept from the forward pass for backward().
struct ForwardCache {
  Tensor3 input;
  std::vector<double> conv1_pre, conv1_out;
  std::vector<double> conv2_pre, conv2_out;
  std::vector<double> hidden_pre, hidden_out;
};

class Network {
 public:
  explicit Network(NetworkShape shape);

  const NetworkShape& shape() const { return shape_; }
  std::size_t parameter_count() const { return total_; }
  ParamRange range(Layer layer) const {
    return ranges_[static_cast<std::size_t>(layer)];
  }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, zero
  // log-std. Head weights are additionally multiplied by head_scale.
  NetworkParams init(std::uint64_t seed, double head_scale = 1.0) const;
  NetworkParams zeros() const;

  std::vector<double> forward(const NetworkParams& params, const Tensor3& input,
                              ForwardCache* cache = nullptr) const;

  // Accumulates d(upstream . outputs)/d(params) into grad. Layers flagged in
  // `frozen` receive no gradient.
  void backward(const NetworkParams& params, const ForwardCache& cache,
                std::span<const double> upstream, std::span<double> grad,
                std::span<const bool> frozen = {}) const;

  std::vector<double> backward(const NetworkParams& params,
                               const ForwardCache& cache,
                               std::span<const double> upstream) const;

  std::span<const double> log_std(const NetworkParams& params) const;

 private:
  void check(const NetworkParams& params) const;

  NetworkShape shape_;
  std::size_t conv1_rows_, conv1_cols_, conv2_rows_, conv2_cols_, flat_;
  ParamRange ranges_[kLayerCount];
  std::size_t total_ = 0;
};

}  // namespace ce3

#endif  // CE3_NETWORK_H_
