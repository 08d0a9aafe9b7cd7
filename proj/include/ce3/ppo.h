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

#ifndef CE3_PPO_H_
#define CE3_PPO_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ce3/network.h"
#include "ce3/state.h"

namespace ce3 {

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
  double entropy = 0.0;
};

// Diagonal Gaussian with per-dimension log standard deviations.
double gaussian_log_prob(std::span<const double> action,
                         std::span<const double> mean,
                         std::span<const double> log_std);
double gaussian_entropy(std::span<const double> log_std);
ActionSample sample_action(std::span<const double> mean,
                           std::span<const double> log_std,
                           std::mt19937_64& rng);

struct Step {
  Tensor3 state;  // pooled network input
  std::vector<double> action;
  double log_prob_old = 0.0;
  double reward = 0.0;
  double value = 0.0;
  double ret = 0.0;
  double advantage = 0.0;
};

struct Trajectory {
  std::vector<Step> steps;
  double total_reward() const;
};

// G_t = sum_k gamma^(k-t) r_k and raw advantages G_t - V(s_t).
void compute_returns_advantages(Trajectory& trajectory, double gamma);

// Zero-mean, unit-variance advantages across every step of the batch.
void normalize_advantages(std::span<Trajectory> batch);

// exp(new - old) with the log-ratio clamped to [ln 1e-8, ln 1e8].
double ppo_ratio(double log_prob_new, double log_prob_old);

// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A) for one sample.
double clipped_surrogate(double ratio, double advantage, double epsilon);

// Negated batch mean of the clipped surrogate.
double policy_loss(std::span<const double> ratios,
                   std::span<const double> advantages, double epsilon);

struct PPOConfig {
  double clip_epsilon = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double learning_rate = 3e-4;
  int epochs = 4;
  int episodes_per_batch = 8;
  int horizon = 10;
  int total_episodes = 200;
  double gamma = 1.0;
  // 0 means one full-batch step per epoch.
  int minibatch_size = 0;
  // Global-norm gradient clipping per network; 0 disables.
  double max_grad_norm = 0.0;
  // "sga" (plain stochastic gradient ascent) or "adam".
  std::string optimizer = "sga";
  double head_init_scale = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AgentParams {
  NetworkParams policy;
  NetworkParams value;

  bool operator==(const AgentParams&) const = default;
};

class Agent {
 public:
  Agent(std::size_t action_dims, std::size_t pool_rows = kPoolRows,
        std::size_t pool_cols = kPoolCols);

  const Network& policy_net() const { return policy_; }
  const Network& value_net() const { return value_; }
  std::size_t action_dims() const { return policy_.shape().outputs; }

  AgentParams init(std::uint64_t seed, double head_scale) const;

  std::vector<double> mean(const AgentParams& params, const Tensor3& obs) const;
  double value(const AgentParams& params, const Tensor3& obs) const;
  ActionSample act(const AgentParams& params, const Tensor3& obs,
                   std::mt19937_64& rng) const;

 private:
  Network policy_;
  Network value_;
};

struct LossBreakdown {
  double loss = 0.0;       // quantity minimized: -(objective)
  double objective = 0.0;  // E[L_policy - c1 L_value + c2 S]
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double max_abs_log_ratio = 0.0;
  double clip_fraction = 0.0;
};

struct AgentGradients {
  std::vector<double> policy;
  std::vector<double> value;
};

// Loss and (optionally) its exact gradients over a batch of steps.
LossBreakdown total_loss(const Agent& agent, const AgentParams& params,
                         std::span<const Step* const> batch,
                         const PPOConfig& config,
                         AgentGradients* grads = nullptr);

// One episode of interaction the trainer can drive.
class EpisodeEnvironment {
 public:
  virtual ~EpisodeEnvironment() = default;
  virtual std::size_t action_dims() const = 0;
  virtual void reset() = 0;
  virtual bool done() const = 0;
  virtual Tensor3 observe() const = 0;
  // Applies the action and returns the immediate reward.
  virtual double step(std::span<const double> action) = 0;
};

Trajectory collect_episode(const Agent& agent, const AgentParams& params,
                           EpisodeEnvironment& env, int horizon,
                           std::mt19937_64& rng);

struct TrainResult {
  AgentParams params;        // parameters with the best batch mean return
  AgentParams final_params;
  std::vector<double> curve;  // mean episode return per batch
  std::vector<double> max_abs_log_ratio;  // per batch update
  std::size_t best_batch = 0;
  double best_return = 0.0;
};

TrainResult train(const Agent& agent, EpisodeEnvironment& env,
                  const PPOConfig& config);

// 64-bit FNV-1a; stable across platforms.
std::uint64_t fingerprint(std::string_view text);

// Versioned binary checkpoint: magic, version, config hash, both networks.
void write_checkpoint(std::ostream& out, const AgentParams& params,
                      std::uint64_t config_hash);
AgentParams read_checkpoint(std::istream& in, std::uint64_t* config_hash = nullptr);

}  // namespace ce3

#endif  // CE3_PPO_H_
