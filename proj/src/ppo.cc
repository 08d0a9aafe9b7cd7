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

#include "ce3/ppo.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace ce3 {
namespace {

const double kLogTwoPi = std::log(2.0 * std::numbers::pi);
const double kMinLogRatio = std::log(1e-8);
const double kMaxLogRatio = std::log(1e8);

class Optimizer {
 public:
  Optimizer(const PPOConfig& config, std::size_t size)
      : adam_(config.optimizer == "adam"),
        lr_(config.learning_rate),
        m_(adam_ ? size : 0, 0.0),
        v_(adam_ ? size : 0, 0.0) {}

  // Descends on the loss, i.e. ascends on the objective.
  void step(std::vector<double>& params, const std::vector<double>& grad) {
    if (!adam_) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
      return;
    }
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  bool adam_;
  double lr_;
  std::vector<double> m_, v_;
  int t_ = 0;
};

void clip_norm(std::vector<double>& grad, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
}

template <typename T>
void put(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw std::runtime_error("checkpoint: truncated");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

constexpr char kMagic[8] = {'C', 'E', '3', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

void write_network(std::ostream& out, const NetworkParams& params) {
  const NetworkShape& s = params.shape;
  for (std::size_t v : {s.in_rows, s.in_cols, s.in_channels, s.kernel,
                        s.conv1_filters, s.conv2_filters, s.hidden, s.outputs}) {
    put<std::uint64_t>(out, v);
  }
  put<std::uint8_t>(out, s.has_log_std ? 1 : 0);
  put<std::uint64_t>(out, params.values.size());
  for (double v : params.values) put<double>(out, v);
}

NetworkParams read_network(std::istream& in) {
  NetworkParams params;
  NetworkShape& s = params.shape;
  for (std::size_t* field : {&s.in_rows, &s.in_cols, &s.in_channels, &s.kernel,
                             &s.conv1_filters, &s.conv2_filters, &s.hidden,
                             &s.outputs}) {
    *field = static_cast<std::size_t>(get<std::uint64_t>(in));
  }
  s.has_log_std = get<std::uint8_t>(in) != 0;
  const auto count = get<std::uint64_t>(in);
  if (count != Network(s).parameter_count()) {
    throw std::runtime_error("checkpoint: parameter count does not match shape");
  }
  params.values.resize(count);
  for (auto& v : params.values) v = get<double>(in);
  return params;
}

}  // namespace

double gaussian_log_prob(std::span<const double> action,
                         std::span<const double> mean,
                         std::span<const double> log_std) {
  if (action.size() != mean.size() || mean.size() != log_std.size()) {
    throw std::invalid_argument("gaussian_log_prob: size mismatch");
  }
  double lp = 0.0;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double z = (action[k] - mean[k]) * std::exp(-log_std[k]);
    lp += -0.5 * z * z - log_std[k] - 0.5 * kLogTwoPi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double s : log_std) h += 0.5 + 0.5 * kLogTwoPi + s;
  return h;
}

ActionSample sample_action(std::span<const double> mean,
                           std::span<const double> log_std,
                           std::mt19937_64& rng) {
  if (mean.size() != log_std.size()) {
    throw std::invalid_argument("sample_action: size mismatch");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample out;
  out.action.resize(mean.size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    out.action[k] = mean[k] + std::exp(log_std[k]) * normal(rng);
  }
  out.log_prob = gaussian_log_prob(out.action, mean, log_std);
  out.entropy = gaussian_entropy(log_std);
  return out;
}

double Trajectory::total_reward() const {
  double sum = 0.0;
  for (const auto& step : steps) sum += step.reward;
  return sum;
}

void compute_returns_advantages(Trajectory& trajectory, double gamma) {
  if (trajectory.steps.empty()) {
    throw std::invalid_argument("compute_returns_advantages: empty trajectory");
  }
  double running = 0.0;
  for (auto it = trajectory.steps.rbegin(); it != trajectory.steps.rend(); ++it) {
    running = it->reward + gamma * running;
    it->ret = running;
    it->advantage = running - it->value;
  }
}

void normalize_advantages(std::span<Trajectory> batch) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& traj : batch) {
    for (const auto& step : traj.steps) {
      sum += step.advantage;
      ++count;
    }
  }
  if (count == 0) return;
  const double mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (const auto& traj : batch) {
    for (const auto& step : traj.steps) {
      var += (step.advantage - mean) * (step.advantage - mean);
    }
  }
  const double stddev = std::sqrt(var / static_cast<double>(count));
  const double scale = stddev > 1e-8 ? 1.0 / stddev : 1.0;
  for (auto& traj : batch) {
    for (auto& step : traj.steps) step.advantage = (step.advantage - mean) * scale;
  }
}

double ppo_ratio(double log_prob_new, double log_prob_old) {
  return std::exp(std::clamp(log_prob_new - log_prob_old, kMinLogRatio, kMaxLogRatio));
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double policy_loss(std::span<const double> ratios,
                   std::span<const double> advantages, double epsilon) {
  if (ratios.size() != advantages.size()) {
    throw std::invalid_argument("policy_loss: size mismatch");
  }
  if (ratios.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    sum += clipped_surrogate(ratios[i], advantages[i], epsilon);
  }
  return -sum / static_cast<double>(ratios.size());
}

void PPOConfig::validate() const {
  // Values of epsilon >= 1 are accepted to allow running with clipping
  // effectively disabled.
  if (!(clip_epsilon > 0.0)) throw std::invalid_argument("PPOConfig: epsilon must be > 0");
  if (value_coef < 0.0 || entropy_coef < 0.0) {
    throw std::invalid_argument("PPOConfig: c1 and c2 must be >= 0");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("PPOConfig: learning rate must be > 0");
  if (epochs < 1 || episodes_per_batch < 1 || horizon < 1 || total_episodes < 1) {
    throw std::invalid_argument("PPOConfig: counts must be >= 1");
  }
  if (minibatch_size < 0) throw std::invalid_argument("PPOConfig: minibatch size must be >= 0");
  if (optimizer != "sga" && optimizer != "adam") {
    throw std::invalid_argument("PPOConfig: optimizer must be sga or adam");
  }
}

Agent::Agent(std::size_t action_dims, std::size_t pool_rows, std::size_t pool_cols)
    : policy_([&] {
        NetworkShape s = policy_shape(action_dims);
        s.in_rows = pool_rows;
        s.in_cols = pool_cols;
        return s;
      }()),
      value_([&] {
        NetworkShape s = value_shape(action_dims);
        s.in_rows = pool_rows;
        s.in_cols = pool_cols;
        return s;
      }()) {}

AgentParams Agent::init(std::uint64_t seed, double head_scale) const {
  return AgentParams{policy_.init(seed * 2 + 1, head_scale),
                     value_.init(seed * 2 + 2, 1.0)};
}

std::vector<double> Agent::mean(const AgentParams& params, const Tensor3& obs) const {
  return policy_.forward(params.policy, obs);
}

double Agent::value(const AgentParams& params, const Tensor3& obs) const {
  return value_.forward(params.value, obs)[0];
}

ActionSample Agent::act(const AgentParams& params, const Tensor3& obs,
                        std::mt19937_64& rng) const {
  auto m = mean(params, obs);
  return sample_action(m, policy_.log_std(params.policy), rng);
}

LossBreakdown total_loss(const Agent& agent, const AgentParams& params,
                         std::span<const Step* const> batch,
                         const PPOConfig& config, AgentGradients* grads) {
  LossBreakdown out;
  if (batch.empty()) return out;
  const Network& pnet = agent.policy_net();
  const Network& vnet = agent.value_net();
  const auto log_std = pnet.log_std(params.policy);
  const std::size_t dims = log_std.size();
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  if (grads) {
    grads->policy.assign(pnet.parameter_count(), 0.0);
    grads->value.assign(vnet.parameter_count(), 0.0);
  }
  std::vector<double> d_log_std(dims, 0.0);
  std::size_t clipped = 0;
  ForwardCache pcache, vcache;
  std::vector<double> upstream(dims);
  for (const Step* step : batch) {
    auto mean = pnet.forward(params.policy, step->state, grads ? &pcache : nullptr);
    const double lp = gaussian_log_prob(step->action, mean, log_std);
    const double delta = lp - step->log_prob_old;
    const double ratio = ppo_ratio(lp, step->log_prob_old);
    const double adv = step->advantage;
    const double unclipped = ratio * adv;
    const double surrogate = clipped_surrogate(ratio, adv, config.clip_epsilon);
    out.surrogate += surrogate;
    out.max_abs_log_ratio = std::max(out.max_abs_log_ratio, std::abs(delta));
    if (std::abs(ratio - 1.0) > config.clip_epsilon) ++clipped;

    const double value = vnet.forward(params.value, step->state,
                                      grads ? &vcache : nullptr)[0];
    const double err = value - step->ret;
    out.value_loss += err * err;

    if (!grads) continue;
    // d surrogate / d log_prob: only the unclipped branch carries gradient.
    const bool in_range = delta > kMinLogRatio && delta < kMaxLogRatio;
    const double g = (in_range && unclipped <= surrogate) ? unclipped : 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      const double inv_var = std::exp(-2.0 * log_std[k]);
      const double diff = step->action[k] - mean[k];
      upstream[k] = -inv_m * g * diff * inv_var;
      d_log_std[k] += -inv_m * g * (diff * diff * inv_var - 1.0);
    }
    if (g != 0.0) pnet.backward(params.policy, pcache, upstream, grads->policy);
    const double dv = inv_m * 2.0 * config.value_coef * err;
    vnet.backward(params.value, vcache, std::span<const double>(&dv, 1), grads->value);
  }
  out.surrogate *= inv_m;
  out.value_loss *= inv_m;
  out.entropy = gaussian_entropy(log_std);
  out.clip_fraction = static_cast<double>(clipped) * inv_m;
  out.objective = out.surrogate - config.value_coef * out.value_loss +
                  config.entropy_coef * out.entropy;
  out.loss = -out.objective;
  if (grads) {
    const auto r = pnet.range(Layer::kLogStd);
    for (std::size_t k = 0; k < dims; ++k) {
      grads->policy[r.offset + k] += d_log_std[k] - config.entropy_coef;
    }
  }
  return out;
}

Trajectory collect_episode(const Agent& agent, const AgentParams& params,
                           EpisodeEnvironment& env, int horizon,
                           std::mt19937_64& rng) {
  Trajectory traj;
  env.reset();
  for (int t = 0; t < horizon && !env.done(); ++t) {
    Step step;
    step.state = env.observe();
    ActionSample sample = agent.act(params, step.state, rng);
    step.value = agent.value(params, step.state);
    step.action = sample.action;
    step.log_prob_old = sample.log_prob;
    step.reward = env.step(sample.action);
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

TrainResult train(const Agent& agent, EpisodeEnvironment& env,
                  const PPOConfig& config) {
  config.validate();
  if (env.action_dims() != agent.action_dims()) {
    throw std::invalid_argument("train: environment and agent disagree on action size");
  }
  std::mt19937_64 rng(config.seed);
  AgentParams params = agent.init(config.seed, config.head_init_scale);
  Optimizer policy_opt(config, params.policy.values.size());
  Optimizer value_opt(config, params.value.values.size());

  TrainResult result;
  result.best_return = -std::numeric_limits<double>::infinity();
  int remaining = config.total_episodes;
  std::size_t batch_index = 0;
  while (remaining > 0) {
    const int episodes = std::min(remaining, config.episodes_per_batch);
    remaining -= episodes;
    std::vector<Trajectory> batch;
    double mean_return = 0.0;
    for (int e = 0; e < episodes; ++e) {
      batch.push_back(collect_episode(agent, params, env, config.horizon, rng));
      if (batch.back().steps.empty()) {
        throw std::runtime_error("train: environment produced an empty episode");
      }
      compute_returns_advantages(batch.back(), config.gamma);
      mean_return += batch.back().total_reward();
    }
    mean_return /= episodes;
    result.curve.push_back(mean_return);
    if (mean_return > result.best_return) {
      result.best_return = mean_return;
      result.params = params;
      result.best_batch = batch_index;
    }
    normalize_advantages(batch);

    std::vector<const Step*> steps;
    for (const auto& traj : batch) {
      for (const auto& step : traj.steps) steps.push_back(&step);
    }
    const std::size_t mb = config.minibatch_size > 0
                               ? static_cast<std::size_t>(config.minibatch_size)
                               : steps.size();
    AgentGradients grads;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(steps.begin(), steps.end(), rng);
      for (std::size_t start = 0; start < steps.size(); start += mb) {
        const std::size_t end = std::min(steps.size(), start + mb);
        std::span<const Step* const> slice(steps.data() + start, end - start);
        total_loss(agent, params, slice, config, &grads);
        clip_norm(grads.policy, config.max_grad_norm);
        clip_norm(grads.value, config.max_grad_norm);
        policy_opt.step(params.policy.values, grads.policy);
        value_opt.step(params.value.values, grads.value);
      }
    }
    for (double v : params.policy.values) {
      if (!std::isfinite(v)) throw std::runtime_error("train: policy diverged");
    }
    for (double v : params.value.values) {
      if (!std::isfinite(v)) throw std::runtime_error("train: value net diverged");
    }
    result.max_abs_log_ratio.push_back(
        total_loss(agent, params, steps, config).max_abs_log_ratio);
    ++batch_index;
  }
  result.final_params = params;
  return result;
}

std::uint64_t fingerprint(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

void write_checkpoint(std::ostream& out, const AgentParams& params,
                      std::uint64_t config_hash) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config_hash);
  write_network(out, params.policy);
  write_network(out, params.value);
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

AgentParams read_checkpoint(std::istream& in, std::uint64_t* config_hash) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto hash = get<std::uint64_t>(in);
  if (config_hash) *config_hash = hash;
  AgentParams params;
  params.policy = read_network(in);
  params.value = read_network(in);
  return params;
}

}  // namespace ce3
