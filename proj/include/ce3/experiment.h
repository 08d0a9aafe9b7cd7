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

#ifndef CE3_EXPERIMENT_H_
#define CE3_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ce3/corpus.h"
#include "ce3/embed.h"
#include "ce3/episode.h"
#include "ce3/eval.h"
#include "ce3/ppo.h"
#include "ce3/sim.h"
#include "ce3/synthetic.h"

namespace ce3 {

// Systems compared by an experiment, in report order.
inline constexpr const char* kSystemCe3 = "ce3";
inline constexpr const char* kSystemCe3Svd = "ce3-svd";
inline constexpr const char* kSystemStatic = "static";
inline constexpr const char* kSystemRf = "rf";
inline constexpr const char* kSystemRandom = "random";
inline constexpr const char* kSystemHeldout = "ce3-heldout";

// PPO settings used by experiments: Adam with minibatches. Plain SGA at
// 3e-4 barely moves the policy within a 200-episode budget.
PPOConfig default_experiment_ppo();

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t topics = 5;
  std::size_t eval_seeds = 3;
  // Extra topics evaluated with an agent trained on another topic.
  std::size_t heldout_topics = 0;
  int iterations = 10;  // T
  std::size_t k = kDefaultResultsPerIteration;
  // Irrelevant documents per relevant document.
  double mix_ratio = 1.0;
  // Compressor of the main agent; the other one is trained as "ce3-svd"
  // (or "ce3-tsne") when compare_compressors is set.
  std::string compressor = "tsne";
  bool compare_compressors = true;
  bool allow_duplicates = false;
  std::size_t segments = kDefaultSegments;  // B
  std::size_t dims = kDefaultEmbeddingDims;  // n
  SyntheticTopicSpec synthetic;
  TsneConfig tsne;
  PPOConfig ppo = default_experiment_ppo();
  MetricConfig metric;
  std::string output_dir = "ce3-out";
  std::size_t threads = 1;
  bool images = true;

  void validate() const;

  // Canonical JSON (sorted keys); also the input of config_hash.
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  std::uint64_t config_hash() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const ExperimentConfig& config, const std::string& path);

// Topic ids are "SYN-<i>"; topics [topics, topics + heldout_topics) are
// held out.
std::string topic_id(std::size_t index);
std::size_t total_topics(const ExperimentConfig& config);
SyntheticTopic make_topic(const ExperimentConfig& config, std::size_t index);

// Text-side assets of a topic. Representation row r holds document
// doc_order[r]; row vectors and ids follow the row order.
struct TopicIndex {
  std::string topic_id;
  std::vector<Document> docs;
  TopicGroundTruth truth;
  std::vector<SegmentedDocument> segmented;
  Vocabulary vocab;
  std::vector<SegmentFeatures> features;
  std::vector<std::size_t> doc_order;
  std::vector<std::string> row_doc_ids;
  std::vector<SparseVector> row_vectors;
  SparseVector query;

  // TF-IDF vector used as feedback for one judged document: its passage
  // when present, else the whole document.
  SparseVector feedback_vector(const FeedbackEntry& entry) const;
};

TopicIndex index_topic(const ExperimentConfig& config, std::vector<Document> docs,
                       TopicGroundTruth truth);

// Normalized C*B x n embedding of the topic's segments.
Embedding compress_topic(const ExperimentConfig& config, const TopicIndex& index,
                         const std::string& compressor);

SearchEnvironment make_environment(const ExperimentConfig& config,
                                   const TopicIndex& index, const Embedding& embedding,
                                   bool allow_duplicates);

struct TrainedAgent {
  std::string compressor;
  AgentParams params;
  std::vector<double> curve;
  std::size_t best_batch = 0;
  double best_return = 0.0;
};

TrainedAgent train_topic(const ExperimentConfig& config, const TopicIndex& index,
                         const Embedding& embedding, const std::string& compressor,
                         std::size_t topic_index);

struct EpisodeOutcome {
  std::string system;
  std::string topic_id;
  std::size_t eval_seed = 0;
  std::vector<IterationRecord> records;
  MetricSeries metrics;
  double total_reward = 0.0;
  double reward_bound = 0.0;  // topic's positive rating mass
};

// A drop is an iteration whose batch precision is below 0.2 while at least
// ceil(k/2) relevant documents are still unretrieved and a later iteration
// exists; the episode recovers if some later batch precision exceeds 0.5.
struct RecoveryStats {
  std::size_t episodes_with_drop = 0;
  std::size_t recovered = 0;
  double rate() const {
    return episodes_with_drop ? static_cast<double>(recovered) / episodes_with_drop : 1.0;
  }
};
void accumulate_recovery(const EpisodeOutcome& episode, std::size_t relevant_total,
                         std::size_t k, RecoveryStats& stats);

struct SystemCurves {
  std::string system;
  std::size_t episodes = 0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> aspect_recall;
  std::vector<double> nsdcg;
  std::vector<double> duplicate_rate;
  double mean_reward = 0.0;
  // Mean duplicate rate over t = 2..T.
  double mean_duplicate_rate_after_first() const;
};

struct ExperimentReport {
  std::uint64_t config_hash = 0;
  std::vector<std::string> systems;
  std::vector<EpisodeOutcome> episodes;  // sorted by system, topic, seed
  std::map<std::string, SystemCurves> curves;
  std::map<std::string, TrainedAgent> training;  // key: "<topic>/<compressor>"
  RecoveryStats recovery;  // main agent
  double seconds = 0.0;

  const SystemCurves& system(const std::string& name) const;
};

SystemCurves aggregate_system(const std::string& system,
                              const std::vector<EpisodeOutcome>& episodes, int iterations);

// Full pipeline; writes everything under config.output_dir.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Stage-wise entry points used by the CLI. Each reads the previous stage's
// files from the output directory. An empty topic filter means all topics.
void stage_generate(const ExperimentConfig& config, const std::string& topic_filter);
void stage_embed(const ExperimentConfig& config, const std::string& topic_filter);
void stage_train(const ExperimentConfig& config, const std::string& topic_filter);
void stage_evaluate(const ExperimentConfig& config, const std::string& topic_filter);
ExperimentReport stage_report(const ExperimentConfig& config);

// File layout under the output directory.
std::string corpus_path(const ExperimentConfig& config, const std::string& topic);
std::string ground_truth_path(const ExperimentConfig& config, const std::string& topic);
std::string embedding_path(const ExperimentConfig& config, const std::string& topic,
                           const std::string& compressor);
std::string checkpoint_path(const ExperimentConfig& config, const std::string& topic,
                            const std::string& compressor);
std::string episode_log_path(const ExperimentConfig& config, const std::string& system,
                             const std::string& topic, std::size_t seed);
std::string image_path(const ExperimentConfig& config, const std::string& system,
                       const std::string& topic, std::size_t seed);

}  // namespace ce3

#endif  // CE3_EXPERIMENT_H_
