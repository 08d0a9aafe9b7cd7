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

#include "ce3/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ce3/viz.h"
#include "json.hpp"

namespace ce3 {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed streams; every random decision derives from config.seed.
constexpr std::uint64_t kStreamTopic = 0;
constexpr std::uint64_t kStreamOrder = 1000;
constexpr std::uint64_t kStreamTsne = 2000;
constexpr std::uint64_t kStreamTrain = 3000;
constexpr std::uint64_t kStreamEval = 4000;

// Keys that do not influence what gets trained.
const char* const kUntrainedKeys[] = {"output_dir", "threads", "images", "eval_seeds",
                                      "heldout_topics", "compare_compressors"};

json synthetic_to_json(const SyntheticTopicSpec& s) {
  return {{"subtopics", s.subtopics},
          {"docs_per_subtopic", s.docs_per_subtopic},
          {"distractor_themes", s.distractor_themes},
          {"vocab_size", s.vocab_size},
          {"block_size", s.block_size},
          {"query_terms", s.query_terms},
          {"min_length", s.min_length},
          {"max_length", s.max_length},
          {"topical_fraction", s.topical_fraction},
          {"query_fraction", s.query_fraction},
          {"multi_subtopic_prob", s.multi_subtopic_prob},
          {"negative_rating_prob", s.negative_rating_prob},
          {"rating_weights", s.rating_weights}};
}

json tsne_to_json(const TsneConfig& t) {
  return {{"perplexity", t.perplexity},
          {"iterations", t.iterations},
          {"learning_rate", t.learning_rate},
          {"early_exaggeration", t.early_exaggeration},
          {"exaggeration_iterations", t.exaggeration_iterations},
          {"initial_momentum", t.initial_momentum},
          {"final_momentum", t.final_momentum},
          {"momentum_switch_iteration", t.momentum_switch_iteration},
          {"init_stddev", t.init_stddev}};
}

json ppo_to_json(const PPOConfig& p) {
  return {{"clip_epsilon", p.clip_epsilon},
          {"value_coef", p.value_coef},
          {"entropy_coef", p.entropy_coef},
          {"learning_rate", p.learning_rate},
          {"epochs", p.epochs},
          {"episodes_per_batch", p.episodes_per_batch},
          {"total_episodes", p.total_episodes},
          {"gamma", p.gamma},
          {"minibatch_size", p.minibatch_size},
          {"max_grad_norm", p.max_grad_norm},
          {"optimizer", p.optimizer},
          {"head_init_scale", p.head_init_scale}};
}

// Copies j[key] into out when present.
template <typename T>
void take(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it != j.end()) out = it->template get<T>();
}

void reject_unknown(const json& j, const json& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) {
      throw std::invalid_argument("unknown config key " + where + it.key());
    }
  }
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  ensure_parent(path);
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

std::string other_compressor(const std::string& c) { return c == "tsne" ? "svd" : "tsne"; }

std::string system_for(const ExperimentConfig& config, const std::string& compressor) {
  return compressor == config.compressor ? kSystemCe3 : "ce3-" + compressor;
}

std::vector<std::string> system_order(const ExperimentConfig& config) {
  std::vector<std::string> systems = {kSystemCe3};
  if (config.compare_compressors) {
    systems.push_back(system_for(config, other_compressor(config.compressor)));
  }
  systems.insert(systems.end(), {kSystemStatic, kSystemRf, kSystemRandom});
  if (config.heldout_topics > 0) systems.push_back(kSystemHeldout);
  return systems;
}

std::vector<std::string> trained_compressors(const ExperimentConfig& config) {
  std::vector<std::string> out = {config.compressor};
  if (config.compare_compressors) out.push_back(other_compressor(config.compressor));
  return out;
}

std::size_t topic_index_of(const std::string& id) {
  if (id.rfind("SYN-", 0) != 0) throw std::invalid_argument("bad topic id " + id);
  return static_cast<std::size_t>(std::stoul(id.substr(4)));
}

std::vector<std::size_t> selected_topics(const ExperimentConfig& config,
                                         const std::string& filter, bool include_heldout) {
  const std::size_t n = include_heldout ? total_topics(config) : config.topics;
  if (!filter.empty()) {
    const std::size_t index = topic_index_of(filter);
    if (index >= total_topics(config)) {
      throw std::invalid_argument("topic " + filter + " is not part of this experiment");
    }
    return {index};
  }
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

// Runs fn(i) for every item on up to `threads` workers; rethrows the first
// failure.
template <typename Fn>
void parallel_for(const std::vector<std::size_t>& items, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, items.size()));
  if (threads == 1) {
    for (auto i : items) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t j = next++; j < items.size(); j = next++) {
        try {
          fn(items[j]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t eval_seed(const ExperimentConfig& config, std::size_t topic, std::size_t s) {
  return mix_seed(mix_seed(config.seed, kStreamEval + topic), s);
}

}  // namespace

PPOConfig default_experiment_ppo() {
  PPOConfig ppo;
  ppo.optimizer = "adam";
  ppo.learning_rate = 0.01;
  ppo.epochs = 4;
  ppo.episodes_per_batch = 8;
  ppo.minibatch_size = 20;
  return ppo;
}

void ExperimentConfig::validate() const {
  if (topics == 0) throw std::invalid_argument("config: topics must be >= 1");
  if (eval_seeds == 0) throw std::invalid_argument("config: eval_seeds must be >= 1");
  if (iterations < 1) throw std::invalid_argument("config: T must be >= 1");
  if (k == 0) throw std::invalid_argument("config: k must be >= 1");
  if (!(mix_ratio > 0.0)) throw std::invalid_argument("config: mix_ratio must be > 0");
  if (compressor != "tsne" && compressor != "svd") {
    throw std::invalid_argument("config: compressor must be tsne or svd");
  }
  if (segments == 0 || dims == 0) {
    throw std::invalid_argument("config: segments and dims must be >= 1");
  }
  if (threads == 0) throw std::invalid_argument("config: threads must be >= 1");
  synthetic.validate();
  metric.validate();
  ppo.validate();
}

std::string ExperimentConfig::to_json() const {
  json j{{"seed", seed},
         {"topics", topics},
         {"eval_seeds", eval_seeds},
         {"heldout_topics", heldout_topics},
         {"iterations", iterations},
         {"k", k},
         {"mix_ratio", mix_ratio},
         {"compressor", compressor},
         {"compare_compressors", compare_compressors},
         {"allow_duplicates", allow_duplicates},
         {"segments", segments},
         {"dims", dims},
         {"synthetic", synthetic_to_json(synthetic)},
         {"tsne", tsne_to_json(tsne)},
         {"ppo", ppo_to_json(ppo)},
         {"metric", {{"b", metric.b}, {"bq", metric.bq}}},
         {"output_dir", output_dir},
         {"threads", threads},
         {"images", images}};
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  ExperimentConfig c;
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  const json known = json::parse(c.to_json());
  reject_unknown(j, known, "");
  take(j, "seed", c.seed);
  take(j, "topics", c.topics);
  take(j, "eval_seeds", c.eval_seeds);
  take(j, "heldout_topics", c.heldout_topics);
  take(j, "iterations", c.iterations);
  take(j, "k", c.k);
  take(j, "mix_ratio", c.mix_ratio);
  take(j, "compressor", c.compressor);
  take(j, "compare_compressors", c.compare_compressors);
  take(j, "allow_duplicates", c.allow_duplicates);
  take(j, "segments", c.segments);
  take(j, "dims", c.dims);
  take(j, "output_dir", c.output_dir);
  take(j, "threads", c.threads);
  take(j, "images", c.images);
  if (auto it = j.find("synthetic"); it != j.end()) {
    reject_unknown(*it, known["synthetic"], "synthetic.");
    auto& s = c.synthetic;
    take(*it, "subtopics", s.subtopics);
    take(*it, "docs_per_subtopic", s.docs_per_subtopic);
    take(*it, "distractor_themes", s.distractor_themes);
    take(*it, "vocab_size", s.vocab_size);
    take(*it, "block_size", s.block_size);
    take(*it, "query_terms", s.query_terms);
    take(*it, "min_length", s.min_length);
    take(*it, "max_length", s.max_length);
    take(*it, "topical_fraction", s.topical_fraction);
    take(*it, "query_fraction", s.query_fraction);
    take(*it, "multi_subtopic_prob", s.multi_subtopic_prob);
    take(*it, "negative_rating_prob", s.negative_rating_prob);
    take(*it, "rating_weights", s.rating_weights);
  }
  if (auto it = j.find("tsne"); it != j.end()) {
    reject_unknown(*it, known["tsne"], "tsne.");
    auto& t = c.tsne;
    take(*it, "perplexity", t.perplexity);
    take(*it, "iterations", t.iterations);
    take(*it, "learning_rate", t.learning_rate);
    take(*it, "early_exaggeration", t.early_exaggeration);
    take(*it, "exaggeration_iterations", t.exaggeration_iterations);
    take(*it, "initial_momentum", t.initial_momentum);
    take(*it, "final_momentum", t.final_momentum);
    take(*it, "momentum_switch_iteration", t.momentum_switch_iteration);
    take(*it, "init_stddev", t.init_stddev);
  }
  if (auto it = j.find("ppo"); it != j.end()) {
    reject_unknown(*it, known["ppo"], "ppo.");
    auto& p = c.ppo;
    take(*it, "clip_epsilon", p.clip_epsilon);
    take(*it, "value_coef", p.value_coef);
    take(*it, "entropy_coef", p.entropy_coef);
    take(*it, "learning_rate", p.learning_rate);
    take(*it, "epochs", p.epochs);
    take(*it, "episodes_per_batch", p.episodes_per_batch);
    take(*it, "total_episodes", p.total_episodes);
    take(*it, "gamma", p.gamma);
    take(*it, "minibatch_size", p.minibatch_size);
    take(*it, "max_grad_norm", p.max_grad_norm);
    take(*it, "optimizer", p.optimizer);
    take(*it, "head_init_scale", p.head_init_scale);
  }
  if (auto it = j.find("metric"); it != j.end()) {
    reject_unknown(*it, known["metric"], "metric.");
    take(*it, "b", c.metric.b);
    take(*it, "bq", c.metric.bq);
  }
  c.validate();
  return c;
}

std::uint64_t ExperimentConfig::config_hash() const {
  json j = json::parse(to_json());
  for (const char* key : kUntrainedKeys) j.erase(key);
  return fingerprint(j.dump());
}

ExperimentConfig load_experiment_config(const std::string& path) {
  auto in = open_in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return ExperimentConfig::from_json(buffer.str());
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void save_experiment_config(const ExperimentConfig& config, const std::string& path) {
  auto out = open_out(path);
  out << config.to_json() << '\n';
}

std::string topic_id(std::size_t index) { return "SYN-" + std::to_string(index); }

std::size_t total_topics(const ExperimentConfig& config) {
  return config.topics + config.heldout_topics;
}

SyntheticTopic make_topic(const ExperimentConfig& config, std::size_t index) {
  SyntheticTopicSpec spec = config.synthetic;
  spec.topic_id = topic_id(index);
  spec.seed = mix_seed(config.seed, kStreamTopic + index);
  const double relevant = static_cast<double>(spec.subtopics * spec.docs_per_subtopic);
  spec.irrelevant_docs = static_cast<std::size_t>(std::llround(relevant * config.mix_ratio));
  return generate_synthetic_topic(spec);
}

SparseVector TopicIndex::feedback_vector(const FeedbackEntry& entry) const {
  auto it = truth.ratings.find(entry.doc_id);
  if (it != truth.ratings.end() && it->second.passage) {
    const auto tokens = tokenize(*it->second.passage);
    SparseVector v = featurize(tokens, vocab, docs.size());
    if (!v.empty()) return v;
  }
  for (std::size_t r = 0; r < row_doc_ids.size(); ++r) {
    if (row_doc_ids[r] == entry.doc_id) return row_vectors[r];
  }
  return {};
}

TopicIndex index_topic(const ExperimentConfig& config, std::vector<Document> docs,
                       TopicGroundTruth truth) {
  if (docs.empty()) throw std::invalid_argument("index_topic: empty corpus");
  TopicIndex index;
  index.topic_id = truth.topic_id;
  index.docs = std::move(docs);
  index.truth = std::move(truth);
  for (const auto& doc : index.docs) {
    index.segmented.push_back(segment_document(doc, config.segments));
  }
  index.vocab = build_vocabulary(index.segmented);
  index.features = featurize_corpus(index.segmented, index.vocab);
  const auto doc_vectors = document_vectors(index.segmented, index.vocab);

  const std::size_t C = index.docs.size();
  index.doc_order.resize(C);
  for (std::size_t i = 0; i < C; ++i) index.doc_order[i] = i;
  std::mt19937_64 rng(
      mix_seed(config.seed, kStreamOrder + topic_index_of(index.topic_id)));
  std::shuffle(index.doc_order.begin(), index.doc_order.end(), rng);
  for (auto d : index.doc_order) {
    index.row_doc_ids.push_back(index.docs[d].doc_id);
    index.row_vectors.push_back(doc_vectors[d]);
  }
  index.query = query_vector(index.truth.query_tokens(), index.vocab, C);
  return index;
}

Embedding compress_topic(const ExperimentConfig& config, const TopicIndex& index,
                         const std::string& compressor) {
  const Matrix points = dense_features(index.features, index.vocab.size());
  Embedding embedding;
  if (compressor == "tsne") {
    TsneConfig tsne = config.tsne;
    tsne.dims = config.dims;
    tsne.seed = mix_seed(config.seed, kStreamTsne + topic_index_of(index.topic_id));
    embedding = tsne_fit(points, tsne).embedding;
  } else if (compressor == "svd") {
    embedding = svd_compress(points, config.dims);
  } else {
    throw std::invalid_argument("unknown compressor " + compressor);
  }
  normalize_embedding(embedding);
  return embedding;
}

SearchEnvironment make_environment(const ExperimentConfig& config, const TopicIndex& index,
                                   const Embedding& embedding, bool allow_duplicates) {
  GlobalRep rep =
      build_global_rep(embedding, index.docs.size(), config.segments, index.doc_order);
  EpisodeOptions options;
  options.k = config.k;
  options.horizon = config.iterations;
  options.allow_duplicates = allow_duplicates;
  return SearchEnvironment(std::move(rep), index.row_doc_ids, &index.truth, options);
}

TrainedAgent train_topic(const ExperimentConfig& config, const TopicIndex& index,
                         const Embedding& embedding, const std::string& compressor,
                         std::size_t topic_index) {
  SearchEnvironment env = make_environment(config, index, embedding, config.allow_duplicates);
  Agent agent(config.dims);
  PPOConfig ppo = config.ppo;
  ppo.horizon = config.iterations;
  ppo.seed = mix_seed(config.seed,
                      kStreamTrain + 2 * topic_index + (compressor == "tsne" ? 0 : 1));
  TrainResult result = train(agent, env, ppo);
  TrainedAgent out;
  out.compressor = compressor;
  out.params = std::move(result.params);
  out.curve = std::move(result.curve);
  out.best_batch = result.best_batch;
  out.best_return = result.best_return;
  return out;
}

void accumulate_recovery(const EpisodeOutcome& episode, std::size_t relevant_total,
                         std::size_t k, RecoveryStats& stats) {
  const auto& batch = episode.metrics.batch_precision;
  const std::size_t needed = (k + 1) / 2;
  std::set<std::string> found;
  for (std::size_t t = 0; t < episode.records.size() && t < batch.size(); ++t) {
    for (const auto& f : episode.records[t].feedback) {
      if (f.rating > 0) found.insert(f.doc_id);
    }
    const std::size_t remaining = relevant_total - std::min(relevant_total, found.size());
    if (batch[t] < 0.2 && remaining >= needed && t + 1 < batch.size()) {
      ++stats.episodes_with_drop;
      for (std::size_t u = t + 1; u < batch.size(); ++u) {
        if (batch[u] > 0.5) {
          ++stats.recovered;
          break;
        }
      }
      return;
    }
  }
}

double SystemCurves::mean_duplicate_rate_after_first() const {
  if (duplicate_rate.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 1; t < duplicate_rate.size(); ++t) sum += duplicate_rate[t];
  return sum / static_cast<double>(duplicate_rate.size() - 1);
}

const SystemCurves& ExperimentReport::system(const std::string& name) const {
  auto it = curves.find(name);
  if (it == curves.end()) throw std::out_of_range("no system " + name + " in report");
  return it->second;
}

SystemCurves aggregate_system(const std::string& system,
                              const std::vector<EpisodeOutcome>& episodes, int iterations) {
  SystemCurves c;
  c.system = system;
  const auto T = static_cast<std::size_t>(iterations);
  for (auto* v : {&c.precision, &c.recall, &c.aspect_recall, &c.nsdcg, &c.duplicate_rate}) {
    v->assign(T, 0.0);
  }
  for (const auto& e : episodes) {
    if (e.system != system) continue;
    ++c.episodes;
    c.mean_reward += e.total_reward;
    for (std::size_t t = 0; t < T && t < e.metrics.size(); ++t) {
      c.precision[t] += e.metrics.precision[t];
      c.recall[t] += e.metrics.recall[t];
      c.aspect_recall[t] += e.metrics.aspect_recall[t];
      c.nsdcg[t] += e.metrics.nsdcg[t];
      c.duplicate_rate[t] += e.metrics.duplicate_rate[t];
    }
  }
  if (c.episodes > 0) {
    const double n = static_cast<double>(c.episodes);
    c.mean_reward /= n;
    for (auto* v : {&c.precision, &c.recall, &c.aspect_recall, &c.nsdcg, &c.duplicate_rate}) {
      for (auto& x : *v) x /= n;
    }
  }
  return c;
}

// ---- file layout -----------------------------------------------------------

std::string corpus_path(const ExperimentConfig& config, const std::string& topic) {
  return (fs::path(config.output_dir) / "topics" / topic / "corpus.jsonl").string();
}

std::string ground_truth_path(const ExperimentConfig& config, const std::string& topic) {
  return (fs::path(config.output_dir) / "topics" / topic / "ground_truth.jsonl").string();
}

std::string embedding_path(const ExperimentConfig& config, const std::string& topic,
                           const std::string& compressor) {
  return (fs::path(config.output_dir) / "topics" / topic / ("embedding_" + compressor + ".txt"))
      .string();
}

std::string checkpoint_path(const ExperimentConfig& config, const std::string& topic,
                            const std::string& compressor) {
  return (fs::path(config.output_dir) / "checkpoints" / (topic + "_" + compressor + ".ckpt"))
      .string();
}

namespace {

std::string curve_path(const ExperimentConfig& config, const std::string& topic,
                       const std::string& compressor) {
  return (fs::path(config.output_dir) / "training" / (topic + "_" + compressor + ".csv"))
      .string();
}

}  // namespace

std::string episode_log_path(const ExperimentConfig& config, const std::string& system,
                             const std::string& topic, std::size_t seed) {
  return (fs::path(config.output_dir) / "logs" / system /
          (topic + "_seed" + std::to_string(seed) + ".jsonl"))
      .string();
}

std::string image_path(const ExperimentConfig& config, const std::string& system,
                       const std::string& topic, std::size_t seed) {
  return (fs::path(config.output_dir) / "images" / system /
          (topic + "_seed" + std::to_string(seed) + ".ppm"))
      .string();
}

// ---- stage helpers ---------------------------------------------------------

namespace {

void write_topic_files(const ExperimentConfig& config, const SyntheticTopic& topic) {
  auto corpus = open_out(corpus_path(config, topic.truth.topic_id));
  write_corpus(corpus, topic.docs);
  auto truth = open_out(ground_truth_path(config, topic.truth.topic_id));
  write_ground_truth(truth, std::span<const TopicGroundTruth>(&topic.truth, 1));
}

TopicIndex load_topic(const ExperimentConfig& config, const std::string& topic) {
  auto docs = read_corpus_file(corpus_path(config, topic));
  auto truths = load_ground_truth(ground_truth_path(config, topic));
  if (truths.size() != 1 || truths[0].topic_id != topic) {
    throw std::runtime_error(ground_truth_path(config, topic) +
                             ": expected exactly the judgments of " + topic);
  }
  return index_topic(config, std::move(docs), std::move(truths[0]));
}

void write_embedding_file(const ExperimentConfig& config, const TopicIndex& index,
                          const std::string& compressor, const Embedding& embedding) {
  auto out = open_out(embedding_path(config, index.topic_id, compressor));
  write_embedding(out, embedding, config.segments);
}

Embedding load_embedding(const ExperimentConfig& config, const TopicIndex& index,
                         const std::string& compressor) {
  const std::string path = embedding_path(config, index.topic_id, compressor);
  auto in = open_in(path);
  std::size_t segments = 0;
  Embedding e = read_embedding(in, &segments);
  if (segments != config.segments || e.size() != index.docs.size() * config.segments ||
      e.dims() != config.dims) {
    throw std::runtime_error(path + ": embedding does not match the config");
  }
  return e;
}

void write_trained(const ExperimentConfig& config, const std::string& topic,
                   const TrainedAgent& agent) {
  auto ckpt = open_out(checkpoint_path(config, topic, agent.compressor), true);
  write_checkpoint(ckpt, agent.params, config.config_hash());
  auto curve = open_out(curve_path(config, topic, agent.compressor));
  curve << "batch,mean_return\n";
  for (std::size_t i = 0; i < agent.curve.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof(line), "%zu,%.6f\n", i, agent.curve[i]);
    curve << line;
  }
}

TrainedAgent load_trained(const ExperimentConfig& config, const std::string& topic,
                          const std::string& compressor) {
  const std::string path = checkpoint_path(config, topic, compressor);
  auto in = open_in(path, true);
  std::uint64_t hash = 0;
  TrainedAgent agent;
  agent.compressor = compressor;
  agent.params = read_checkpoint(in, &hash);
  if (hash != config.config_hash()) {
    throw std::runtime_error(path + ": checkpoint was trained with a different config");
  }
  std::ifstream curve(curve_path(config, topic, compressor));
  std::string line;
  std::getline(curve, line);
  double best = -std::numeric_limits<double>::infinity();
  while (std::getline(curve, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    const double v = std::stod(line.substr(comma + 1));
    if (v > best) {
      best = v;
      agent.best_batch = agent.curve.size();
    }
    agent.curve.push_back(v);
  }
  agent.best_return = agent.curve.empty() ? 0.0 : best;
  return agent;
}

EpisodeOutcome finish_outcome(const std::string& system, const TopicIndex& index,
                              std::size_t seed, EpisodeResult result) {
  EpisodeOutcome out;
  out.system = system;
  out.topic_id = index.topic_id;
  out.eval_seed = seed;
  out.records = std::move(result.records);
  out.metrics = std::move(result.metrics);
  out.total_reward = result.total_reward;
  out.reward_bound = index.truth.positive_rating_mass();
  return out;
}

// Evaluates every system on one topic. `agents` maps compressor -> agent;
// `embeddings` compressor -> embedding.
std::vector<EpisodeOutcome> evaluate_topic(
    const ExperimentConfig& config, const TopicIndex& index, std::size_t topic_index,
    const std::map<std::string, Embedding>& embeddings,
    const std::map<std::string, TrainedAgent>& agents, bool heldout) {
  std::vector<EpisodeOutcome> out;
  Agent agent(config.dims);
  auto run = [&](const std::string& system, SearchEnvironment& env, Searcher& searcher) {
    for (std::size_t s = 0; s < config.eval_seeds; ++s) {
      EpisodeResult r =
          run_episode(env, searcher, config.metric, eval_seed(config, topic_index, s));
      out.push_back(finish_outcome(system, index, s, std::move(r)));
    }
  };
  for (const auto& [compressor, trained] : agents) {
    const std::string system = heldout ? kSystemHeldout : system_for(config, compressor);
    SearchEnvironment env =
        make_environment(config, index, embeddings.at(compressor), config.allow_duplicates);
    PolicySearcher searcher(system, &agent, trained.params);
    run(system, env, searcher);
  }
  if (heldout) return out;
  // Baselines always mask visited documents; their view of the corpus does
  // not depend on the embedding.
  SearchEnvironment env =
      make_environment(config, index, embeddings.at(config.compressor), false);
  StaticSearcher static_searcher(index.query, index.row_vectors);
  run(kSystemStatic, env, static_searcher);
  FeedbackSearcher rf(index.query, index.row_vectors,
                      [&index](const FeedbackEntry& e) { return index.feedback_vector(e); });
  run(kSystemRf, env, rf);
  RandomSearcher random;
  run(kSystemRandom, env, random);
  return out;
}

void write_episode_files(const ExperimentConfig& config, const TopicIndex& index,
                         const std::vector<EpisodeOutcome>& episodes) {
  for (const auto& e : episodes) {
    auto log = open_out(episode_log_path(config, e.system, e.topic_id, e.eval_seed));
    write_episode_log(log, e.records);
    const bool policy = e.system != kSystemStatic && e.system != kSystemRf &&
                        e.system != kSystemRandom;
    if (config.images && policy) {
      const std::string path = image_path(config, e.system, e.topic_id, e.eval_seed);
      ensure_parent(path);
      std::vector<std::string> ids;
      for (const auto& d : index.docs) ids.push_back(d.doc_id);
      std::sort(ids.begin(), ids.end());
      export_exploration_image(e.records, index.truth, ids, path);
    }
  }
}

bool episode_less(const EpisodeOutcome& a, const EpisodeOutcome& b,
                  const std::vector<std::string>& order) {
  const auto ia = std::find(order.begin(), order.end(), a.system) - order.begin();
  const auto ib = std::find(order.begin(), order.end(), b.system) - order.begin();
  if (ia != ib) return ia < ib;
  const auto ta = topic_index_of(a.topic_id), tb = topic_index_of(b.topic_id);
  if (ta != tb) return ta < tb;
  return a.eval_seed < b.eval_seed;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_report_files(const ExperimentConfig& config, const ExperimentReport& report) {
  const fs::path dir(config.output_dir);
  {
    auto out = open_out((dir / "metrics.jsonl").string());
    for (const auto& e : report.episodes) {
      for (std::size_t t = 0; t < e.metrics.size(); ++t) {
        json line{{"system", e.system},
                  {"topic", e.topic_id},
                  {"seed", e.eval_seed},
                  {"t", t + 1},
                  {"precision", e.metrics.precision[t]},
                  {"recall", e.metrics.recall[t]},
                  {"aspect_recall", e.metrics.aspect_recall[t]},
                  {"nsdcg", e.metrics.nsdcg[t]},
                  {"duplicate_rate", e.metrics.duplicate_rate[t]},
                  {"batch_precision", e.metrics.batch_precision[t]},
                  {"reward", t < e.records.size() ? e.records[t].reward : 0.0}};
        out << line.dump() << '\n';
      }
    }
  }
  {
    auto out = open_out((dir / "metrics_aggregate.csv").string());
    out << "system,t,episodes,precision,recall,aspect_recall,nsdcg,duplicate_rate\n";
    for (const auto& name : report.systems) {
      const auto& c = report.system(name);
      for (std::size_t t = 0; t < c.recall.size(); ++t) {
        out << name << ',' << t + 1 << ',' << c.episodes << ',' << fmt(c.precision[t]) << ','
            << fmt(c.recall[t]) << ',' << fmt(c.aspect_recall[t]) << ',' << fmt(c.nsdcg[t])
            << ',' << fmt(c.duplicate_rate[t]) << '\n';
      }
    }
  }
  {
    // Percentage of duplicates per iteration, one row per system.
    auto out = open_out((dir / "duplicates.csv").string());
    out << "system";
    for (int t = 1; t <= config.iterations; ++t) out << ",t" << t;
    out << '\n';
    for (const auto& name : report.systems) {
      const auto& c = report.system(name);
      out << name;
      for (double d : c.duplicate_rate) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), ",%.2f", 100.0 * d);
        out << buf;
      }
      out << '\n';
    }
  }
  {
    json systems = json::object();
    for (const auto& name : report.systems) {
      const auto& c = report.system(name);
      systems[name] = {{"episodes", c.episodes},
                       {"final_precision", c.precision.back()},
                       {"final_recall", c.recall.back()},
                       {"final_aspect_recall", c.aspect_recall.back()},
                       {"final_nsdcg", c.nsdcg.back()},
                       {"mean_duplicate_rate_t2_plus", c.mean_duplicate_rate_after_first()},
                       {"mean_reward", c.mean_reward}};
    }
    json training = json::object();
    for (const auto& [key, agent] : report.training) {
      training[key] = {{"batches", agent.curve.size()},
                       {"best_batch", agent.best_batch},
                       {"best_return", agent.best_return},
                       {"final_return", agent.curve.empty() ? 0.0 : agent.curve.back()}};
    }
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(report.config_hash));
    json out{{"config_hash", hash},
             {"systems", systems},
             {"training", training},
             {"recovery",
              {{"episodes_with_drop", report.recovery.episodes_with_drop},
               {"recovered", report.recovery.recovered},
               {"rate", report.recovery.rate()}}}};
    auto file = open_out((dir / "report.json").string());
    file << out.dump(2) << '\n';
  }
}

ExperimentReport assemble_report(const ExperimentConfig& config,
                                 std::vector<EpisodeOutcome> episodes,
                                 std::map<std::string, TrainedAgent> training,
                                 const std::map<std::string, std::size_t>& relevant_counts) {
  ExperimentReport report;
  report.config_hash = config.config_hash();
  std::vector<std::string> present;
  for (const auto& name : system_order(config)) {
    for (const auto& e : episodes) {
      if (e.system == name) {
        present.push_back(name);
        break;
      }
    }
  }
  report.systems = present;
  std::sort(episodes.begin(), episodes.end(),
            [&](const EpisodeOutcome& a, const EpisodeOutcome& b) {
              return episode_less(a, b, report.systems);
            });
  for (const auto& name : report.systems) {
    report.curves[name] = aggregate_system(name, episodes, config.iterations);
  }
  for (const auto& e : episodes) {
    if (e.system == kSystemCe3) {
      accumulate_recovery(e, relevant_counts.at(e.topic_id), config.k, report.recovery);
    }
  }
  report.episodes = std::move(episodes);
  report.training = std::move(training);
  return report;
}

std::string training_key(const std::string& topic, const std::string& compressor) {
  return topic + "/" + compressor;
}

}  // namespace

// ---- pipeline --------------------------------------------------------------

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(config.output_dir);
  save_experiment_config(config, (fs::path(config.output_dir) / "config.json").string());

  const std::size_t n = total_topics(config);
  std::vector<std::unique_ptr<TopicIndex>> indices(n);
  std::vector<std::map<std::string, Embedding>> embeddings(n);
  std::vector<std::map<std::string, TrainedAgent>> agents(n);
  std::vector<std::vector<EpisodeOutcome>> outcomes(n);

  auto prepare = [&](std::size_t i, const std::vector<std::string>& compressors) {
    SyntheticTopic topic = make_topic(config, i);
    write_topic_files(config, topic);
    indices[i] = std::make_unique<TopicIndex>(
        index_topic(config, std::move(topic.docs), std::move(topic.truth)));
    for (const auto& c : compressors) {
      embeddings[i][c] = compress_topic(config, *indices[i], c);
      write_embedding_file(config, *indices[i], c, embeddings[i][c]);
    }
  };

  std::vector<std::size_t> main_topics(config.topics);
  for (std::size_t i = 0; i < config.topics; ++i) main_topics[i] = i;
  parallel_for(main_topics, config.threads, [&](std::size_t i) {
    prepare(i, trained_compressors(config));
    for (const auto& c : trained_compressors(config)) {
      agents[i][c] = train_topic(config, *indices[i], embeddings[i][c], c, i);
      write_trained(config, indices[i]->topic_id, agents[i][c]);
    }
    outcomes[i] = evaluate_topic(config, *indices[i], i, embeddings[i], agents[i], false);
    write_episode_files(config, *indices[i], outcomes[i]);
  });

  std::vector<std::size_t> heldout;
  for (std::size_t i = config.topics; i < n; ++i) heldout.push_back(i);
  parallel_for(heldout, config.threads, [&](std::size_t i) {
    prepare(i, {config.compressor});
    const std::size_t source = (i - config.topics) % config.topics;
    std::map<std::string, TrainedAgent> borrowed = {
        {config.compressor, agents[source].at(config.compressor)}};
    outcomes[i] = evaluate_topic(config, *indices[i], i, embeddings[i], borrowed, true);
    write_episode_files(config, *indices[i], outcomes[i]);
  });

  std::vector<EpisodeOutcome> episodes;
  std::map<std::string, TrainedAgent> training;
  std::map<std::string, std::size_t> relevant;
  for (std::size_t i = 0; i < n; ++i) {
    relevant[indices[i]->topic_id] = indices[i]->truth.relevant_set().size();
    for (auto& e : outcomes[i]) episodes.push_back(std::move(e));
    for (auto& [c, a] : agents[i]) training[training_key(indices[i]->topic_id, c)] = a;
  }
  ExperimentReport report =
      assemble_report(config, std::move(episodes), std::move(training), relevant);
  write_report_files(config, report);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void stage_generate(const ExperimentConfig& config, const std::string& topic_filter) {
  config.validate();
  save_experiment_config(config, (fs::path(config.output_dir) / "config.json").string());
  for (auto i : selected_topics(config, topic_filter, true)) {
    write_topic_files(config, make_topic(config, i));
  }
}

void stage_embed(const ExperimentConfig& config, const std::string& topic_filter) {
  config.validate();
  const auto topics = selected_topics(config, topic_filter, true);
  parallel_for(topics, config.threads, [&](std::size_t i) {
    const TopicIndex index = load_topic(config, topic_id(i));
    const auto compressors = i < config.topics
                                 ? trained_compressors(config)
                                 : std::vector<std::string>{config.compressor};
    for (const auto& c : compressors) {
      write_embedding_file(config, index, c, compress_topic(config, index, c));
    }
  });
}

void stage_train(const ExperimentConfig& config, const std::string& topic_filter) {
  config.validate();
  const auto topics = selected_topics(config, topic_filter, false);
  parallel_for(topics, config.threads, [&](std::size_t i) {
    const TopicIndex index = load_topic(config, topic_id(i));
    for (const auto& c : trained_compressors(config)) {
      const Embedding e = load_embedding(config, index, c);
      write_trained(config, index.topic_id, train_topic(config, index, e, c, i));
    }
  });
}

void stage_evaluate(const ExperimentConfig& config, const std::string& topic_filter) {
  config.validate();
  const auto topics = selected_topics(config, topic_filter, true);
  parallel_for(topics, config.threads, [&](std::size_t i) {
    const TopicIndex index = load_topic(config, topic_id(i));
    const bool heldout = i >= config.topics;
    const auto compressors = heldout ? std::vector<std::string>{config.compressor}
                                     : trained_compressors(config);
    const std::string source =
        heldout ? topic_id((i - config.topics) % config.topics) : index.topic_id;
    std::map<std::string, Embedding> embeddings;
    std::map<std::string, TrainedAgent> agents;
    for (const auto& c : compressors) {
      embeddings[c] = load_embedding(config, index, c);
      agents[c] = load_trained(config, source, c);
    }
    write_episode_files(config, index,
                        evaluate_topic(config, index, i, embeddings, agents, heldout));
  });
}

ExperimentReport stage_report(const ExperimentConfig& config) {
  config.validate();
  std::vector<EpisodeOutcome> episodes;
  std::map<std::string, TrainedAgent> training;
  std::map<std::string, std::size_t> relevant;
  std::map<std::string, TopicGroundTruth> truths;
  for (std::size_t i = 0; i < total_topics(config); ++i) {
    const std::string id = topic_id(i);
    if (!fs::exists(ground_truth_path(config, id))) continue;
    auto t = load_ground_truth(ground_truth_path(config, id));
    if (t.size() != 1) throw std::runtime_error("expected one topic per ground-truth file");
    relevant[id] = t[0].relevant_set().size();
    truths[id] = std::move(t[0]);
    if (i < config.topics) {
      for (const auto& c : trained_compressors(config)) {
        if (fs::exists(checkpoint_path(config, id, c))) {
          training[training_key(id, c)] = load_trained(config, id, c);
        }
      }
    }
  }
  for (const auto& system : system_order(config)) {
    for (const auto& [id, truth] : truths) {
      for (std::size_t s = 0; s < config.eval_seeds; ++s) {
        const std::string path = episode_log_path(config, system, id, s);
        if (!fs::exists(path)) continue;
        auto in = open_in(path);
        EpisodeOutcome e;
        e.system = system;
        e.topic_id = id;
        e.eval_seed = s;
        e.records = read_episode_log(in);
        std::vector<std::vector<std::string>> lists;
        for (const auto& r : e.records) {
          std::vector<std::string> batch;
          for (const auto& d : r.retrieved) batch.push_back(d.doc_id);
          lists.push_back(std::move(batch));
          e.total_reward += r.reward;
        }
        e.metrics = evaluate_episode(lists, truth, config.metric);
        e.reward_bound = truth.positive_rating_mass();
        episodes.push_back(std::move(e));
      }
    }
  }
  if (episodes.empty()) {
    throw std::runtime_error("no episode logs under " + config.output_dir +
                             "; run eval first");
  }
  ExperimentReport report =
      assemble_report(config, std::move(episodes), std::move(training), relevant);
  write_report_files(config, report);
  return report;
}

}  // namespace ce3
