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

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>
#include <string>

#include <gtest/gtest.h>

namespace ce3 {
namespace {

namespace fs = std::filesystem;

// Two tiny topics, just big enough to exercise every stage quickly.
ExperimentConfig small_config(const fs::path& dir) {
  ExperimentConfig c;
  c.seed = 11;
  c.topics = 2;
  c.eval_seeds = 2;
  c.iterations = 4;
  c.k = 2;
  c.segments = 4;
  c.synthetic.subtopics = 2;
  c.synthetic.docs_per_subtopic = 4;
  c.tsne.iterations = 250;
  c.tsne.exaggeration_iterations = 100;
  c.tsne.momentum_switch_iteration = 100;
  c.ppo.total_episodes = 16;
  c.output_dir = dir.string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Relative path -> bytes for every file below dir, minus config.json (which
// records the output directory itself).
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).string();
    if (rel == "config.json") continue;
    out[rel] = slurp(entry.path());
  }
  return out;
}

class ExperimentRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(fs::temp_directory_path() /
                         ("ce3_experiment_" + std::to_string(::getpid())));
    fs::remove_all(*root_);
    report_ = new ExperimentReport(run_experiment(small_config(*root_ / "full")));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete report_;
    delete root_;
  }

  static fs::path* root_;
  static ExperimentReport* report_;
};

fs::path* ExperimentRun::root_ = nullptr;
ExperimentReport* ExperimentRun::report_ = nullptr;

TEST(ExperimentConfig, JsonRoundTrip) {
  ExperimentConfig c;
  c.seed = 99;
  c.compressor = "svd";
  c.synthetic.rating_weights = {0.1, 0.2, 0.3, 0.4};
  c.tsne.perplexity = 12.5;
  c.ppo.clip_epsilon = 0.3;
  c.metric.bq = 5.0;
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.config_hash(), c.config_hash());
}

TEST(ExperimentConfig, PartialJsonKeepsDefaults) {
  const auto c = ExperimentConfig::from_json(R"({"seed": 3, "ppo": {"epochs": 2}})");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.ppo.epochs, 2);
  EXPECT_EQ(c.ppo.optimizer, default_experiment_ppo().optimizer);
  EXPECT_EQ(c.iterations, 10);
  EXPECT_EQ(c.k, kDefaultResultsPerIteration);
}

TEST(ExperimentConfig, UnknownKeysNamed) {
  try {
    ExperimentConfig::from_json(R"({"tsne": {"perplexty": 5}})");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("tsne.perplexty"), std::string::npos);
  }
  EXPECT_THROW(ExperimentConfig::from_json(R"({"topic": 3})"), std::invalid_argument);
}

TEST(ExperimentConfig, InvalidValuesRejected) {
  EXPECT_THROW(ExperimentConfig::from_json(R"({"compressor": "pca"})"), std::invalid_argument);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"topics": 0})"), std::invalid_argument);
  EXPECT_THROW(ExperimentConfig::from_json("[1, 2]"), std::invalid_argument);
  EXPECT_THROW(load_experiment_config("/nonexistent/ce3.json"), std::runtime_error);
}

TEST(ExperimentConfig, HashTracksOnlyTrainingInputs) {
  ExperimentConfig a, b;
  b.output_dir = "elsewhere";
  b.threads = 4;
  b.images = false;
  EXPECT_EQ(a.config_hash(), b.config_hash());
  b.seed = 1;
  EXPECT_NE(a.config_hash(), b.config_hash());
}

TEST(ExperimentConfig, MixRatioSetsIrrelevantCount) {
  ExperimentConfig c;
  c.mix_ratio = 2.0;
  const auto topic = make_topic(c, 0);
  EXPECT_EQ(topic.docs.size(), 90u);
  EXPECT_EQ(topic.truth.topic_id, "SYN-0");
}

TEST(RandomRanker, PrecisionNearMixRatio) {
  // One relevant document per irrelevant one.
  ExperimentConfig c = small_config("unused");
  const auto topic = make_topic(c, 0);
  const auto index = index_topic(c, topic.docs, topic.truth);
  const auto embedding = compress_topic(c, index, "svd");
  auto env = make_environment(c, index, embedding, false);
  RandomSearcher random;
  double sum = 0.0;
  const int episodes = 400;
  for (int s = 0; s < episodes; ++s) {
    sum += run_episode(env, random, c.metric, static_cast<std::uint64_t>(s))
               .metrics.precision.back();
  }
  EXPECT_NEAR(sum / episodes, 0.5, 0.03);
}

TEST_F(ExperimentRun, EverySystemEvaluated) {
  const std::vector<std::string> systems = {"ce3", "ce3-svd", "static", "rf", "random"};
  EXPECT_EQ(report_->systems, systems);
  EXPECT_EQ(report_->episodes.size(), systems.size() * 2 * 2);
  for (const auto& name : systems) {
    EXPECT_EQ(report_->system(name).episodes, 4u);
    EXPECT_EQ(report_->system(name).recall.size(), 4u);
  }
  EXPECT_EQ(report_->training.size(), 4u);
  EXPECT_EQ(report_->training.at("SYN-1/svd").curve.size(), 2u);
  EXPECT_THROW(report_->system("nope"), std::out_of_range);
}

TEST_F(ExperimentRun, FilesLaidOut) {
  const auto c = small_config(*root_ / "full");
  for (const char* f : {"config.json", "metrics.jsonl", "metrics_aggregate.csv",
                        "duplicates.csv", "report.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / f)) << f;
  }
  EXPECT_TRUE(fs::exists(corpus_path(c, "SYN-1")));
  EXPECT_TRUE(fs::exists(ground_truth_path(c, "SYN-1")));
  EXPECT_TRUE(fs::exists(embedding_path(c, "SYN-0", "tsne")));
  EXPECT_TRUE(fs::exists(checkpoint_path(c, "SYN-0", "svd")));
  EXPECT_TRUE(fs::exists(episode_log_path(c, "rf", "SYN-1", 1)));
  EXPECT_TRUE(fs::exists(image_path(c, "ce3", "SYN-1", 1)));
  EXPECT_FALSE(fs::exists(image_path(c, "random", "SYN-1", 1)));
  // One header plus T rows per system.
  const std::string csv = slurp(fs::path(c.output_dir) / "metrics_aggregate.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 * 4);
}

TEST_F(ExperimentRun, MaskedRunsNeverRepeat) {
  for (const auto& e : report_->episodes) {
    for (double d : e.metrics.duplicate_rate) EXPECT_EQ(d, 0.0) << e.system;
  }
}

TEST_F(ExperimentRun, MetricsBoundedAndRewardConserved) {
  for (const auto& e : report_->episodes) {
    EXPECT_LE(e.total_reward, e.reward_bound + 1e-9);
    for (std::size_t t = 0; t < e.metrics.size(); ++t) {
      for (double v : {e.metrics.precision[t], e.metrics.recall[t], e.metrics.aspect_recall[t],
                       e.metrics.nsdcg[t]}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-12);
      }
    }
  }
}

TEST_F(ExperimentRun, StagesReproduceFullRun) {
  const auto c = small_config(*root_ / "staged");
  stage_generate(c, "");
  stage_embed(c, "");
  stage_train(c, "");
  stage_evaluate(c, "");
  const auto staged = stage_report(c);
  EXPECT_EQ(staged.episodes.size(), report_->episodes.size());
  EXPECT_EQ(tree(*root_ / "staged"), tree(*root_ / "full"));
}

TEST_F(ExperimentRun, SecondRunIsByteIdentical) {
  run_experiment(small_config(*root_ / "again"));
  EXPECT_EQ(tree(*root_ / "again"), tree(*root_ / "full"));
}

TEST_F(ExperimentRun, CheckpointFromOtherConfigRejected) {
  auto c = small_config(*root_ / "full");
  c.ppo.epochs = 3;
  EXPECT_THROW(stage_evaluate(c, "SYN-0"), std::runtime_error);
}

TEST_F(ExperimentRun, UnknownTopicRejected) {
  const auto c = small_config(*root_ / "full");
  EXPECT_THROW(stage_train(c, "SYN-7"), std::invalid_argument);
  EXPECT_THROW(stage_train(c, "DD17-10"), std::invalid_argument);
}

TEST(StageReport, NeedsEpisodeLogs) {
  const auto dir = fs::temp_directory_path() / ("ce3_empty_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  EXPECT_THROW(stage_report(small_config(dir)), std::runtime_error);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace ce3
