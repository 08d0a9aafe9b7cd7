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

// Command-line driver: gen / embed / train / eval / report / viz / run.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ce3/experiment.h"
#include "ce3/viz.h"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string topic;
  std::optional<std::string> compressor;
  bool allow_duplicates = false;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* app, CommonFlags& flags) {
  app->add_option("-c,--config", flags.config_path, "Experiment config file (JSON)");
  app->add_option("--seed", flags.seed, "Master seed");
  app->add_option("--topic", flags.topic, "Restrict to one topic id, e.g. SYN-0");
  app->add_option("--compressor", flags.compressor, "Compressor of the main agent")
      ->check(CLI::IsMember({"tsne", "svd"}));
  app->add_flag("--allow-duplicates", flags.allow_duplicates,
                "Let the agent re-select visited documents");
  app->add_option("-o,--output", flags.output_dir, "Output directory");
  app->add_option("--threads", flags.threads, "Worker threads (topics run in parallel)");
}

ce3::ExperimentConfig resolve(const CommonFlags& flags) {
  ce3::ExperimentConfig config;
  if (!flags.config_path.empty()) config = ce3::load_experiment_config(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.compressor) config.compressor = *flags.compressor;
  if (flags.allow_duplicates) config.allow_duplicates = true;
  if (flags.output_dir) config.output_dir = *flags.output_dir;
  if (flags.threads) config.threads = *flags.threads;
  config.validate();
  return config;
}

void print_summary(const ce3::ExperimentReport& report) {
  std::printf("%-12s %8s %8s %8s %8s %8s\n", "system", "P@T", "R@T", "aR@T", "nsDCG@T",
              "dup2+");
  for (const auto& name : report.systems) {
    const auto& c = report.system(name);
    std::printf("%-12s %8.3f %8.3f %8.3f %8.3f %8.3f\n", name.c_str(), c.precision.back(),
                c.recall.back(), c.aspect_recall.back(), c.nsdcg.back(),
                c.mean_duplicate_rate_after_first());
  }
  std::printf("recovery: %zu of %zu episodes with a drop recovered\n",
              report.recovery.recovered, report.recovery.episodes_with_drop);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ce3: dynamic search agent over compressed corpus representations"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* gen = app.add_subcommand("gen", "Generate synthetic topics (corpus + judgments)");
  auto* embed = app.add_subcommand("embed", "Compress segment features into the cache");
  auto* train = app.add_subcommand("train", "Train the agent(s) per topic");
  auto* eval = app.add_subcommand("eval", "Run evaluation episodes for every system");
  auto* report = app.add_subcommand("report", "Aggregate episode logs into metrics");
  auto* run = app.add_subcommand("run", "gen + embed + train + eval + report in one go");
  auto* viz = app.add_subcommand("viz", "Render an episode log as an exploration image");
  auto* dump = app.add_subcommand("config", "Print the resolved config");
  for (auto* sub : {gen, embed, train, eval, report, run, viz, dump}) add_common(sub, flags);

  std::string log_path, image_out;
  viz->add_option("--log", log_path, "Episode log (JSONL)")->required();
  viz->add_option("--image", image_out, "Output .ppm or .svg")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const ce3::ExperimentConfig config = resolve(flags);
    if (*gen) {
      ce3::stage_generate(config, flags.topic);
    } else if (*embed) {
      ce3::stage_embed(config, flags.topic);
    } else if (*train) {
      ce3::stage_train(config, flags.topic);
    } else if (*eval) {
      ce3::stage_evaluate(config, flags.topic);
    } else if (*report) {
      print_summary(ce3::stage_report(config));
    } else if (*run) {
      const auto result = ce3::run_experiment(config);
      print_summary(result);
      std::printf("elapsed: %.1f s\n", result.seconds);
    } else if (*dump) {
      std::cout << config.to_json() << '\n';
    } else if (*viz) {
      if (flags.topic.empty()) throw std::invalid_argument("viz needs --topic");
      std::ifstream in(log_path);
      if (!in) throw std::runtime_error("cannot read " + log_path);
      const auto records = ce3::read_episode_log(in);
      const auto truths = ce3::load_ground_truth(ce3::ground_truth_path(config, flags.topic));
      const auto docs = ce3::read_corpus_file(ce3::corpus_path(config, flags.topic));
      std::vector<std::string> ids;
      for (const auto& d : docs) ids.push_back(d.doc_id);
      std::sort(ids.begin(), ids.end());
      ce3::export_exploration_image(records, truths.at(0), ids, image_out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ce3: %s\n", e.what());
    return 1;
  }
  return 0;
}
