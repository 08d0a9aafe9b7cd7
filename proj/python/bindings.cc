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

// Python bindings for the ce3 core library.

#include <map>
#include <set>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ce3/embed.h"
#include "ce3/eval.h"
#include "ce3/experiment.h"
#include "ce3/ppo.h"
#include "ce3/synthetic.h"

namespace py = pybind11;

namespace {

// Single-subtopic topic from a plain doc -> rating map.
ce3::TopicGroundTruth topic_from_ratings(const std::map<std::string, int>& ratings) {
  ce3::TopicGroundTruth t;
  t.topic_id = "py";
  t.subtopics = {1};
  for (const auto& [id, r] : ratings) {
    t.ratings[id] = ce3::Judgment{r, r > 0 ? std::vector<int>{1} : std::vector<int>{},
                                  std::nullopt};
  }
  return t;
}

py::dict curves_to_dict(const ce3::SystemCurves& c) {
  py::dict d;
  d["episodes"] = c.episodes;
  d["precision"] = c.precision;
  d["recall"] = c.recall;
  d["aspect_recall"] = c.aspect_recall;
  d["nsdcg"] = c.nsdcg;
  d["duplicate_rate"] = c.duplicate_rate;
  d["mean_reward"] = c.mean_reward;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ce3, m) {
  m.doc() = "Dynamic search agent over compressed corpus representations";

  m.def(
      "nsdcg",
      [](const std::vector<std::vector<std::string>>& lists,
         const std::map<std::string, int>& ratings, double b, double bq) {
        return ce3::nsdcg(lists, topic_from_ratings(ratings), ce3::MetricConfig{b, bq});
      },
      py::arg("lists"), py::arg("ratings"), py::arg("b") = 2.0, py::arg("bq") = 4.0,
      "Session-normalized DCG of ranked lists, one list per iteration.");

  m.def(
      "precision_recall",
      [](const std::vector<std::string>& retrieved, const std::map<std::string, int>& ratings) {
        const std::set<std::string> docs(retrieved.begin(), retrieved.end());
        const auto pr = ce3::precision_recall(docs, topic_from_ratings(ratings));
        return py::make_tuple(pr.precision, pr.recall);
      },
      py::arg("retrieved"), py::arg("ratings"));

  m.def("clipped_surrogate", &ce3::clipped_surrogate, py::arg("ratio"), py::arg("advantage"),
        py::arg("epsilon") = 0.2);

  m.def(
      "tsne",
      [](const ce3::Matrix& points, double perplexity, int iterations, std::size_t dims,
         std::uint64_t seed) {
        ce3::TsneConfig config;
        config.perplexity = perplexity;
        config.iterations = iterations;
        config.dims = dims;
        config.seed = seed;
        py::gil_scoped_release release;
        return ce3::tsne_fit(points, config).embedding.coords;
      },
      py::arg("points"), py::arg("perplexity") = 30.0, py::arg("iterations") = 1000,
      py::arg("dims") = 3, py::arg("seed") = 0);

  m.def(
      "svd_compress",
      [](const ce3::Matrix& points, std::size_t dims) {
        return ce3::svd_compress(points, dims).coords;
      },
      py::arg("points"), py::arg("dims") = 3);

  m.def(
      "generate_topic",
      [](std::uint64_t seed, std::size_t subtopics, std::size_t docs_per_subtopic,
         std::size_t irrelevant_docs) {
        ce3::SyntheticTopicSpec spec;
        spec.seed = seed;
        spec.subtopics = subtopics;
        spec.docs_per_subtopic = docs_per_subtopic;
        spec.irrelevant_docs = irrelevant_docs;
        const auto topic = ce3::generate_synthetic_topic(spec);
        std::vector<std::pair<std::string, std::string>> docs;
        for (const auto& d : topic.docs) {
          std::string text;
          for (const auto& t : d.tokens) text += (text.empty() ? "" : " ") + t;
          docs.emplace_back(d.doc_id, text);
        }
        std::map<std::string, std::pair<int, std::vector<int>>> judgments;
        for (const auto& [id, j] : topic.truth.ratings) judgments[id] = {j.rating, j.subtopics};
        return py::make_tuple(docs, judgments);
      },
      py::arg("seed") = 0, py::arg("subtopics") = 3, py::arg("docs_per_subtopic") = 10,
      py::arg("irrelevant_docs") = 30,
      "Synthetic topic as ([(doc_id, text)], {doc_id: (rating, subtopics)}).");

  m.def("default_config", [] { return ce3::ExperimentConfig{}.to_json(); },
        "Default experiment config as JSON text.");

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const auto config = ce3::ExperimentConfig::from_json(config_json);
        ce3::ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = ce3::run_experiment(config);
        }
        py::dict systems;
        for (const auto& name : report.systems) systems[name.c_str()] = curves_to_dict(report.system(name));
        py::dict out;
        out["systems"] = systems;
        out["recovered"] = report.recovery.recovered;
        out["episodes_with_drop"] = report.recovery.episodes_with_drop;
        out["seconds"] = report.seconds;
        return out;
      },
      py::arg("config_json"),
      "Runs a full experiment; outputs go to the config's output_dir.");
}
