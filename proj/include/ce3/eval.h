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

#ifndef CE3_EVAL_H_
#define CE3_EVAL_H_

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ce3/sim.h"

namespace ce3 {

// Log bases of the within-iteration (b) and across-iteration (bq) discounts.
struct MetricConfig {
  double b = 2.0;
  double bq = 4.0;
  void validate() const;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  // False when nothing has been retrieved; precision is then reported as 0.
  bool precision_defined = false;
};

// Over the cumulative retrieved set. Throws when the topic has no relevant
// documents (recall undefined).
PrecisionRecall precision_recall(const std::set<std::string>& retrieved,
                                 const TopicGroundTruth& topic);

// Fraction of subtopics covered by at least one retrieved relevant document.
double aspect_recall(const std::set<std::string>& retrieved,
                     const TopicGroundTruth& topic);

// 1 / ((1 + log_b j) (1 + log_bq i)) for 1-based rank j and iteration i.
double slot_discount(std::size_t iteration, std::size_t rank,
                     const MetricConfig& config);

// Session DCG; a document repeated in a later slot earns nothing.
double session_dcg(std::span<const std::vector<std::string>> lists,
                   const TopicGroundTruth& topic, const MetricConfig& config);

// Best achievable session DCG for the same slot structure: positive ratings
// in descending order matched with slot discounts in descending order.
double ideal_session_dcg(std::span<const std::size_t> slots_per_iteration,
                         const TopicGroundTruth& topic, const MetricConfig& config);

// sDCG / ideal sDCG, or 0 when the ideal is 0.
double nsdcg(std::span<const std::vector<std::string>> lists,
             const TopicGroundTruth& topic, const MetricConfig& config);

// |D_t intersect history| / |D_t|; nullopt for an empty batch.
std::optional<double> duplicate_rate(std::span<const std::string> batch,
                                     const std::set<std::string>& history);

// Cumulative metrics after each iteration t = 1..T.
struct MetricSeries {
  std::vector<double> precision;
  std::vector<bool> precision_defined;
  std::vector<double> recall;
  std::vector<double> aspect_recall;
  std::vector<double> nsdcg;
  std::vector<double> duplicate_rate;  // 0 where undefined
  std::vector<double> batch_precision;  // precision of D_t alone

  std::size_t size() const { return recall.size(); }
};

MetricSeries evaluate_episode(std::span<const std::vector<std::string>> lists,
                              const TopicGroundTruth& topic,
                              const MetricConfig& config);

}  // namespace ce3

#endif  // CE3_EVAL_H_
