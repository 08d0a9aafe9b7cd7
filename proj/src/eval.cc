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

#include "ce3/eval.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace ce3 {

void MetricConfig::validate() const {
  if (!(b > 1.0) || !(bq > 1.0)) {
    throw std::invalid_argument("MetricConfig: b and bq must be > 1");
  }
}

PrecisionRecall precision_recall(const std::set<std::string>& retrieved,
                                 const TopicGroundTruth& topic) {
  const auto relevant = topic.relevant_set();
  if (relevant.empty()) {
    throw std::invalid_argument("precision_recall: topic " + topic.topic_id +
                                " has no relevant documents");
  }
  std::size_t hits = 0;
  for (const auto& d : retrieved) hits += relevant.count(d);
  PrecisionRecall out;
  out.recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
  if (!retrieved.empty()) {
    out.precision = static_cast<double>(hits) / static_cast<double>(retrieved.size());
    out.precision_defined = true;
  }
  return out;
}

double aspect_recall(const std::set<std::string>& retrieved,
                     const TopicGroundTruth& topic) {
  if (topic.subtopics.empty()) {
    throw std::invalid_argument("aspect_recall: topic has no subtopics");
  }
  std::set<int> found;
  for (const auto& d : retrieved) {
    auto it = topic.ratings.find(d);
    if (it == topic.ratings.end() || it->second.rating <= 0) continue;
    found.insert(it->second.subtopics.begin(), it->second.subtopics.end());
  }
  std::size_t covered = 0;
  for (int s : topic.subtopics) covered += found.count(s);
  return static_cast<double>(covered) / static_cast<double>(topic.subtopics.size());
}

double slot_discount(std::size_t iteration, std::size_t rank,
                     const MetricConfig& config) {
  const double within = 1.0 + std::log(static_cast<double>(rank)) / std::log(config.b);
  const double across =
      1.0 + std::log(static_cast<double>(iteration)) / std::log(config.bq);
  return 1.0 / (within * across);
}

double session_dcg(std::span<const std::vector<std::string>> lists,
                   const TopicGroundTruth& topic, const MetricConfig& config) {
  config.validate();
  std::set<std::string> seen;
  double total = 0.0;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    for (std::size_t j = 0; j < lists[i].size(); ++j) {
      const auto& doc = lists[i][j];
      if (!seen.insert(doc).second) continue;
      auto it = topic.ratings.find(doc);
      if (it == topic.ratings.end() || it->second.rating <= 0) continue;
      total += it->second.rating * slot_discount(i + 1, j + 1, config);
    }
  }
  return total;
}

double ideal_session_dcg(std::span<const std::size_t> slots_per_iteration,
                         const TopicGroundTruth& topic, const MetricConfig& config) {
  config.validate();
  std::vector<double> weights;
  for (std::size_t i = 0; i < slots_per_iteration.size(); ++i) {
    for (std::size_t j = 0; j < slots_per_iteration[i]; ++j) {
      weights.push_back(slot_discount(i + 1, j + 1, config));
    }
  }
  std::vector<double> gains;
  for (const auto& [doc, j] : topic.ratings) {
    if (j.rating > 0) gains.push_back(j.rating);
  }
  std::sort(weights.begin(), weights.end(), std::greater<>());
  std::sort(gains.begin(), gains.end(), std::greater<>());
  double total = 0.0;
  for (std::size_t s = 0; s < std::min(weights.size(), gains.size()); ++s) {
    total += gains[s] * weights[s];
  }
  return total;
}

double nsdcg(std::span<const std::vector<std::string>> lists,
             const TopicGroundTruth& topic, const MetricConfig& config) {
  std::vector<std::size_t> slots;
  for (const auto& list : lists) slots.push_back(list.size());
  const double ideal = ideal_session_dcg(slots, topic, config);
  if (ideal <= 0.0) return 0.0;
  return session_dcg(lists, topic, config) / ideal;
}

std::optional<double> duplicate_rate(std::span<const std::string> batch,
                                     const std::set<std::string>& history) {
  if (batch.empty()) return std::nullopt;
  std::size_t dup = 0;
  for (const auto& d : batch) dup += history.count(d);
  return static_cast<double>(dup) / static_cast<double>(batch.size());
}

MetricSeries evaluate_episode(std::span<const std::vector<std::string>> lists,
                              const TopicGroundTruth& topic,
                              const MetricConfig& config) {
  MetricSeries series;
  std::set<std::string> history;
  const auto relevant = topic.relevant_set();
  for (std::size_t t = 0; t < lists.size(); ++t) {
    const auto& batch = lists[t];
    series.duplicate_rate.push_back(duplicate_rate(batch, history).value_or(0.0));
    std::size_t hits = 0;
    for (const auto& d : batch) hits += relevant.count(d);
    series.batch_precision.push_back(
        batch.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(batch.size()));
    history.insert(batch.begin(), batch.end());
    auto pr = precision_recall(history, topic);
    series.precision.push_back(pr.precision);
    series.precision_defined.push_back(pr.precision_defined);
    series.recall.push_back(pr.recall);
    series.aspect_recall.push_back(aspect_recall(history, topic));
    series.nsdcg.push_back(nsdcg(lists.first(t + 1), topic, config));
  }
  return series;
}

}  // namespace ce3
