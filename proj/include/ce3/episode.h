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

#ifndef CE3_EPISODE_H_
#define CE3_EPISODE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ce3/corpus.h"
#include "ce3/eval.h"
#include "ce3/ppo.h"
#include "ce3/retrieval.h"
#include "ce3/sim.h"
#include "ce3/state.h"

namespace ce3 {

struct EpisodeOptions {
  std::size_t k = kDefaultResultsPerIteration;
  int horizon = 10;
  // Visited documents stay eligible for selection (they score through the
  // sentinel); duplicates earn zero reward.
  bool allow_duplicates = false;
  std::size_t pool_rows = kPoolRows;
  std::size_t pool_cols = kPoolCols;
};

struct RankedDoc {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

// One line of the episode log.
struct IterationRecord {
  int t = 0;
  std::vector<std::string> visited;  // retrieved before t, sorted
  std::vector<double> action;
  std::vector<RankedDoc> retrieved;
  std::vector<FeedbackEntry> feedback;
  double reward = 0.0;
};

std::string to_json_line(const IterationRecord& record);
IterationRecord record_from_json_line(const std::string& line);
void write_episode_log(std::ostream& out, std::span<const IterationRecord> records);
std::vector<IterationRecord> read_episode_log(std::istream& in);

// The search session seen by the agent: representation rows map to document
// ids through row_doc_ids.
class SearchEnvironment : public EpisodeEnvironment {
 public:
  SearchEnvironment(GlobalRep rep, std::vector<std::string> row_doc_ids,
                    const TopicGroundTruth* topic, EpisodeOptions options);

  std::size_t action_dims() const override { return rep_.dims(); }
  void reset() override;
  bool done() const override { return state_.t > options_.horizon; }
  Tensor3 observe() const override;
  double step(std::span<const double> action) override;

  // Scores the action against the current state and picks k rows.
  RetrievedSet select(std::span<const double> action) const;
  // Shows the rows to the simulated user, logs the iteration and advances
  // the state. Returns the reward.
  double apply(const RetrievedSet& selection, std::span<const double> action);

  const SearchState& state() const { return state_; }
  const EpisodeOptions& options() const { return options_; }
  const std::vector<std::string>& row_doc_ids() const { return row_doc_ids_; }
  const std::vector<IterationRecord>& records() const { return records_; }
  const std::vector<std::vector<std::string>>& lists() const { return lists_; }
  const Feedback& last_feedback() const { return last_feedback_; }
  const TopicGroundTruth& topic() const { return *topic_; }

 private:
  GlobalRep rep_;
  std::vector<std::string> row_doc_ids_;
  const TopicGroundTruth* topic_;
  EpisodeOptions options_;
  SearchState state_;
  std::set<std::string> history_;
  std::vector<IterationRecord> records_;
  std::vector<std::vector<std::string>> lists_;
  Feedback last_feedback_;
};

struct Decision {
  RetrievedSet selection;
  std::vector<double> action;  // empty for non-RL searchers
};

// Anything that can pick the next batch of rows.
class Searcher {
 public:
  virtual ~Searcher() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode() {}
  virtual Decision decide(const SearchEnvironment& env, std::mt19937_64& rng) = 0;
  virtual void observe_feedback(const Feedback&) {}
};

class PolicySearcher : public Searcher {
 public:
  PolicySearcher(std::string name, const Agent* agent, AgentParams params);
  std::string name() const override { return name_; }
  Decision decide(const SearchEnvironment& env, std::mt19937_64& rng) override;

 private:
  std::string name_;
  const Agent* agent_;
  AgentParams params_;
};

// Fixed action; zero gives the index-order tie-break sweep.
class FixedActionSearcher : public Searcher {
 public:
  explicit FixedActionSearcher(std::vector<double> action) : action_(std::move(action)) {}
  std::string name() const override { return "fixed"; }
  Decision decide(const SearchEnvironment& env, std::mt19937_64& rng) override;

 private:
  std::vector<double> action_;
};

class RandomSearcher : public Searcher {
 public:
  std::string name() const override { return "random"; }
  Decision decide(const SearchEnvironment& env, std::mt19937_64& rng) override;
};

// Document vectors are indexed by representation row.
class StaticSearcher : public Searcher {
 public:
  StaticSearcher(SparseVector query, std::vector<SparseVector> row_vectors);
  std::string name() const override { return "static"; }
  Decision decide(const SearchEnvironment& env, std::mt19937_64& rng) override;

 private:
  SparseVector query_;
  std::vector<SparseVector> rows_;
};

// Feedback vectors are looked up by doc id (passage vectors when the
// judgment carries a passage, else the document vector).
class FeedbackSearcher : public Searcher {
 public:
  FeedbackSearcher(SparseVector query, std::vector<SparseVector> row_vectors,
                   std::function<SparseVector(const FeedbackEntry&)> feedback_vector,
                   double alpha = kDefaultRocchioAlpha);
  std::string name() const override { return "rf"; }
  void begin_episode() override { feedback_.clear(); }
  Decision decide(const SearchEnvironment& env, std::mt19937_64& rng) override;
  void observe_feedback(const Feedback& feedback) override;

 private:
  SparseVector query_;
  std::vector<SparseVector> rows_;
  std::function<SparseVector(const FeedbackEntry&)> to_vector_;
  double alpha_;
  std::vector<SparseVector> feedback_;
};

struct EpisodeResult {
  Trajectory trajectory;  // rewards (and actions for policy searchers)
  std::vector<IterationRecord> records;
  std::vector<std::vector<std::string>> lists;
  MetricSeries metrics;
  double total_reward = 0.0;
};

EpisodeResult run_episode(SearchEnvironment& env, Searcher& searcher,
                          const MetricConfig& metric_config, std::uint64_t seed);

}  // namespace ce3

#endif  // CE3_EPISODE_H_
