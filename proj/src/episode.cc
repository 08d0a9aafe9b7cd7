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

#include "ce3/episode.h"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace ce3 {

using nlohmann::json;

std::string to_json_line(const IterationRecord& record) {
  json retrieved = json::array();
  for (const auto& doc : record.retrieved) {
    retrieved.push_back({{"doc_id", doc.doc_id}, {"score", doc.score}, {"rank", doc.rank}});
  }
  json feedback = json::array();
  for (const auto& entry : record.feedback) {
    feedback.push_back(
        {{"doc_id", entry.doc_id}, {"rating", entry.rating}, {"subtopics", entry.subtopics}});
  }
  json out{{"t", record.t},
           {"visited", record.visited},
           {"action", record.action},
           {"retrieved", std::move(retrieved)},
           {"feedback", std::move(feedback)},
           {"reward", record.reward}};
  return out.dump();
}

IterationRecord record_from_json_line(const std::string& line) {
  const json in = json::parse(line);
  IterationRecord record;
  record.t = in.at("t").get<int>();
  record.visited = in.at("visited").get<std::vector<std::string>>();
  record.action = in.at("action").get<std::vector<double>>();
  for (const auto& doc : in.at("retrieved")) {
    record.retrieved.push_back({doc.at("doc_id").get<std::string>(),
                                doc.at("score").get<double>(),
                                doc.at("rank").get<std::size_t>()});
  }
  for (const auto& entry : in.at("feedback")) {
    record.feedback.push_back({entry.at("doc_id").get<std::string>(),
                               entry.at("rating").get<int>(),
                               entry.at("subtopics").get<std::vector<int>>(),
                               std::nullopt});
  }
  record.reward = in.at("reward").get<double>();
  return record;
}

void write_episode_log(std::ostream& out, std::span<const IterationRecord> records) {
  for (const auto& record : records) out << to_json_line(record) << '\n';
}

std::vector<IterationRecord> read_episode_log(std::istream& in) {
  std::vector<IterationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("episode log line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return records;
}

SearchEnvironment::SearchEnvironment(GlobalRep rep, std::vector<std::string> row_doc_ids,
                                     const TopicGroundTruth* topic,
                                     EpisodeOptions options)
    : rep_(std::move(rep)),
      row_doc_ids_(std::move(row_doc_ids)),
      topic_(topic),
      options_(options) {
  if (!topic_) throw std::invalid_argument("SearchEnvironment: null topic");
  if (row_doc_ids_.size() != rep_.documents()) {
    throw std::invalid_argument("SearchEnvironment: one doc id per row required");
  }
  if (options_.k == 0 || options_.horizon < 1) {
    throw std::invalid_argument("SearchEnvironment: k and T must be >= 1");
  }
  reset();
}

void SearchEnvironment::reset() {
  state_ = initial_state(rep_);
  history_.clear();
  records_.clear();
  lists_.clear();
  last_feedback_ = {};
}

Tensor3 SearchEnvironment::observe() const {
  return pool_state(state_, options_.pool_rows, options_.pool_cols);
}

RetrievedSet SearchEnvironment::select(std::span<const double> action) const {
  static const std::vector<bool> kNoMask;
  auto scores = score_documents(action, state_.rep);
  auto selection = top_k_unvisited(
      scores, options_.allow_duplicates ? kNoMask : state_.visited, options_.k);
  selection.t = state_.t;
  return selection;
}

double SearchEnvironment::apply(const RetrievedSet& selection,
                                std::span<const double> action) {
  if (done()) throw std::logic_error("SearchEnvironment: episode is over");
  IterationRecord record;
  record.t = state_.t;
  record.visited.assign(history_.begin(), history_.end());
  record.action.assign(action.begin(), action.end());
  std::vector<std::string> batch;
  for (std::size_t i = 0; i < selection.doc_indices.size(); ++i) {
    const auto row = selection.doc_indices[i];
    if (row >= row_doc_ids_.size()) {
      throw std::out_of_range("SearchEnvironment: selected row out of range");
    }
    batch.push_back(row_doc_ids_[row]);
    record.retrieved.push_back({row_doc_ids_[row], selection.scores[i], i + 1});
  }
  last_feedback_ = give_feedback(*topic_, batch);
  record.feedback = last_feedback_.entries;
  record.reward = reward(last_feedback_, history_);
  history_.insert(batch.begin(), batch.end());
  lists_.push_back(std::move(batch));
  state_ = mark_visited(state_, selection.doc_indices);
  const double r = record.reward;
  records_.push_back(std::move(record));
  return r;
}

double SearchEnvironment::step(std::span<const double> action) {
  return apply(select(action), action);
}

PolicySearcher::PolicySearcher(std::string name, const Agent* agent, AgentParams params)
    : name_(std::move(name)), agent_(agent), params_(std::move(params)) {}

Decision PolicySearcher::decide(const SearchEnvironment& env, std::mt19937_64& rng) {
  ActionSample sample = agent_->act(params_, env.observe(), rng);
  Decision d;
  d.selection = env.select(sample.action);
  d.action = std::move(sample.action);
  return d;
}

Decision FixedActionSearcher::decide(const SearchEnvironment& env, std::mt19937_64&) {
  return {env.select(action_), action_};
}

Decision RandomSearcher::decide(const SearchEnvironment& env, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> scores(env.state().rep.documents());
  for (auto& s : scores) s = unit(rng);
  Decision d;
  d.selection = top_k_unvisited(scores, env.state().visited, env.options().k);
  d.selection.t = env.state().t;
  return d;
}

StaticSearcher::StaticSearcher(SparseVector query, std::vector<SparseVector> row_vectors)
    : query_(std::move(query)), rows_(std::move(row_vectors)) {}

Decision StaticSearcher::decide(const SearchEnvironment& env, std::mt19937_64&) {
  Decision d;
  d.selection = baseline_static_rank(query_, rows_, env.state().visited, env.options().k);
  d.selection.t = env.state().t;
  return d;
}

FeedbackSearcher::FeedbackSearcher(
    SparseVector query, std::vector<SparseVector> row_vectors,
    std::function<SparseVector(const FeedbackEntry&)> feedback_vector, double alpha)
    : query_(std::move(query)),
      rows_(std::move(row_vectors)),
      to_vector_(std::move(feedback_vector)),
      alpha_(alpha) {}

Decision FeedbackSearcher::decide(const SearchEnvironment& env, std::mt19937_64&) {
  Decision d;
  d.selection = baseline_relevance_feedback(query_, feedback_, rows_, env.state().visited,
                                            env.options().k, alpha_);
  d.selection.t = env.state().t;
  return d;
}

void FeedbackSearcher::observe_feedback(const Feedback& feedback) {
  for (const auto& entry : feedback.entries) {
    if (entry.rating > 0) feedback_.push_back(to_vector_(entry));
  }
}

EpisodeResult run_episode(SearchEnvironment& env, Searcher& searcher,
                          const MetricConfig& metric_config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  env.reset();
  searcher.begin_episode();
  EpisodeResult result;
  while (!env.done()) {
    Decision d = searcher.decide(env, rng);
    Step step;
    step.action = d.action;
    step.reward = env.apply(d.selection, d.action);
    searcher.observe_feedback(env.last_feedback());
    result.total_reward += step.reward;
    result.trajectory.steps.push_back(std::move(step));
  }
  result.records = env.records();
  result.lists = env.lists();
  result.metrics = evaluate_episode(result.lists, env.topic(), metric_config);
  return result;
}

}  // namespace ce3
