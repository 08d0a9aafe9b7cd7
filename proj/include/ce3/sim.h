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

#ifndef CE3_SIM_H_
#define CE3_SIM_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ce3/corpus.h"

namespace ce3 {

inline constexpr int kMinRating = -1;
inline constexpr int kMaxRating = 4;

struct Judgment {
  int rating = 0;
  std::vector<int> subtopics;
  std::optional<std::string> passage;
};

struct TopicGroundTruth {
  std::string topic_id;
  std::string query;
  std::vector<int> subtopics;
  std::map<std::string, Judgment> ratings;

  TokenSequence query_tokens() const { return tokenize(query); }
  bool is_relevant(const std::string& doc_id) const;
  // Documents with rating > 0.
  std::set<std::string> relevant_set() const;
  // Sum of positive ratings; an upper bound on any episode's reward.
  double positive_rating_mass() const;
  // Throws std::invalid_argument describing the first violation.
  void validate() const;
};

struct FeedbackEntry {
  std::string doc_id;
  int rating = 0;  // raw, may be -1
  std::vector<int> subtopics;
  std::optional<std::string> passage;
};

struct Feedback {
  std::vector<FeedbackEntry> entries;
};

// One topic per line:
// {"topic_id", "query", "subtopics": [ids],
//  "ratings": [{"doc_id", "rating", "subtopics": [ids], "passage"?}]}
std::vector<TopicGroundTruth> read_ground_truth(std::istream& in);
std::vector<TopicGroundTruth> load_ground_truth(const std::string& path);
void write_ground_truth(std::ostream& out, std::span<const TopicGroundTruth> topics);

// Verbatim lookup; unrated documents come back with rating 0.
Feedback give_feedback(const TopicGroundTruth& topic,
                       std::span<const std::string> batch);

// Sum of max(rating, 0) over batch documents not already in history.
double reward(const Feedback& feedback, const std::set<std::string>& history);

}  // namespace ce3

#endif  // CE3_SIM_H_
