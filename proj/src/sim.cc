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

#include "ce3/sim.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace ce3 {

using nlohmann::json;

bool TopicGroundTruth::is_relevant(const std::string& doc_id) const {
  auto it = ratings.find(doc_id);
  return it != ratings.end() && it->second.rating > 0;
}

std::set<std::string> TopicGroundTruth::relevant_set() const {
  std::set<std::string> out;
  for (const auto& [doc_id, j] : ratings) {
    if (j.rating > 0) out.insert(doc_id);
  }
  return out;
}

double TopicGroundTruth::positive_rating_mass() const {
  double sum = 0.0;
  for (const auto& [doc_id, j] : ratings) sum += std::max(j.rating, 0);
  return sum;
}

void TopicGroundTruth::validate() const {
  if (topic_id.empty()) throw std::invalid_argument("topic has an empty topic_id");
  if (subtopics.empty()) {
    throw std::invalid_argument("topic " + topic_id + ": empty subtopic list");
  }
  std::set<int> known(subtopics.begin(), subtopics.end());
  if (known.size() != subtopics.size()) {
    throw std::invalid_argument("topic " + topic_id + ": duplicate subtopic id");
  }
  for (const auto& [doc_id, j] : ratings) {
    if (j.rating < kMinRating || j.rating > kMaxRating) {
      throw std::invalid_argument("topic " + topic_id + ": rating of " + doc_id +
                                  " outside [-1, 4]");
    }
    if (j.rating > 0 && j.subtopics.empty()) {
      throw std::invalid_argument("topic " + topic_id + ": relevant doc " + doc_id +
                                  " has no subtopic");
    }
    for (int s : j.subtopics) {
      if (!known.count(s)) {
        throw std::invalid_argument("topic " + topic_id + ": doc " + doc_id +
                                    " tagged with unknown subtopic " +
                                    std::to_string(s));
      }
    }
  }
}

namespace {

TopicGroundTruth parse_topic(const json& record) {
  TopicGroundTruth topic;
  topic.topic_id = record.at("topic_id").get<std::string>();
  topic.query = record.at("query").get<std::string>();
  topic.subtopics = record.at("subtopics").get<std::vector<int>>();
  for (const auto& r : record.at("ratings")) {
    Judgment j;
    j.rating = r.at("rating").get<int>();
    if (r.contains("subtopics")) j.subtopics = r.at("subtopics").get<std::vector<int>>();
    if (r.contains("passage") && !r.at("passage").is_null()) {
      j.passage = r.at("passage").get<std::string>();
    }
    auto doc_id = r.at("doc_id").get<std::string>();
    if (!topic.ratings.emplace(doc_id, std::move(j)).second) {
      throw std::invalid_argument("topic " + topic.topic_id + ": duplicate doc_id " +
                                  doc_id);
    }
  }
  topic.validate();
  return topic;
}

}  // namespace

std::vector<TopicGroundTruth> read_ground_truth(std::istream& in) {
  std::vector<TopicGroundTruth> topics;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      topics.push_back(parse_topic(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("ground truth line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return topics;
}

std::vector<TopicGroundTruth> load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ground truth file " + path);
  return read_ground_truth(in);
}

void write_ground_truth(std::ostream& out, std::span<const TopicGroundTruth> topics) {
  for (const auto& topic : topics) {
    json ratings = json::array();
    for (const auto& [doc_id, j] : topic.ratings) {
      json r{{"doc_id", doc_id}, {"rating", j.rating}, {"subtopics", j.subtopics}};
      if (j.passage) r["passage"] = *j.passage;
      ratings.push_back(std::move(r));
    }
    json record{{"topic_id", topic.topic_id},
                {"query", topic.query},
                {"subtopics", topic.subtopics},
                {"ratings", std::move(ratings)}};
    out << record.dump() << '\n';
  }
}

Feedback give_feedback(const TopicGroundTruth& topic,
                       std::span<const std::string> batch) {
  Feedback out;
  out.entries.reserve(batch.size());
  for (const auto& doc_id : batch) {
    FeedbackEntry entry{doc_id, 0, {}, std::nullopt};
    if (auto it = topic.ratings.find(doc_id); it != topic.ratings.end()) {
      entry.rating = it->second.rating;
      entry.subtopics = it->second.subtopics;
      entry.passage = it->second.passage;
    }
    out.entries.push_back(std::move(entry));
  }
  return out;
}

double reward(const Feedback& feedback, const std::set<std::string>& history) {
  double r = 0.0;
  std::unordered_set<std::string> counted;
  for (const auto& entry : feedback.entries) {
    if (history.count(entry.doc_id) || !counted.insert(entry.doc_id).second) continue;
    r += std::max(entry.rating, 0);
  }
  return r;
}

}  // namespace ce3
