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

#ifndef CE3_SYNTHETIC_H_
#define CE3_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ce3/corpus.h"
#include "ce3/sim.h"

namespace ce3 {

// Recipe for one synthetic search topic. Relevant documents draw their
// topical tokens from their subtopic's block of the vocabulary, irrelevant
// ones from a distractor block; every document also draws query terms and
// Zipf-distributed background words, so the query alone does not separate
// the two classes.
struct SyntheticTopicSpec {
  std::string topic_id = "SYN-0";
  std::size_t subtopics = 3;
  std::size_t docs_per_subtopic = 10;
  std::size_t irrelevant_docs = 30;
  std::size_t distractor_themes = 1;
  std::size_t vocab_size = 2000;
  std::size_t block_size = 60;  // words per subtopic / distractor block
  std::size_t query_terms = 4;
  std::size_t min_length = 240;
  std::size_t max_length = 360;
  double topical_fraction = 0.35;
  double query_fraction = 0.05;
  double multi_subtopic_prob = 0.1;
  double negative_rating_prob = 0.2;
  // Relative weights of ratings 1..4 for relevant documents.
  std::vector<double> rating_weights = {0.3, 0.3, 0.2, 0.2};
  int first_subtopic_id = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticTopic {
  std::vector<Document> docs;  // shuffled; ids carry no label information
  TopicGroundTruth truth;
};

SyntheticTopic generate_synthetic_topic(const SyntheticTopicSpec& spec);

// splitmix64 finalizer; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace ce3

#endif  // CE3_SYNTHETIC_H_
