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

#include "ce3/synthetic.h"

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

namespace ce3 {
namespace {

TEST(Synthetic, DefaultCountsHonorOneToOneMix) {
  const auto topic = generate_synthetic_topic(SyntheticTopicSpec{});
  EXPECT_EQ(topic.docs.size(), 60u);
  EXPECT_EQ(topic.truth.relevant_set().size(), 30u);
  EXPECT_EQ(topic.truth.ratings.size(), 60u);
  EXPECT_EQ(topic.truth.subtopics, (std::vector<int>{1, 2, 3}));
  EXPECT_NO_THROW(topic.truth.validate());
}

TEST(Synthetic, EverySubtopicHasItsDocuments) {
  const auto topic = generate_synthetic_topic(SyntheticTopicSpec{});
  std::map<int, int> primary;
  for (const auto& [id, j] : topic.truth.ratings) {
    if (j.rating > 0) {
      EXPECT_GE(j.rating, 1);
      EXPECT_LE(j.rating, 4);
      ASSERT_FALSE(j.subtopics.empty());
      EXPECT_TRUE(j.passage.has_value());
      ++primary[j.subtopics[0]];
    } else {
      EXPECT_TRUE(j.rating == 0 || j.rating == -1);
    }
  }
  for (int s : {1, 2, 3}) EXPECT_EQ(primary[s], 10);
}

TEST(Synthetic, DeterministicBytes) {
  SyntheticTopicSpec spec;
  spec.seed = 42;
  std::ostringstream a, b, ga, gb;
  const auto t1 = generate_synthetic_topic(spec);
  const auto t2 = generate_synthetic_topic(spec);
  write_corpus(a, t1.docs);
  write_corpus(b, t2.docs);
  write_ground_truth(ga, std::vector<TopicGroundTruth>{t1.truth});
  write_ground_truth(gb, std::vector<TopicGroundTruth>{t2.truth});
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(ga.str(), gb.str());
  spec.seed = 43;
  std::ostringstream c;
  write_corpus(c, generate_synthetic_topic(spec).docs);
  EXPECT_NE(a.str(), c.str());
}

TEST(Synthetic, IdsCarryNoLabel) {
  const auto topic = generate_synthetic_topic(SyntheticTopicSpec{});
  std::set<std::string> ids;
  for (const auto& d : topic.docs) ids.insert(d.doc_id);
  EXPECT_EQ(ids.size(), 60u);
  // Relevant documents are spread through the shuffled order.
  std::size_t relevant_in_first_half = 0;
  for (std::size_t i = 0; i < 30; ++i) {
    relevant_in_first_half += topic.truth.is_relevant(topic.docs[i].doc_id);
  }
  EXPECT_GT(relevant_in_first_half, 5u);
  EXPECT_LT(relevant_in_first_half, 25u);
}

double cosine(const SparseVector& a, const SparseVector& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

TEST(Synthetic, IntraSubtopicCosineExceedsInter) {
  SyntheticTopicSpec spec;
  spec.subtopics = 2;
  spec.irrelevant_docs = 20;
  spec.multi_subtopic_prob = 0.0;
  spec.seed = 7;
  const auto topic = generate_synthetic_topic(spec);
  std::vector<SegmentedDocument> segmented;
  for (const auto& d : topic.docs) segmented.push_back(segment_document(d));
  const auto vectors = document_vectors(segmented, build_vocabulary(segmented));
  std::vector<int> label;
  for (const auto& d : topic.docs) {
    const auto& j = topic.truth.ratings.at(d.doc_id);
    label.push_back(j.rating > 0 ? j.subtopics[0] : 0);
  }
  double intra = 0.0, inter = 0.0;
  int n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t k = i + 1; k < vectors.size(); ++k) {
      if (label[i] == 0 || label[k] == 0) continue;
      const double c = cosine(vectors[i], vectors[k]);
      if (label[i] == label[k]) {
        intra += c;
        ++n_intra;
      } else {
        inter += c;
        ++n_inter;
      }
    }
  }
  EXPECT_LT(inter / n_inter, intra / n_intra);
}

TEST(Synthetic, InvalidSpecRejected) {
  SyntheticTopicSpec spec;
  spec.subtopics = 0;
  EXPECT_THROW(generate_synthetic_topic(spec), std::invalid_argument);
  spec = SyntheticTopicSpec{};
  spec.vocab_size = 100;
  EXPECT_THROW(generate_synthetic_topic(spec), std::invalid_argument);
  spec = SyntheticTopicSpec{};
  spec.rating_weights = {1.0};
  EXPECT_THROW(generate_synthetic_topic(spec), std::invalid_argument);
  spec = SyntheticTopicSpec{};
  spec.min_length = 10;
  spec.max_length = 5;
  EXPECT_THROW(generate_synthetic_topic(spec), std::invalid_argument);
}

TEST(MixSeed, StreamsDiffer) {
  EXPECT_EQ(mix_seed(1, 2), mix_seed(1, 2));
  EXPECT_NE(mix_seed(1, 2), mix_seed(1, 3));
  EXPECT_NE(mix_seed(1, 2), mix_seed(2, 2));
}

}  // namespace
}  // namespace ce3
