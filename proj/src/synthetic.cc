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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace ce3 {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void SyntheticTopicSpec::validate() const {
  if (subtopics == 0) throw std::invalid_argument("synthetic spec: need >= 1 subtopic");
  if (docs_per_subtopic == 0) {
    throw std::invalid_argument("synthetic spec: need >= 1 doc per subtopic");
  }
  if (irrelevant_docs > 0 && distractor_themes == 0) {
    throw std::invalid_argument("synthetic spec: irrelevant docs need a distractor theme");
  }
  if (block_size == 0 || query_terms == 0) {
    throw std::invalid_argument("synthetic spec: empty vocabulary block");
  }
  const std::size_t reserved = query_terms + (subtopics + distractor_themes) * block_size;
  if (reserved >= vocab_size) {
    throw std::invalid_argument("synthetic spec: vocabulary too small for its blocks");
  }
  if (min_length == 0 || max_length < min_length) {
    throw std::invalid_argument("synthetic spec: bad document length range");
  }
  if (topical_fraction < 0.0 || query_fraction < 0.0 ||
      topical_fraction + query_fraction > 1.0) {
    throw std::invalid_argument("synthetic spec: token mixture fractions out of range");
  }
  if (multi_subtopic_prob < 0.0 || multi_subtopic_prob > 1.0 ||
      negative_rating_prob < 0.0 || negative_rating_prob > 1.0) {
    throw std::invalid_argument("synthetic spec: probability out of range");
  }
  if (rating_weights.size() != 4) {
    throw std::invalid_argument("synthetic spec: need 4 rating weights");
  }
  double total = 0.0;
  for (double w : rating_weights) {
    if (w < 0.0) throw std::invalid_argument("synthetic spec: negative rating weight");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("synthetic spec: rating weights sum to 0");
}

namespace {

std::string word(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%04zu", index);
  return buf;
}

struct Layout {
  std::size_t query_begin = 0;
  std::size_t subtopic_begin = 0;
  std::size_t distractor_begin = 0;
  std::size_t background_begin = 0;
};

}  // namespace

SyntheticTopic generate_synthetic_topic(const SyntheticTopicSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  Layout layout;
  layout.subtopic_begin = spec.query_terms;
  layout.distractor_begin = layout.subtopic_begin + spec.subtopics * spec.block_size;
  layout.background_begin =
      layout.distractor_begin + spec.distractor_themes * spec.block_size;
  const std::size_t background = spec.vocab_size - layout.background_begin;

  std::vector<double> zipf(background);
  for (std::size_t r = 0; r < background; ++r) zipf[r] = 1.0 / static_cast<double>(r + 1);
  std::discrete_distribution<std::size_t> background_dist(zipf.begin(), zipf.end());
  std::uniform_int_distribution<std::size_t> block_dist(0, spec.block_size - 1);
  std::uniform_int_distribution<std::size_t> query_dist(0, spec.query_terms - 1);
  std::uniform_int_distribution<std::size_t> length_dist(spec.min_length, spec.max_length);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<int> rating_dist(spec.rating_weights.begin(),
                                              spec.rating_weights.end());

  // Each block is a list of word indices; a document mixes its own blocks.
  auto make_tokens = [&](const std::vector<std::size_t>& block_starts) {
    TokenSequence tokens;
    const std::size_t length = length_dist(rng);
    tokens.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
      const double u = unit(rng);
      std::size_t index;
      if (u < spec.topical_fraction) {
        const std::size_t start = block_starts[i % block_starts.size()];
        index = start + block_dist(rng);
      } else if (u < spec.topical_fraction + spec.query_fraction) {
        index = layout.query_begin + query_dist(rng);
      } else {
        index = layout.background_begin + background_dist(rng);
      }
      tokens.push_back(word(index));
    }
    return tokens;
  };

  struct Pending {
    TokenSequence tokens;
    Judgment judgment;
  };
  std::vector<Pending> pending;
  std::vector<int> subtopic_ids;
  for (std::size_t s = 0; s < spec.subtopics; ++s) {
    subtopic_ids.push_back(spec.first_subtopic_id + static_cast<int>(s));
  }
  std::uniform_int_distribution<std::size_t> other_dist(
      0, spec.subtopics > 1 ? spec.subtopics - 2 : 0);
  for (std::size_t s = 0; s < spec.subtopics; ++s) {
    for (std::size_t d = 0; d < spec.docs_per_subtopic; ++d) {
      std::vector<std::size_t> subs = {s};
      if (spec.subtopics > 1 && unit(rng) < spec.multi_subtopic_prob) {
        std::size_t other = other_dist(rng);
        if (other >= s) ++other;
        subs.push_back(other);
      }
      std::vector<std::size_t> starts;
      Judgment j;
      for (auto sub : subs) {
        starts.push_back(layout.subtopic_begin + sub * spec.block_size);
        j.subtopics.push_back(subtopic_ids[sub]);
      }
      j.rating = rating_dist(rng) + 1;
      Pending p{make_tokens(starts), std::move(j)};
      const std::size_t window = std::min<std::size_t>(30, p.tokens.size());
      std::uniform_int_distribution<std::size_t> start_dist(0, p.tokens.size() - window);
      const std::size_t begin = start_dist(rng);
      std::string passage;
      for (std::size_t i = begin; i < begin + window; ++i) {
        if (i > begin) passage.push_back(' ');
        passage += p.tokens[i];
      }
      p.judgment.passage = std::move(passage);
      pending.push_back(std::move(p));
    }
  }
  for (std::size_t d = 0; d < spec.irrelevant_docs; ++d) {
    const std::size_t theme = d % spec.distractor_themes;
    Judgment j;
    j.rating = unit(rng) < spec.negative_rating_prob ? -1 : 0;
    pending.push_back({make_tokens({layout.distractor_begin + theme * spec.block_size}),
                       std::move(j)});
  }
  std::shuffle(pending.begin(), pending.end(), rng);

  SyntheticTopic out;
  out.truth.topic_id = spec.topic_id;
  out.truth.subtopics = subtopic_ids;
  for (std::size_t q = 0; q < spec.query_terms; ++q) {
    if (q) out.truth.query.push_back(' ');
    out.truth.query += word(layout.query_begin + q);
  }
  for (std::size_t i = 0; i < pending.size(); ++i) {
    char id[64];
    std::snprintf(id, sizeof(id), "%s-%04zu", spec.topic_id.c_str(), i);
    out.docs.push_back({id, std::move(pending[i].tokens)});
    out.truth.ratings.emplace(id, std::move(pending[i].judgment));
  }
  out.truth.validate();
  return out;
}

}  // namespace ce3
