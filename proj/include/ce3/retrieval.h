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

#ifndef CE3_RETRIEVAL_H_
#define CE3_RETRIEVAL_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ce3/corpus.h"
#include "ce3/state.h"

namespace ce3 {

inline constexpr std::size_t kDefaultResultsPerIteration = 5;
inline constexpr double kDefaultRocchioAlpha = 0.75;

struct RetrievedSet {
  int t = 0;
  std::vector<std::size_t> doc_indices;
  std::vector<double> scores;
};

// score_i = sum_j y_ij . action, over every row of the representation
// (visited rows hold the sentinel and are filtered at selection time).
std::vector<double> score_documents(std::span<const double> action,
                                    const GlobalRep& rep);

// k highest scores among documents with visited[i] == false; ties go to the
// lower index. An empty `visited` excludes nothing.
RetrievedSet top_k_unvisited(std::span<const double> scores,
                             const std::vector<bool>& visited, std::size_t k);

enum class BaselineKind { kStatic, kRelevanceFeedback };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kStatic;
  TokenSequence query;
  double alpha = kDefaultRocchioAlpha;
};

// L2-normalized TF-IDF vector for a query. Rejects an empty query.
SparseVector query_vector(std::span<const std::string> query,
                          const Vocabulary& vocab, std::size_t corpus_size);

// Cosine between the fixed query and each document, top-k unvisited.
RetrievedSet baseline_static_rank(const SparseVector& query,
                                  std::span<const SparseVector> docs,
                                  const std::vector<bool>& visited, std::size_t k);

// Rocchio update q' = q + alpha * centroid(feedback), then cosine re-rank.
// Empty feedback reduces to the static ranking.
RetrievedSet baseline_relevance_feedback(const SparseVector& query,
                                         std::span<const SparseVector> feedback,
                                         std::span<const SparseVector> docs,
                                         const std::vector<bool>& visited,
                                         std::size_t k,
                                         double alpha = kDefaultRocchioAlpha);

SparseVector rocchio_query(const SparseVector& query,
                           std::span<const SparseVector> feedback, double alpha);

}  // namespace ce3

#endif  // CE3_RETRIEVAL_H_
