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

#include "ce3/retrieval.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ce3 {

std::vector<double> score_documents(std::span<const double> action,
                                    const GlobalRep& rep) {
  if (action.size() != rep.dims()) {
    throw std::invalid_argument("score_documents: action size != n");
  }
  const Tensor3& v = rep.values;
  std::vector<double> scores(v.rows, 0.0);
  for (std::size_t i = 0; i < v.rows; ++i) {
    double score = 0.0;
    for (std::size_t j = 0; j < v.cols; ++j) {
      for (std::size_t k = 0; k < v.channels; ++k) score += v.at(i, j, k) * action[k];
    }
    scores[i] = score;
  }
  return scores;
}

RetrievedSet top_k_unvisited(std::span<const double> scores,
                             const std::vector<bool>& visited, std::size_t k) {
  if (k == 0) throw std::invalid_argument("top_k_unvisited: k must be >= 1");
  if (!visited.empty() && visited.size() != scores.size()) {
    throw std::invalid_argument("top_k_unvisited: visited mask has wrong size");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (visited.empty() || !visited[i]) candidates.push_back(i);
  }
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  RetrievedSet out;
  out.doc_indices.assign(candidates.begin(),
                         candidates.begin() + static_cast<std::ptrdiff_t>(take));
  for (auto d : out.doc_indices) out.scores.push_back(scores[d]);
  return out;
}

SparseVector query_vector(std::span<const std::string> query,
                          const Vocabulary& vocab, std::size_t corpus_size) {
  if (query.empty()) throw std::invalid_argument("query_vector: empty query");
  return featurize(query, vocab, corpus_size);
}

namespace {

std::vector<double> cosine_scores(const SparseVector& query,
                                  std::span<const SparseVector> docs) {
  const double qn = query.norm();
  std::vector<double> scores(docs.size(), 0.0);
  if (qn == 0.0) return scores;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const double dn = docs[i].norm();
    if (dn > 0.0) scores[i] = query.dot(docs[i]) / (qn * dn);
  }
  return scores;
}

}  // namespace

RetrievedSet baseline_static_rank(const SparseVector& query,
                                  std::span<const SparseVector> docs,
                                  const std::vector<bool>& visited, std::size_t k) {
  if (query.empty()) throw std::invalid_argument("baseline_static_rank: empty query");
  return top_k_unvisited(cosine_scores(query, docs), visited, k);
}

SparseVector rocchio_query(const SparseVector& query,
                           std::span<const SparseVector> feedback, double alpha) {
  if (feedback.empty() || alpha == 0.0) return query;
  std::map<std::uint32_t, double> acc;
  for (const auto& [i, v] : query.entries) acc[i] += v;
  const double w = alpha / static_cast<double>(feedback.size());
  for (const auto& vec : feedback) {
    for (const auto& [i, v] : vec.entries) acc[i] += w * v;
  }
  SparseVector out;
  out.entries.assign(acc.begin(), acc.end());
  return out;
}

RetrievedSet baseline_relevance_feedback(const SparseVector& query,
                                         std::span<const SparseVector> feedback,
                                         std::span<const SparseVector> docs,
                                         const std::vector<bool>& visited,
                                         std::size_t k, double alpha) {
  if (query.empty()) {
    throw std::invalid_argument("baseline_relevance_feedback: empty query");
  }
  return top_k_unvisited(cosine_scores(rocchio_query(query, feedback, alpha), docs),
                         visited, k);
}

}  // namespace ce3
