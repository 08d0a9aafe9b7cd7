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

#ifndef CE3_CORPUS_H_
#define CE3_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ce3 {

using TokenSequence = std::vector<std::string>;

inline constexpr std::size_t kDefaultSegments = 20;

struct Document {
  std::string doc_id;
  TokenSequence tokens;
};

// A document cut into exactly B contiguous blocks. Concatenating the blocks
// gives back the original token sequence.
struct SegmentedDocument {
  std::string doc_id;
  std::vector<TokenSequence> segments;
};

// Sparse vector with strictly increasing indices.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  double norm() const;
  double dot(const SparseVector& other) const;
  bool empty() const { return entries.empty(); }
};

class Vocabulary {
 public:
  // Returns -1 for out-of-vocabulary terms.
  std::int64_t index_of(std::string_view term) const;
  std::size_t document_frequency(std::size_t index) const {
    return doc_freq_.at(index);
  }
  const std::string& term(std::size_t index) const { return terms_.at(index); }
  std::size_t size() const { return terms_.size(); }

  // Adds one document's distinct terms.
  void add_document(std::span<const TokenSequence> segments);

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> terms_;
  std::vector<std::size_t> doc_freq_;
};

struct SegmentFeatures {
  std::size_t doc_index = 0;
  std::size_t segment_index = 0;
  SparseVector weights;
};

// Lowercased alphanumeric word tokens in original order. Bytes outside ASCII
// are kept as word characters so UTF-8 words stay intact.
TokenSequence tokenize(std::string_view text);

// Near-equal contiguous split: the first (N mod B) blocks take one extra token.
SegmentedDocument segment_document(const Document& doc,
                                   std::size_t segments = kDefaultSegments);

Vocabulary build_vocabulary(std::span<const SegmentedDocument> corpus);

// tf(t) * ln(1 + corpus_size / df(t)), then L2-normalized. Unknown tokens
// are ignored.
SparseVector featurize(std::span<const std::string> tokens,
                       const Vocabulary& vocab, std::size_t corpus_size);

// Features for every segment of every document, doc-major order.
std::vector<SegmentFeatures> featurize_corpus(
    std::span<const SegmentedDocument> corpus, const Vocabulary& vocab);

// Whole-document TF-IDF vectors (same weighting as segments).
std::vector<SparseVector> document_vectors(
    std::span<const SegmentedDocument> corpus, const Vocabulary& vocab);

// Line-delimited JSON: {"doc_id": ..., "text": ...} per line.
std::vector<Document> read_corpus(std::istream& in);
std::vector<Document> read_corpus_file(const std::string& path);
void write_corpus(std::ostream& out, std::span<const Document> docs);

}  // namespace ce3

#endif  // CE3_CORPUS_H_
