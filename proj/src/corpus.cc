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

#include "ce3/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace ce3 {

double SparseVector::norm() const {
  double sum = 0.0;
  for (const auto& [index, value] : entries) sum += value * value;
  return std::sqrt(sum);
}

double SparseVector::dot(const SparseVector& other) const {
  double sum = 0.0;
  auto a = entries.begin();
  auto b = other.entries.begin();
  while (a != entries.end() && b != other.entries.end()) {
    if (a->first == b->first) {
      sum += a->second * b->second;
      ++a;
      ++b;
    } else if (a->first < b->first) {
      ++a;
    } else {
      ++b;
    }
  }
  return sum;
}

std::int64_t Vocabulary::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

void Vocabulary::add_document(std::span<const TokenSequence> segments) {
  std::unordered_set<std::size_t> seen;
  for (const auto& segment : segments) {
    for (const auto& token : segment) {
      auto [it, inserted] = index_.try_emplace(token, terms_.size());
      if (inserted) {
        terms_.push_back(token);
        doc_freq_.push_back(0);
      }
      if (seen.insert(it->second).second) ++doc_freq_[it->second];
    }
  }
}

TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  std::string current;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : raw);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

SegmentedDocument segment_document(const Document& doc, std::size_t segments) {
  if (segments == 0) {
    throw std::invalid_argument("segment_document: segment count must be >= 1");
  }
  SegmentedDocument out;
  out.doc_id = doc.doc_id;
  out.segments.resize(segments);
  const std::size_t total = doc.tokens.size();
  const std::size_t base = total / segments;
  const std::size_t extra = total % segments;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < segments; ++b) {
    std::size_t len = base + (b < extra ? 1 : 0);
    out.segments[b].assign(doc.tokens.begin() + pos,
                           doc.tokens.begin() + pos + len);
    pos += len;
  }
  return out;
}

Vocabulary build_vocabulary(std::span<const SegmentedDocument> corpus) {
  if (corpus.empty()) {
    throw std::invalid_argument("build_vocabulary: empty corpus");
  }
  Vocabulary vocab;
  for (const auto& doc : corpus) vocab.add_document(doc.segments);
  return vocab;
}

SparseVector featurize(std::span<const std::string> tokens,
                       const Vocabulary& vocab, std::size_t corpus_size) {
  std::map<std::uint32_t, double> counts;
  for (const auto& token : tokens) {
    auto index = vocab.index_of(token);
    if (index >= 0) counts[static_cast<std::uint32_t>(index)] += 1.0;
  }
  SparseVector out;
  out.entries.reserve(counts.size());
  for (const auto& [index, tf] : counts) {
    double df = static_cast<double>(vocab.document_frequency(index));
    double idf = std::log1p(static_cast<double>(corpus_size) / df);
    out.entries.emplace_back(index, tf * idf);
  }
  double norm = out.norm();
  if (norm > 0.0) {
    for (auto& entry : out.entries) entry.second /= norm;
  }
  return out;
}

std::vector<SegmentFeatures> featurize_corpus(
    std::span<const SegmentedDocument> corpus, const Vocabulary& vocab) {
  std::vector<SegmentFeatures> out;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& segments = corpus[d].segments;
    for (std::size_t b = 0; b < segments.size(); ++b) {
      out.push_back({d, b, featurize(segments[b], vocab, corpus.size())});
    }
  }
  return out;
}

std::vector<SparseVector> document_vectors(
    std::span<const SegmentedDocument> corpus, const Vocabulary& vocab) {
  std::vector<SparseVector> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) {
    TokenSequence all;
    for (const auto& segment : doc.segments) {
      all.insert(all.end(), segment.begin(), segment.end());
    }
    out.push_back(featurize(all, vocab, corpus.size()));
  }
  return out;
}

std::vector<Document> read_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    if (!record.contains("doc_id") || !record["doc_id"].is_string() ||
        !record.contains("text") || !record["text"].is_string()) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) +
                               ": expected string fields doc_id and text");
    }
    Document doc{record["doc_id"].get<std::string>(),
                 tokenize(record["text"].get<std::string>())};
    if (!ids.insert(doc.doc_id).second) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) +
                               ": duplicate doc_id " + doc.doc_id);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file " + path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out, std::span<const Document> docs) {
  for (const auto& doc : docs) {
    std::string text;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i) text.push_back(' ');
      text += doc.tokens[i];
    }
    out << nlohmann::json{{"doc_id", doc.doc_id}, {"text", text}}.dump()
        << '\n';
  }
}

}  // namespace ce3
