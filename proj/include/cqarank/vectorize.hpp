#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cqarank/common.hpp"

namespace cqarank::vectorize {

// Bag-of-words model: vocabulary column indices are dense in [0, size) and
// assigned lexicographically over the selected tokens.
struct TfidfModel {
  std::unordered_map<std::string, int> vocabulary;            // token -> column
  std::unordered_map<std::string, long long> document_frequency;  // vocabulary tokens only
  long long corpus_size = 0;
};

// (column, weight) pairs, column ascending.
using SparseVector = std::vector<std::pair<int, double>>;

// Vocabulary keeps tokens seen in at least 2 documents, capped to the
// max_vocab most document-frequent (ties broken lexicographically).
// Throws std::invalid_argument on an empty corpus.
TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& documents,
                     std::size_t max_vocab);

// weight(t) = tf(t) * (ln((1+N)/(1+df(t))) + 1), L2-normalized. A document
// with no in-vocabulary token maps to the zero vector.
SparseVector tfidf_transform(const TfidfModel& model, const std::vector<std::string>& document);

Matrix densify(const std::vector<SparseVector>& docs, std::size_t width);

// Pretrained word vectors plus the two reserved rows: PAD=0 and UNK=1, both
// all-zero. Corpus words get ids from 2 upward.
struct EmbeddingTable {
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  int dimension = 0;
  std::unordered_map<std::string, int> word_to_id;
  std::vector<double> vectors;  // (word count + 2) x dimension, row-major
  long long duplicate_count = 0;

  int id_for(const std::string& word) const {
    auto it = word_to_id.find(word);
    return it == word_to_id.end() ? kUnkId : it->second;
  }
  std::span<const double> vec(int id) const {
    return {vectors.data() + static_cast<std::size_t>(id) * dimension,
            static_cast<std::size_t>(dimension)};
  }
  std::size_t word_count() const { return word_to_id.size(); }
};

// Text format: word then `expected_dimension` floats, single-space separated,
// one entry per line. A line with the wrong float count raises an error
// naming the line; duplicated words keep the last vector and bump
// duplicate_count.
EmbeddingTable load_embeddings(const std::string& path, int expected_dimension);
EmbeddingTable load_embeddings(std::istream& in, int expected_dimension);

// Fixed-length integer-id encoding of one text.
struct TokenSequence {
  std::vector<int> ids;   // length == max_len; positions past valid_length are PAD
  int valid_length = 0;
  int oov_positions = 0;  // UNK assignments among the kept tokens
};

// Keeps the max_sentences longest sentences (length in tokens, earlier
// sentence wins ties) re-joined in original order; -1 or a budget covering
// every sentence returns the text unchanged.
std::string summarize_sentences(std::string_view text, int max_sentences);

// Tokenize, map to ids (UNK when absent), truncate to max_len, right-pad.
TokenSequence encode_sequence(std::string_view text, const EmbeddingTable& table, int max_len);

// Distinct-type coverage of a corpus against an embedding table.
struct OovReport {
  long long converted = 0;
  long long misses = 0;
  std::vector<std::string> miss_examples;  // up to 20, alphabetical
};

OovReport oov_report(const std::vector<std::string>& corpus_texts, const EmbeddingTable& table);

}  // namespace cqarank::vectorize
