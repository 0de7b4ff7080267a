#include "cqarank/vectorize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "cqarank/textproc.hpp"

namespace cqarank::vectorize {

TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& documents,
                     std::size_t max_vocab) {
  if (documents.empty()) throw std::invalid_argument("fit_tfidf: empty corpus");

  std::unordered_map<std::string, long long> df;
  for (const auto& doc : documents) {
    std::unordered_set<std::string_view> seen;
    for (const auto& tok : doc) {
      if (seen.insert(tok).second) ++df[tok];
    }
  }

  std::vector<std::pair<std::string, long long>> kept;
  for (const auto& [tok, count] : df) {
    if (count >= 2) kept.emplace_back(tok, count);
  }
  if (kept.size() > max_vocab) {
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    kept.resize(max_vocab);
  }
  std::sort(kept.begin(), kept.end());  // lexicographic column assignment

  TfidfModel model;
  model.corpus_size = static_cast<long long>(documents.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    model.vocabulary.emplace(kept[i].first, static_cast<int>(i));
    model.document_frequency.emplace(kept[i].first, kept[i].second);
  }
  return model;
}

SparseVector tfidf_transform(const TfidfModel& model, const std::vector<std::string>& document) {
  std::unordered_map<std::string_view, long long> tf;
  for (const auto& tok : document) {
    if (model.vocabulary.contains(tok)) ++tf[tok];
  }

  // weight = tf * (ln((1+N)/(1+df)) + 1), then L2 normalization
  SparseVector vec;
  vec.reserve(tf.size());
  double n = static_cast<double>(model.corpus_size);
  double norm_sq = 0.0;
  for (const auto& [tok, count] : tf) {
    std::string key(tok);
    double idf =
        std::log((1.0 + n) / (1.0 + static_cast<double>(model.document_frequency.at(key)))) + 1.0;
    double weight = static_cast<double>(count) * idf;
    vec.emplace_back(model.vocabulary.at(key), weight);
    norm_sq += weight * weight;
  }
  std::sort(vec.begin(), vec.end());
  if (norm_sq > 0.0) {
    double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [column, weight] : vec) weight *= inv;
  }
  return vec;
}

Matrix densify(const std::vector<SparseVector>& docs, std::size_t width) {
  Matrix m(docs.size(), width);
  for (std::size_t r = 0; r < docs.size(); ++r) {
    for (const auto& [column, weight] : docs[r]) {
      m(r, static_cast<std::size_t>(column)) = weight;
    }
  }
  return m;
}

EmbeddingTable load_embeddings(const std::string& path, int expected_dimension) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file " + path);
  return load_embeddings(in, expected_dimension);
}

EmbeddingTable load_embeddings(std::istream& in, int expected_dimension) {
  if (expected_dimension <= 0) throw std::invalid_argument("embedding dimension must be positive");

  EmbeddingTable table;
  table.dimension = expected_dimension;
  table.vectors.assign(2 * static_cast<std::size_t>(expected_dimension), 0.0);  // PAD, UNK

  std::string line;
  std::size_t line_no = 0;
  std::vector<double> parsed;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::size_t space = line.find(' ');
    if (space == std::string::npos || space == 0) {
      throw std::runtime_error("embedding line " + std::to_string(line_no) +
                               ": expected word followed by floats");
    }
    std::string word = line.substr(0, space);

    parsed.clear();
    const char* p = line.data() + space + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      double value = 0.0;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc()) {
        throw std::runtime_error("embedding line " + std::to_string(line_no) +
                                 ": bad float value");
      }
      parsed.push_back(value);
      p = next;
      if (p < end) {
        if (*p != ' ') {
          throw std::runtime_error("embedding line " + std::to_string(line_no) +
                                   ": values must be single-space separated");
        }
        ++p;
      }
    }
    if (parsed.size() != static_cast<std::size_t>(expected_dimension)) {
      throw std::runtime_error("embedding line " + std::to_string(line_no) + ": expected " +
                               std::to_string(expected_dimension) + " floats, got " +
                               std::to_string(parsed.size()));
    }

    auto it = table.word_to_id.find(word);
    if (it != table.word_to_id.end()) {
      ++table.duplicate_count;  // last occurrence wins
      std::copy(parsed.begin(), parsed.end(),
                table.vectors.begin() + static_cast<std::size_t>(it->second) * expected_dimension);
    } else {
      int id = static_cast<int>(table.word_count()) + 2;
      table.word_to_id.emplace(std::move(word), id);
      table.vectors.insert(table.vectors.end(), parsed.begin(), parsed.end());
    }
  }
  return table;
}

std::string summarize_sentences(std::string_view text, int max_sentences) {
  if (max_sentences < 0) return std::string(text);
  if (max_sentences == 0) throw std::invalid_argument("max_sentences must be -1 or >= 1");

  auto sentences = textproc::split_sentences(text);
  if (sentences.size() <= static_cast<std::size_t>(max_sentences)) return std::string(text);

  // Rank by token length, earlier sentence winning ties, then restore
  // document order for the survivors.
  std::vector<std::pair<long long, std::size_t>> ranked;  // (-length, index)
  ranked.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    ranked.emplace_back(-static_cast<long long>(textproc::tokenize(sentences[i]).size()), i);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::size_t> chosen;
  for (int i = 0; i < max_sentences; ++i) chosen.push_back(ranked[i].second);
  std::sort(chosen.begin(), chosen.end());

  std::string out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (i) out += ' ';
    out += sentences[chosen[i]];
  }
  return out;
}

TokenSequence encode_sequence(std::string_view text, const EmbeddingTable& table, int max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");

  TokenSequence seq;
  seq.ids.assign(static_cast<std::size_t>(max_len), EmbeddingTable::kPadId);
  auto tokens = textproc::tokenize(text);
  std::size_t kept = std::min(tokens.size(), static_cast<std::size_t>(max_len));
  for (std::size_t i = 0; i < kept; ++i) {
    int id = table.id_for(tokens[i]);
    seq.ids[i] = id;
    if (id == EmbeddingTable::kUnkId) ++seq.oov_positions;
  }
  seq.valid_length = static_cast<int>(kept);
  return seq;
}

OovReport oov_report(const std::vector<std::string>& corpus_texts, const EmbeddingTable& table) {
  std::unordered_set<std::string> types;
  for (const auto& text : corpus_texts) {
    for (auto& tok : textproc::tokenize(text)) types.insert(std::move(tok));
  }

  OovReport report;
  std::set<std::string> missed;
  for (const auto& tok : types) {
    if (table.word_to_id.contains(tok)) {
      ++report.converted;
    } else {
      ++report.misses;
      missed.insert(tok);
    }
  }
  for (const auto& tok : missed) {
    if (report.miss_examples.size() == 20) break;
    report.miss_examples.push_back(tok);
  }
  return report;
}

}  // namespace cqarank::vectorize
