#pragma once

// Synthetic corpora and embedding files shared by the unit and acceptance
// suites. Everything here is deterministic given the seed.

#include <filesystem>
#include <string>
#include <vector>

#include "cqarank/common.hpp"
#include "cqarank/corpus.hpp"
#include "cqarank/metrics.hpp"

namespace cqarank::testfix {

corpus::AnswerRecord make_record(long long q_id, long long a_id, bool accepted,
                                 long long accepted_a_id);

// Threads whose accepted answer always carries the strictly highest a_score;
// the other features are noise. answers_per_thread is drawn from [2, 5].
std::vector<corpus::AnswerRecord> score_separable_records(std::size_t n_threads,
                                                          std::uint64_t seed,
                                                          int year = 2016,
                                                          long long first_q_id = 1000);

// Threads where the accepted answer's body holds a marker token and the
// non-accepted bodies use disjoint filler words. Numerical features are
// noise unless informative_scores is set (then a_score also separates).
struct MarkerCorpusOptions {
  std::size_t n_threads = 500;
  std::uint64_t seed = 7;
  int year = 2016;
  long long first_q_id = 1;
  int min_answers = 2;
  int max_answers = 2;
  bool informative_scores = false;
};

std::vector<corpus::AnswerRecord> marker_records(const MarkerCorpusOptions& options);

// Vocabulary covering every token the marker corpus can produce.
std::vector<std::string> marker_vocabulary();

// One "word v1 v2 ..." line per vocabulary entry, deterministic vectors.
std::string embedding_file_text(const std::vector<std::string>& vocabulary, int dimension,
                                std::uint64_t seed);

// Randomized ranking query; score_levels <= n forces ties.
metrics::RankingQuery random_query(Rng& rng, int n, int score_levels);

// Unique scratch directory under the system temp dir.
std::filesystem::path make_temp_dir(const std::string& tag);

void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cqarank::testfix
