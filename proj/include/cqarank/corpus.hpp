#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cqarank::corpus {

// One answer row joined to its question and answering user, mirroring the
// column aliases of the export query (see emit_sql).
struct AnswerRecord {
  long long q_id = 0;
  std::string q_title;
  std::string q_body;  // raw HTML
  long long q_answer_count = 0;
  long long q_accepted_a = 0;
  long long a_id = 0;
  std::string a_body;  // raw HTML
  long long a_score = 0;  // signed vote score
  long long a_comment_count = 0;
  long long user_id = 0;
  std::optional<std::string> user_about;
  std::optional<std::string> user_location;
  long long user_reputation = 0;
  long long user_up_votes = 0;
  long long user_down_votes = 0;
  long long user_views = 0;
  std::optional<std::string> user_profile_image_url;
  std::optional<std::string> user_website_url;
  bool a_accepted = false;  // true iff q_accepted_a == a_id
  int q_creation_year = 0;
  std::optional<long long> user_age;  // present in dumps; never used as a feature
};

// One question with all of its answers: at least two answers, exactly one of
// them accepted, ordered by a_id ascending.
struct QuestionThread {
  long long q_id = 0;
  std::string q_title;
  std::string q_body;
  std::vector<AnswerRecord> answers;
};

struct ThreadingResult {
  std::vector<QuestionThread> threads;  // q_id ascending
  std::size_t discarded_records = 0;    // records dropped by thread filtering
};

struct DatasetSplit {
  std::vector<AnswerRecord> train;
  std::vector<AnswerRecord> test;
  std::uint64_t seed = 0;
};

// Parses JSON Lines (one object per line, keys matching the export column
// aliases). a_accepted is accepted as "0"/"1", 0/1, or booleans. Throws
// std::runtime_error carrying the line number on malformed lines, missing
// required fields, or invariant violations.
std::vector<AnswerRecord> parse_records(std::istream& stream);
std::vector<AnswerRecord> parse_records_file(const std::string& path);

// Inverse of parse_records for the retained fields (JSON Lines text).
std::string serialize_records(const std::vector<AnswerRecord>& records);

// Groups records by q_id into threads. Groups with a single answer, no
// accepted answer, or multiple accepted answers are dropped (dirty exports
// happen); the count of dropped records comes back in the tally.
ThreadingResult group_threads(const std::vector<AnswerRecord>& records);

// Samples exactly n_per_class accepted and n_per_class not-accepted records
// without replacement, preserving input order; deterministic given seed.
// Throws std::runtime_error when either class is too small.
std::vector<AnswerRecord> balance_training(const std::vector<AnswerRecord>& records,
                                           std::size_t n_per_class, std::uint64_t seed);

// Train = records created in train_year, test = test_year, rest discarded.
// Throws std::invalid_argument when the years coincide.
DatasetSplit split_by_year(const std::vector<AnswerRecord>& records, int train_year,
                           int test_year);

// Returns the BigQuery export query with the acceptance comparison ("=" or
// "!="), year, and LIMIT substituted.
std::string emit_sql(bool accepted, int year, long long limit);

// (accepted, not accepted) counts.
std::pair<std::size_t, std::size_t> class_distribution(const std::vector<AnswerRecord>& records);

}  // namespace cqarank::corpus
