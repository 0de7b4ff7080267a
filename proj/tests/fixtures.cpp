#include "fixtures.hpp"

#include <unistd.h>

#include <fstream>
#include <stdexcept>

namespace cqarank::testfix {

namespace {

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> kWords = {
      "loop",   "array",  "index",   "value",  "thread", "stack",  "parse",  "token",
      "buffer", "socket", "string",  "branch", "merge",  "cache",  "query",  "table",
      "shard",  "frame",  "handle",  "mutex",  "vector", "filter", "reduce", "visit"};
  return kWords;
}

const std::vector<std::string>& question_words() {
  static const std::vector<std::string> kWords = {"how", "why", "what", "where", "which",
                                                  "error", "crash", "slow", "fails", "build"};
  return kWords;
}

std::string sample_words(Rng& rng, const std::vector<std::string>& pool, int count) {
  std::string text;
  for (int i = 0; i < count; ++i) {
    if (i) text += ' ';
    text += pool[static_cast<std::size_t>(rng.below(pool.size()))];
  }
  return text;
}

}  // namespace

corpus::AnswerRecord make_record(long long q_id, long long a_id, bool accepted,
                                 long long accepted_a_id) {
  corpus::AnswerRecord r;
  r.q_id = q_id;
  r.q_title = "question " + std::to_string(q_id);
  r.q_body = "<p>body of question " + std::to_string(q_id) + "</p>";
  r.q_answer_count = 2;
  r.q_accepted_a = accepted_a_id;
  r.a_id = a_id;
  r.a_body = "<p>answer " + std::to_string(a_id) + "</p>";
  r.a_score = 1;
  r.a_comment_count = 0;
  r.user_id = 100 + a_id;
  r.user_reputation = 10;
  r.user_up_votes = 5;
  r.user_down_votes = 1;
  r.user_views = 3;
  r.a_accepted = accepted;
  r.q_creation_year = 2016;
  return r;
}

std::vector<corpus::AnswerRecord> score_separable_records(std::size_t n_threads,
                                                          std::uint64_t seed, int year,
                                                          long long first_q_id) {
  Rng rng(seed);
  std::vector<corpus::AnswerRecord> records;
  long long next_a_id = 1;
  for (std::size_t t = 0; t < n_threads; ++t) {
    long long q_id = first_q_id + static_cast<long long>(t);
    int n_answers = 2 + static_cast<int>(rng.below(4));
    int accepted_pos = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_answers)));
    long long accepted_a_id = next_a_id + accepted_pos;
    for (int a = 0; a < n_answers; ++a) {
      bool accepted = a == accepted_pos;
      corpus::AnswerRecord r = make_record(q_id, next_a_id + a, accepted, accepted_a_id);
      r.q_creation_year = year;
      r.q_answer_count = n_answers;
      r.q_body = "<p>" + sample_words(rng, question_words(), 6) + "</p>";
      r.a_body = "<p>" + sample_words(rng, filler_words(), 5 + static_cast<int>(rng.below(4))) +
                 "</p>";
      r.a_score = accepted ? 10 + static_cast<long long>(rng.below(6))
                           : static_cast<long long>(rng.below(6));
      r.a_comment_count = static_cast<long long>(rng.below(4));
      r.user_reputation = static_cast<long long>(rng.below(1000));
      r.user_up_votes = static_cast<long long>(rng.below(100));
      r.user_views = static_cast<long long>(rng.below(50));
      records.push_back(std::move(r));
    }
    next_a_id += n_answers;
  }
  return records;
}

std::vector<corpus::AnswerRecord> marker_records(const MarkerCorpusOptions& options) {
  if (options.min_answers < 2 || options.max_answers < options.min_answers) {
    throw std::invalid_argument("marker_records: bad answer count range");
  }
  Rng rng(options.seed);
  std::vector<corpus::AnswerRecord> records;
  long long next_a_id = 1;
  for (std::size_t t = 0; t < options.n_threads; ++t) {
    long long q_id = options.first_q_id + static_cast<long long>(t);
    int span = options.max_answers - options.min_answers + 1;
    int n_answers = options.min_answers + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
    int accepted_pos = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_answers)));
    long long accepted_a_id = next_a_id + accepted_pos;
    for (int a = 0; a < n_answers; ++a) {
      bool accepted = a == accepted_pos;
      corpus::AnswerRecord r = make_record(q_id, next_a_id + a, accepted, accepted_a_id);
      r.q_creation_year = options.year;
      r.q_answer_count = n_answers;
      r.q_body = "<p>" + sample_words(rng, question_words(), 4) + "</p>";
      std::string body = sample_words(rng, filler_words(), 3);
      if (accepted) {
        int markers = 2 + static_cast<int>(rng.below(3));
        for (int m = 0; m < markers; ++m) body += " answerkey";
      }
      r.a_body = "<p>" + body + "</p>";
      if (options.informative_scores) {
        r.a_score = accepted ? 10 + static_cast<long long>(rng.below(6))
                             : static_cast<long long>(rng.below(6));
      } else {
        r.a_score = static_cast<long long>(rng.below(5));
      }
      records.push_back(std::move(r));
    }
    next_a_id += n_answers;
  }
  return records;
}

std::vector<std::string> marker_vocabulary() {
  std::vector<std::string> vocab = filler_words();
  const auto& qs = question_words();
  vocab.insert(vocab.end(), qs.begin(), qs.end());
  vocab.push_back("answerkey");
  return vocab;
}

std::string embedding_file_text(const std::vector<std::string>& vocabulary, int dimension,
                                std::uint64_t seed) {
  Rng rng(seed);
  std::string text;
  for (const auto& word : vocabulary) {
    text += word;
    for (int d = 0; d < dimension; ++d) {
      text += ' ';
      text += fmt_full(rng.uniform(-0.5, 0.5));
    }
    text += '\n';
  }
  return text;
}

metrics::RankingQuery random_query(Rng& rng, int n, int score_levels) {
  std::vector<int> gold(static_cast<std::size_t>(n), 0);
  gold[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)))] = 1;
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (auto& s : scores) {
    s = static_cast<double>(rng.below(static_cast<std::uint64_t>(score_levels)));
  }
  return metrics::RankingQuery(std::move(gold), std::move(scores));
}

std::filesystem::path make_temp_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("cqarank-" + tag + "-" + std::to_string(++counter) + "-" +
              std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace cqarank::testfix
