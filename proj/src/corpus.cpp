#include "cqarank/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cqarank/common.hpp"

namespace cqarank::corpus {

namespace {

using nlohmann::json;

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + what);
}

const json& require(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) fail(line_no, std::string("missing required field ") + key);
  return *it;
}

long long as_int(const json& v, const char* key, std::size_t line_no) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    auto i = static_cast<long long>(d);
    if (static_cast<double>(i) == d) return i;
  }
  if (v.is_string()) {
    // BigQuery exports stringify numbers now and then; tolerate digits.
    const std::string& s = v.get_ref<const std::string&>();
    try {
      std::size_t pos = 0;
      long long i = std::stoll(s, &pos);
      if (pos == s.size() && !s.empty()) return i;
    } catch (const std::exception&) {
    }
  }
  fail(line_no, std::string("field ") + key + " is not an integer");
}

long long require_int(const json& obj, const char* key, std::size_t line_no) {
  return as_int(require(obj, key, line_no), key, line_no);
}

std::string require_str(const json& obj, const char* key, std::size_t line_no) {
  const json& v = require(obj, key, line_no);
  if (!v.is_string()) fail(line_no, std::string("field ") + key + " is not a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_str(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

bool parse_accepted(const json& v, std::size_t line_no) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) {
    long long i = v.get<long long>();
    if (i == 0 || i == 1) return i == 1;
  }
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    if (s == "0") return false;
    if (s == "1") return true;
  }
  fail(line_no, "a_accepted must be \"0\"/\"1\", 0/1, or a boolean");
}

void check_non_negative(long long v, const char* key, std::size_t line_no) {
  if (v < 0) fail(line_no, std::string("field ") + key + " must be non-negative");
}

void check_positive(long long v, const char* key, std::size_t line_no) {
  if (v <= 0) fail(line_no, std::string("field ") + key + " must be positive");
}

AnswerRecord parse_line(const std::string& line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) fail(line_no, "line is not a JSON object");

  AnswerRecord r;
  r.q_id = require_int(obj, "q_id", line_no);
  r.q_title = require_str(obj, "q_title", line_no);
  r.q_body = require_str(obj, "q_body", line_no);
  r.q_answer_count = require_int(obj, "q_answer_count", line_no);
  r.q_accepted_a = require_int(obj, "q_accepted_a", line_no);
  r.a_id = require_int(obj, "a_id", line_no);
  r.a_body = require_str(obj, "a_body", line_no);
  r.a_score = require_int(obj, "a_score", line_no);
  r.a_comment_count = require_int(obj, "a_comment_count", line_no);
  r.user_id = require_int(obj, "user_id", line_no);
  r.user_about = optional_str(obj, "user_about");
  r.user_location = optional_str(obj, "user_location");
  r.user_reputation = require_int(obj, "user_reputation", line_no);
  r.user_up_votes = require_int(obj, "user_up_votes", line_no);
  r.user_down_votes = require_int(obj, "user_down_votes", line_no);
  r.user_views = require_int(obj, "user_views", line_no);
  r.user_profile_image_url = optional_str(obj, "user_profile_image_url");
  r.user_website_url = optional_str(obj, "user_website_url");
  r.a_accepted = parse_accepted(require(obj, "a_accepted", line_no), line_no);
  r.q_creation_year = static_cast<int>(require_int(obj, "q_creation_year", line_no));
  if (auto it = obj.find("user_age"); it != obj.end() && !it->is_null()) {
    r.user_age = as_int(*it, "user_age", line_no);
  }

  check_positive(r.q_id, "q_id", line_no);
  check_positive(r.a_id, "a_id", line_no);
  check_positive(r.user_id, "user_id", line_no);
  check_non_negative(r.q_answer_count, "q_answer_count", line_no);
  check_non_negative(r.a_comment_count, "a_comment_count", line_no);
  check_non_negative(r.user_reputation, "user_reputation", line_no);
  check_non_negative(r.user_up_votes, "user_up_votes", line_no);
  check_non_negative(r.user_down_votes, "user_down_votes", line_no);
  check_non_negative(r.user_views, "user_views", line_no);
  if (r.a_accepted != (r.q_accepted_a == r.a_id)) {
    fail(line_no, "inconsistent acceptance: a_accepted disagrees with q_accepted_a");
  }
  return r;
}

int current_year() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return tm.tm_year + 1900;
}

}  // namespace

std::vector<AnswerRecord> parse_records(std::istream& stream) {
  std::vector<AnswerRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_line(line, line_no));
  }
  return records;
}

std::vector<AnswerRecord> parse_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_records(in);
}

std::string serialize_records(const std::vector<AnswerRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json obj;
    obj["q_id"] = r.q_id;
    obj["q_title"] = r.q_title;
    obj["q_body"] = r.q_body;
    obj["q_answer_count"] = r.q_answer_count;
    obj["q_accepted_a"] = r.q_accepted_a;
    obj["a_id"] = r.a_id;
    obj["a_body"] = r.a_body;
    obj["a_score"] = r.a_score;
    obj["a_comment_count"] = r.a_comment_count;
    obj["user_id"] = r.user_id;
    if (r.user_about) obj["user_about"] = *r.user_about;
    if (r.user_location) obj["user_location"] = *r.user_location;
    obj["user_reputation"] = r.user_reputation;
    obj["user_up_votes"] = r.user_up_votes;
    obj["user_down_votes"] = r.user_down_votes;
    obj["user_views"] = r.user_views;
    if (r.user_profile_image_url) obj["user_profile_image_url"] = *r.user_profile_image_url;
    if (r.user_website_url) obj["user_website_url"] = *r.user_website_url;
    // The export query's CASE emits quoted literals; keep that shape.
    obj["a_accepted"] = r.a_accepted ? "1" : "0";
    obj["q_creation_year"] = r.q_creation_year;
    if (r.user_age) obj["user_age"] = *r.user_age;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

ThreadingResult group_threads(const std::vector<AnswerRecord>& records) {
  std::map<long long, std::vector<AnswerRecord>> by_question;
  for (const auto& r : records) by_question[r.q_id].push_back(r);

  ThreadingResult result;
  for (auto& [q_id, answers] : by_question) {
    std::sort(answers.begin(), answers.end(),
              [](const AnswerRecord& a, const AnswerRecord& b) { return a.a_id < b.a_id; });
    std::size_t accepted = 0;
    for (const auto& a : answers) accepted += a.a_accepted ? 1 : 0;
    if (answers.size() < 2 || accepted != 1) {
      result.discarded_records += answers.size();
      continue;
    }
    QuestionThread thread;
    thread.q_id = q_id;
    thread.q_title = answers.front().q_title;
    thread.q_body = answers.front().q_body;
    thread.answers = std::move(answers);
    result.threads.push_back(std::move(thread));
  }
  return result;
}

std::vector<AnswerRecord> balance_training(const std::vector<AnswerRecord>& records,
                                           std::size_t n_per_class, std::uint64_t seed) {
  std::vector<std::size_t> accepted_idx, other_idx;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (records[i].a_accepted ? accepted_idx : other_idx).push_back(i);
  }
  if (accepted_idx.size() < n_per_class) {
    throw std::runtime_error("insufficient accepted: " + std::to_string(accepted_idx.size()) +
                             " < " + std::to_string(n_per_class));
  }
  if (other_idx.size() < n_per_class) {
    throw std::runtime_error("insufficient not-accepted: " + std::to_string(other_idx.size()) +
                             " < " + std::to_string(n_per_class));
  }

  Rng rng(seed);
  rng.shuffle(accepted_idx);
  rng.shuffle(other_idx);
  std::vector<std::size_t> chosen(accepted_idx.begin(), accepted_idx.begin() + n_per_class);
  chosen.insert(chosen.end(), other_idx.begin(), other_idx.begin() + n_per_class);
  std::sort(chosen.begin(), chosen.end());  // keep input order

  std::vector<AnswerRecord> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(records[i]);
  return out;
}

DatasetSplit split_by_year(const std::vector<AnswerRecord>& records, int train_year,
                           int test_year) {
  if (train_year == test_year) {
    throw std::invalid_argument("overlapping split: train and test years are both " +
                                std::to_string(train_year));
  }
  DatasetSplit split;
  for (const auto& r : records) {
    if (r.q_creation_year == train_year) split.train.push_back(r);
    else if (r.q_creation_year == test_year) split.test.push_back(r);
  }
  return split;
}

std::string emit_sql(bool accepted, int year, long long limit) {
  if (year < 2008 || year > current_year()) {
    throw std::invalid_argument("year out of range: " + std::to_string(year));
  }
  if (limit <= 0) throw std::invalid_argument("limit must be positive");

  std::string check = accepted ? "=" : "!=";
  std::ostringstream sql;
  sql << "SELECT\n"
         "    question.id as q_id,\n"
         "    question.Title AS q_title,\n"
         "    question.Body AS q_body,\n"
         "    question.answer_count as q_answer_count,\n"
         "    question.accepted_answer_id as q_accepted_a,\n"
         "    answer.Id AS a_id,\n"
         "    answer.Body AS a_body,\n"
         "    answer.Score as a_score,\n"
         "    answer.comment_count AS a_comment_count,\n"
         "    user.id as user_id,\n"
         "    user.about_me as user_about,\n"
         "    user.age as user_age,\n"
         "    user.creation_date as user_creation_date,\n"
         "    user.last_access_date as user_last_access_date,\n"
         "    user.location as user_location,\n"
         "    user.reputation as user_reputation,\n"
         "    user.up_votes as user_up_votes,\n"
         "    user.down_votes as user_down_votes,\n"
         "    user.views as user_views,\n"
         "    user.profile_image_url as user_profile_image_url,\n"
         "    user.website_url as user_website_url,\n"
         "    CASE WHEN question.accepted_answer_id = answer.Id\n"
         "      THEN '1'\n"
         "      ELSE '0'\n"
         "    END\n"
         "    AS a_accepted\n"
         "  FROM `bigquery-public-data.stackoverflow.posts_answers` AS answer\n"
         "  JOIN `bigquery-public-data.stackoverflow.posts_questions` question"
         " ON question.Id = answer.parent_id\n"
         "  JOIN `bigquery-public-data.stackoverflow.users` user on user.id = answer.owner_user_id\n"
         "  WHERE answer.post_type_id = 2 AND question.answer_count > 1\n"
         "    AND question.accepted_answer_id IS NOT NULL\n"
         "    AND question.accepted_answer_id IN"
         " (SELECT Id FROM `bigquery-public-data.stackoverflow.posts_answers`)\n"
         "    AND question.accepted_answer_id " << check << " answer.Id\n"
         "    AND EXTRACT(YEAR FROM question.creation_date) = " << year << "\n"
         "  ORDER BY question.ID ASC, answer.Id ASC\n"
         "  LIMIT " << limit << "\n";
  return sql.str();
}

std::pair<std::size_t, std::size_t> class_distribution(const std::vector<AnswerRecord>& records) {
  std::size_t accepted = 0;
  for (const auto& r : records) accepted += r.a_accepted ? 1 : 0;
  return {accepted, records.size() - accepted};
}

}  // namespace cqarank::corpus
