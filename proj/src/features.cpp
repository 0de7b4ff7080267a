#include "cqarank/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cqarank/textproc.hpp"

namespace cqarank::features {

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> kNames = {
      "has_user_location", "has_user_about",   "has_user_website_url", "q_avg_word_len",
      "a_avg_n_word_sent", "q_n_sent",         "q_n_words",            "user_down_votes",
      "q_max_n_word_sent", "q_avg_n_word_sent", "a_avg_word_len",      "user_up_votes",
      "user_views",        "a_n_sent",         "has_user_profile_image_url",
      "user_reputation",   "a_has_urls",       "a_n_words",            "qa_n_common",
      "a_score",           "a_comment_count"};
  return kNames;
}

std::size_t feature_index(const std::string& name) {
  const auto& names = feature_names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("unknown feature: " + name);
  return static_cast<std::size_t>(it - names.begin());
}

namespace {

double presence(const std::optional<std::string>& field) {
  return field && !field->empty() ? 1.0 : 0.0;
}

}  // namespace

FeatureVector build_feature_vector(const corpus::AnswerRecord& record) {
  return build_feature_vector(record, record.q_body);
}

FeatureVector build_feature_vector(const corpus::AnswerRecord& record,
                                   const std::string& question_body) {
  std::string q_text = textproc::strip_html(question_body);
  std::string a_text = textproc::strip_html(record.a_body);
  textproc::TextStats q = textproc::text_stats(q_text);
  textproc::TextStats a = textproc::text_stats(a_text);

  FeatureVector v;
  auto set = [&](const char* name, double value) { v.values[feature_index(name)] = value; };
  set("has_user_location", presence(record.user_location));
  set("has_user_about", presence(record.user_about));
  set("has_user_website_url", presence(record.user_website_url));
  set("q_avg_word_len", q.avg_word_len);
  set("a_avg_n_word_sent", a.avg_n_word_sent);
  set("q_n_sent", static_cast<double>(q.n_sent));
  set("q_n_words", static_cast<double>(q.n_words));
  set("user_down_votes", static_cast<double>(record.user_down_votes));
  set("q_max_n_word_sent", static_cast<double>(q.max_n_word_sent));
  set("q_avg_n_word_sent", q.avg_n_word_sent);
  set("a_avg_word_len", a.avg_word_len);
  set("user_up_votes", static_cast<double>(record.user_up_votes));
  set("user_views", static_cast<double>(record.user_views));
  set("a_n_sent", static_cast<double>(a.n_sent));
  set("has_user_profile_image_url", presence(record.user_profile_image_url));
  set("user_reputation", static_cast<double>(record.user_reputation));
  set("a_has_urls", textproc::has_urls(record.a_body) ? 1.0 : 0.0);
  set("a_n_words", static_cast<double>(a.n_words));
  set("qa_n_common",
      static_cast<double>(textproc::common_word_count(textproc::tokenize(q_text),
                                                      textproc::tokenize(a_text))));
  set("a_score", static_cast<double>(record.a_score));
  set("a_comment_count", static_cast<double>(record.a_comment_count));
  return v;
}

Matrix build_feature_matrix(const std::vector<corpus::AnswerRecord>& records) {
  Matrix m(records.size(), kFeatureCount);
  for (std::size_t i = 0; i < records.size(); ++i) {
    FeatureVector v = build_feature_vector(records[i]);
    std::copy(v.values.begin(), v.values.end(), m.row(i).begin());
  }
  return m;
}

double correlation(std::span<const double> feature_column, std::span<const double> class_column) {
  if (feature_column.size() != class_column.size()) {
    throw std::invalid_argument("correlation: column lengths differ");
  }
  std::size_t n = feature_column.size();
  if (n < 2) throw std::invalid_argument("correlation: need at least 2 rows");

  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += feature_column[i];
    mean_y += class_column[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = feature_column[i] - mean_x;
    double dy = class_column[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::runtime_error("undefined correlation");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::string> select_features(const std::map<std::string, double>& correlations,
                                         double threshold) {
  std::vector<std::pair<std::string, double>> kept;
  for (const auto& [name, r] : correlations) {
    if (std::abs(r) > threshold) kept.emplace_back(name, r);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  std::vector<std::string> names;
  names.reserve(kept.size());
  for (auto& [name, r] : kept) names.push_back(std::move(name));
  return names;
}

StandardizeResult standardize(const Matrix& train, const Matrix& apply) {
  if (train.rows() == 0) throw std::invalid_argument("standardize: empty train matrix");
  std::size_t cols = train.cols();
  Standardization stats;
  stats.mean.assign(cols, 0.0);
  stats.stddev.assign(cols, 0.0);

  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) sum += train(r, c);
    double mean = sum / static_cast<double>(train.rows());
    double varsum = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) {
      double d = train(r, c) - mean;
      varsum += d * d;
    }
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(varsum / static_cast<double>(train.rows()));
  }
  return {apply_standardization(apply, stats), std::move(stats)};
}

Matrix apply_standardization(const Matrix& m, const Standardization& stats) {
  if (m.cols() != stats.mean.size()) {
    throw std::invalid_argument("apply_standardization: column count mismatch");
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out(r, c) = stats.stddev[c] == 0.0 ? 0.0 : (m(r, c) - stats.mean[c]) / stats.stddev[c];
    }
  }
  return out;
}

std::string to_csv(const Matrix& feature_matrix) {
  if (feature_matrix.cols() != kFeatureCount) {
    throw std::invalid_argument("to_csv: expected 21 feature columns");
  }
  std::string out;
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  out += '\n';
  for (std::size_t r = 0; r < feature_matrix.rows(); ++r) {
    for (std::size_t c = 0; c < feature_matrix.cols(); ++c) {
      if (c) out += ',';
      out += fmt_fixed(feature_matrix(r, c), 6);
    }
    out += '\n';
  }
  return out;
}

}  // namespace cqarank::features
