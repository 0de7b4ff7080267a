#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cqarank/common.hpp"
#include "cqarank/corpus.hpp"

namespace cqarank::features {

inline constexpr std::size_t kFeatureCount = 21;

// Canonical predictor order; every feature matrix and CSV uses it.
const std::array<std::string, kFeatureCount>& feature_names();

// Index of a canonical feature name; throws std::invalid_argument otherwise.
std::size_t feature_index(const std::string& name);

// The numeric predictors of one answer, in feature_names() order.
// Booleans are encoded 0/1.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};
};

// Presence flags are 1 iff the optional profile field is present and
// non-empty; text statistics come from the stripped bodies; metadata counts
// copy through. The question body defaults to the record's own.
FeatureVector build_feature_vector(const corpus::AnswerRecord& record);
FeatureVector build_feature_vector(const corpus::AnswerRecord& record,
                                   const std::string& question_body);

Matrix build_feature_matrix(const std::vector<corpus::AnswerRecord>& records);

// Pearson r between a feature column and the 0/1 class column. Throws
// std::runtime_error("undefined correlation") when either column is constant.
double correlation(std::span<const double> feature_column, std::span<const double> class_column);

// Names with |r| strictly above the threshold, sorted by r ascending.
std::vector<std::string> select_features(const std::map<std::string, double>& correlations,
                                         double threshold);

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // population stddev
};

struct StandardizeResult {
  Matrix standardized;  // the apply matrix, shifted/scaled by train statistics
  Standardization stats;
};

// Columns with zero train-set spread map to all-zero.
StandardizeResult standardize(const Matrix& train, const Matrix& apply);
Matrix apply_standardization(const Matrix& m, const Standardization& stats);

// CSV with the canonical 21-name header.
std::string to_csv(const Matrix& feature_matrix);

}  // namespace cqarank::features
