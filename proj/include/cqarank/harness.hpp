#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "cqarank/corpus.hpp"
#include "cqarank/features.hpp"
#include "cqarank/forest.hpp"
#include "cqarank/metrics.hpp"
#include "cqarank/neural.hpp"
#include "cqarank/vectorize.hpp"

namespace cqarank::harness {

enum class ModelKind { random_forest, adaboost, gradient_boosted, neural };
enum class FeatureMode { numerical, text, both };

std::string to_string(ModelKind kind);
std::string to_string(FeatureMode mode);
ModelKind model_kind_from(const std::string& name);      // rf | adaboost | gbt | neural
FeatureMode feature_mode_from(const std::string& name);  // numerical | text | both

struct ExperimentConfig {
  std::string train_path;
  std::string test_path;
  std::string embedding_path_wiki;
  std::string embedding_path_twitter;
  std::string embedding_source = "wiki";  // wiki | twitter
  std::string output_dir = "runs";
  std::string run_name;  // empty: derived from model and feature mode
  ModelKind model = ModelKind::gradient_boosted;
  FeatureMode features = FeatureMode::both;
  std::string sweep_axis = "none";
  std::vector<std::string> axis_values;  // empty: the axis defaults
  neural::ModelConfig model_config;
  int n_trees = 100;
  int forest_max_depth = -1;
  int min_samples_leaf = 1;
  int adaboost_rounds = 100;
  int gbt_rounds = 100;
  int gbt_max_depth = 3;
  double shrinkage = 0.1;
  int n_per_class = 0;  // 0: keep the full training pool
  int max_vocab = 2000;
  int max_sentences = -1;
  int histogram_bins = 10;
  std::uint64_t seed = 42;
};

// Flat "key = value" text; '#' starts a comment line.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical flat rendering of every config field, in fixed key order.
std::string config_echo(const ExperimentConfig& config);

// Everything fitted on training data only.
struct Encoders {
  ModelKind kind = ModelKind::gradient_boosted;
  FeatureMode mode = FeatureMode::both;
  vectorize::TfidfModel tfidf;
  features::Standardization standardization;
  std::shared_ptr<const vectorize::EmbeddingTable> embeddings;
  int max_sentences = -1;
  int max_seq_len = 100;
};

using TrainedModel = std::variant<forest::ForestModel, neural::SiameseRanker>;

struct RankedThread {
  std::vector<long long> ranked_ids;  // score descending, ties by a_id ascending
  metrics::RankingQuery query;
};

// Scores every answer of one thread with the trained model.
RankedThread rank_answers(const TrainedModel& model, const corpus::QuestionThread& thread,
                          const Encoders& encoders);

struct ExperimentResult {
  metrics::MetricReport report;
  std::vector<metrics::RankingQuery> queries;  // one per test thread, q_id ascending
  std::vector<long long> q_ids;
  std::filesystem::path run_dir;
};

// Trains per config, evaluates every test thread, and writes report.csv,
// queries.csv, mrr_vs_answer_count.csv, mrr_histogram.csv, encoders.json and
// config.txt under output_dir/<run name>.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct SweepRow {
  std::string axis_value;
  metrics::MetricReport report;
  std::string config_echo;
  double wall_seconds = 0.0;
};

struct SweepReport {
  std::string axis;
  std::vector<SweepRow> rows;
  std::string base_config_echo;
};

// One run_experiment per axis value with everything else held fixed.
// Axis defaults: learning_rate {1e-1..1e-6}, max_sentences {-1,1,2,3,4},
// max_seq_len {100,150,200,250,300}, embedding_source {wiki,twitter},
// lstm_depth {1,2,3,4}, head_depth {0,1,2,3}.
SweepReport run_sweep(const ExperimentConfig& config);

std::vector<std::string> default_axis_values(const std::string& axis);

enum class ReportFormat { csv, markdown };

// Header "name,NDCG@1,NDCG@3,NDCG@5,MRR", values with 6 decimal places.
std::string emit_report(const std::string& name, const metrics::MetricReport& report,
                        ReportFormat format);
std::string emit_report(const SweepReport& report, ReportFormat format);

struct RunData {
  std::vector<long long> q_ids;
  std::vector<metrics::RankingQuery> queries;
};

// Reads the scoring-run exchange CSV (q_id, a_id, gold, score).
RunData read_run_csv(std::istream& in);
RunData read_run_csv_file(const std::string& path);

}  // namespace cqarank::harness
