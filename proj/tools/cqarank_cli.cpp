// Command-line harness around the answer-ranking library: data validation,
// export-query emission, feature engineering, training, evaluation, and
// ablation sweeps.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "cqarank/corpus.hpp"
#include "cqarank/features.hpp"
#include "cqarank/harness.hpp"
#include "cqarank/metrics.hpp"
#include "cqarank/textproc.hpp"
#include "cqarank/vectorize.hpp"

namespace {

using namespace cqarank;

int cmd_ingest(const std::string& input) {
  auto records = corpus::parse_records_file(input);
  auto [accepted, not_accepted] = corpus::class_distribution(records);
  auto threading = corpus::group_threads(records);

  std::size_t max_answers = 0, total_answers = 0;
  for (const auto& t : threading.threads) {
    max_answers = std::max(max_answers, t.answers.size());
    total_answers += t.answers.size();
  }
  std::cout << "records:            " << records.size() << "\n"
            << "accepted:           " << accepted << "\n"
            << "not accepted:       " << not_accepted << "\n"
            << "threads:            " << threading.threads.size() << "\n"
            << "discarded records:  " << threading.discarded_records << "\n";
  if (!threading.threads.empty()) {
    std::cout << "answers per thread: mean "
              << fmt_fixed(static_cast<double>(total_answers) /
                               static_cast<double>(threading.threads.size()), 2)
              << ", max " << max_answers << "\n";
  }
  return 0;
}

int cmd_emit_sql(bool accepted, int year, long long limit, const std::string& out_path) {
  std::string sql = corpus::emit_sql(accepted, year, limit);
  if (out_path.empty()) {
    std::cout << sql;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << sql;
  }
  return 0;
}

void print_correlations(const std::vector<corpus::AnswerRecord>& records) {
  Matrix m = features::build_feature_matrix(records);
  std::vector<double> cls;
  cls.reserve(records.size());
  for (const auto& r : records) cls.push_back(r.a_accepted ? 1.0 : 0.0);

  std::cout << "feature,a_accepted_correlation\n";
  for (std::size_t c = 0; c < features::kFeatureCount; ++c) {
    std::vector<double> column;
    column.reserve(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) column.push_back(m(r, c));
    std::cout << features::feature_names()[c] << ",";
    try {
      std::cout << fmt_fixed(features::correlation(column, cls), 6) << "\n";
    } catch (const std::exception&) {
      std::cout << "n/a\n";
    }
  }
}

int cmd_features(const std::string& input, const std::string& out_path) {
  auto records = corpus::parse_records_file(input);
  std::string csv = features::to_csv(features::build_feature_matrix(records));
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << csv;
    std::cout << "wrote " << out_path << "\n";
  }
  print_correlations(records);
  return 0;
}

int cmd_eda(const std::string& input, double threshold) {
  auto records = corpus::parse_records_file(input);
  Matrix m = features::build_feature_matrix(records);
  std::vector<double> cls;
  cls.reserve(records.size());
  for (const auto& r : records) cls.push_back(r.a_accepted ? 1.0 : 0.0);

  std::map<std::string, double> correlations;
  for (std::size_t c = 0; c < features::kFeatureCount; ++c) {
    std::vector<double> column;
    column.reserve(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) column.push_back(m(r, c));
    try {
      correlations[features::feature_names()[c]] = features::correlation(column, cls);
    } catch (const std::exception&) {
      // constant column: no defined correlation, skip from selection
    }
  }

  std::cout << "feature,a_accepted_correlation\n";
  for (const auto& [name, r] : correlations) {
    std::cout << name << "," << fmt_fixed(r, 6) << "\n";
  }
  std::cout << "\nselected (|r| > " << fmt_fixed(threshold, 2) << "), ascending:\n";
  for (const auto& name : features::select_features(correlations, threshold)) {
    std::cout << name << "," << fmt_fixed(correlations.at(name), 6) << "\n";
  }
  return 0;
}

harness::ExperimentConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return {};
  return harness::parse_config_file(config_path);
}

int cmd_train(harness::ExperimentConfig config) {
  auto result = harness::run_experiment(config);
  std::string name = config.run_name.empty()
                         ? harness::to_string(config.model) + "-" + harness::to_string(config.features)
                         : config.run_name;
  std::cout << harness::emit_report(name, result.report, harness::ReportFormat::markdown)
            << "queries: " << result.report.n_queries << "\n"
            << "artifacts: " << result.run_dir.string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& run_path) {
  auto data = harness::read_run_csv_file(run_path);
  auto report = metrics::evaluate_queries(data.queries);
  std::cout << harness::emit_report("run", report, harness::ReportFormat::csv);
  return 0;
}

int cmd_sweep(harness::ExperimentConfig config) {
  auto report = harness::run_sweep(config);
  std::cout << harness::emit_report(report, harness::ReportFormat::markdown);
  for (const auto& row : report.rows) {
    std::cout << "# " << report.axis << "=" << row.axis_value << " took "
              << fmt_fixed(row.wall_seconds, 2) << "s\n";
  }
  return 0;
}

int cmd_oov_report(const std::string& input, const std::string& embeddings_path, int dimension) {
  auto records = corpus::parse_records_file(input);
  auto table = vectorize::load_embeddings(embeddings_path, dimension);

  std::vector<std::string> texts;
  texts.reserve(records.size() * 2);
  for (const auto& r : records) {
    texts.push_back(textproc::strip_html(r.q_body));
    texts.push_back(textproc::strip_html(r.a_body));
  }
  auto report = vectorize::oov_report(texts, table);
  std::cout << "Converted " << report.converted << " words (" << report.misses << " misses)\n";
  if (!report.miss_examples.empty()) {
    std::cout << "miss sample:";
    for (const auto& w : report.miss_examples) std::cout << " " << w;
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Answer ranking for community Q&A data"};
  app.require_subcommand(1);

  std::string input, out_path, config_path, run_path, embeddings_path;
  std::string model_name, features_name, axis;
  bool accepted = false;
  int year = 2016, dimension = 100;
  long long limit = 100000;
  double threshold = 0.05;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* ingest = app.add_subcommand("ingest", "Validate a JSON Lines dump and report thread stats");
  ingest->add_option("input", input, "JSON Lines file")->required();

  auto* emit_sql = app.add_subcommand("emit-sql", "Print the BigQuery export query");
  emit_sql->add_flag("--accepted", accepted, "Select accepted answers (default: not accepted)");
  emit_sql->add_option("--year", year, "Question creation year")->required();
  emit_sql->add_option("--limit", limit, "Row limit")->required();
  emit_sql->add_option("--out", out_path, "Write to a file instead of stdout");

  auto* features_cmd = app.add_subcommand("features", "Emit the feature CSV and correlations");
  features_cmd->add_option("input", input, "JSON Lines file")->required();
  features_cmd->add_option("--out", out_path, "Feature CSV path (default: stdout)");

  auto* eda = app.add_subcommand("eda", "Feature/class correlations and threshold selection");
  eda->add_option("input", input, "JSON Lines file")->required();
  eda->add_option("--threshold", threshold, "Absolute correlation threshold")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train a ranker and evaluate the test threads");
  train->add_option("--config", config_path, "Flat key = value config file")->required();
  train->add_option("--model", model_name, "rf | adaboost | gbt | neural");
  train->add_option("--features", features_name, "numerical | text | both");
  train->add_option("--seed", seed, "Override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* evaluate = app.add_subcommand("evaluate", "Score a persisted run file");
  evaluate->add_option("--run", run_path, "CSV with q_id,a_id,gold,score rows")->required();

  auto* sweep = app.add_subcommand("sweep", "Run one ablation axis");
  sweep->add_option("--config", config_path, "Flat key = value config file")->required();
  sweep->add_option("--axis", axis,
                    "learning_rate | max_sentences | max_seq_len | embedding_source | "
                    "lstm_depth | head_depth");

  auto* oov = app.add_subcommand("oov-report", "Embedding coverage of a corpus");
  oov->add_option("input", input, "JSON Lines file")->required();
  oov->add_option("--embeddings", embeddings_path, "Embedding text file")->required();
  oov->add_option("--dim", dimension, "Embedding dimension")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(ingest)) return cmd_ingest(input);
    if (app.got_subcommand(emit_sql)) return cmd_emit_sql(accepted, year, limit, out_path);
    if (app.got_subcommand(features_cmd)) return cmd_features(input, out_path);
    if (app.got_subcommand(eda)) return cmd_eda(input, threshold);
    if (app.got_subcommand(train)) {
      auto config = load_config(config_path);
      if (!model_name.empty()) config.model = harness::model_kind_from(model_name);
      if (!features_name.empty()) config.features = harness::feature_mode_from(features_name);
      if (seed_set) config.seed = seed;
      return cmd_train(std::move(config));
    }
    if (app.got_subcommand(evaluate)) return cmd_evaluate(run_path);
    if (app.got_subcommand(sweep)) {
      auto config = load_config(config_path);
      if (!axis.empty()) config.sweep_axis = axis;
      return cmd_sweep(std::move(config));
    }
    if (app.got_subcommand(oov)) return cmd_oov_report(input, embeddings_path, dimension);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
