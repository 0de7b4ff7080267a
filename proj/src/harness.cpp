#include "cqarank/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cqarank/textproc.hpp"

namespace cqarank::harness {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::random_forest: return "rf";
    case ModelKind::adaboost: return "adaboost";
    case ModelKind::gradient_boosted: return "gbt";
    case ModelKind::neural: return "neural";
  }
  return "gbt";
}

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::numerical: return "numerical";
    case FeatureMode::text: return "text";
    case FeatureMode::both: return "both";
  }
  return "both";
}

ModelKind model_kind_from(const std::string& name) {
  if (name == "rf") return ModelKind::random_forest;
  if (name == "adaboost") return ModelKind::adaboost;
  if (name == "gbt") return ModelKind::gradient_boosted;
  if (name == "neural") return ModelKind::neural;
  throw std::invalid_argument("unknown model kind: " + name + " (expected rf|adaboost|gbt|neural)");
}

FeatureMode feature_mode_from(const std::string& name) {
  if (name == "numerical") return FeatureMode::numerical;
  if (name == "text") return FeatureMode::text;
  if (name == "both") return FeatureMode::both;
  throw std::invalid_argument("unknown feature mode: " + name + " (expected numerical|text|both)");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(trimmed.substr(0, eq));
    std::string value = trim(trimmed.substr(eq + 1));

    try {
      if (key == "train_path") config.train_path = value;
      else if (key == "test_path") config.test_path = value;
      else if (key == "embedding_path_wiki") config.embedding_path_wiki = value;
      else if (key == "embedding_path_twitter") config.embedding_path_twitter = value;
      else if (key == "embedding_source") config.embedding_source = value;
      else if (key == "output_dir") config.output_dir = value;
      else if (key == "run_name") config.run_name = value;
      else if (key == "model") config.model = model_kind_from(value);
      else if (key == "features") config.features = feature_mode_from(value);
      else if (key == "sweep_axis") config.sweep_axis = value;
      else if (key == "axis_values") config.axis_values = split_csv_list(value);
      else if (key == "n_trees") config.n_trees = std::stoi(value);
      else if (key == "forest_max_depth") config.forest_max_depth = std::stoi(value);
      else if (key == "min_samples_leaf") config.min_samples_leaf = std::stoi(value);
      else if (key == "adaboost_rounds") config.adaboost_rounds = std::stoi(value);
      else if (key == "gbt_rounds") config.gbt_rounds = std::stoi(value);
      else if (key == "gbt_max_depth") config.gbt_max_depth = std::stoi(value);
      else if (key == "shrinkage") config.shrinkage = std::stod(value);
      else if (key == "n_per_class") config.n_per_class = std::stoi(value);
      else if (key == "max_vocab") config.max_vocab = std::stoi(value);
      else if (key == "max_sentences") config.max_sentences = std::stoi(value);
      else if (key == "histogram_bins") config.histogram_bins = std::stoi(value);
      else if (key == "seed") config.seed = std::stoull(value);
      else if (key == "embedding_dimension") config.model_config.embedding_dimension = std::stoi(value);
      else if (key == "max_seq_len") config.model_config.max_seq_len = std::stoi(value);
      else if (key == "lstm_hidden") config.model_config.lstm_hidden = std::stoi(value);
      else if (key == "lstm_depth") config.model_config.lstm_depth = std::stoi(value);
      else if (key == "head_hidden_sizes") {
        config.model_config.head_hidden_sizes.clear();
        for (const auto& item : split_csv_list(value)) {
          config.model_config.head_hidden_sizes.push_back(std::stoi(item));
        }
      } else if (key == "dropout_rate") config.model_config.dropout_rate = std::stod(value);
      else if (key == "use_numerical_features") { /* derived from the feature mode */ }
      else if (key == "dropout_on_single_layer") config.model_config.dropout_on_single_layer = value == "true";
      else if (key == "learning_rate") config.model_config.learning_rate = std::stod(value);
      else if (key == "epochs") config.model_config.epochs = std::stoi(value);
      else if (key == "batch_size") config.model_config.batch_size = std::stoi(value);
      else throw std::runtime_error("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": bad value for " + key);
    }
  }
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string config_echo(const ExperimentConfig& c) {
  std::ostringstream out;
  auto kv = [&](const char* key, const std::string& value) { out << key << " = " << value << "\n"; };
  kv("train_path", c.train_path);
  kv("test_path", c.test_path);
  kv("embedding_path_wiki", c.embedding_path_wiki);
  kv("embedding_path_twitter", c.embedding_path_twitter);
  kv("embedding_source", c.embedding_source);
  kv("output_dir", c.output_dir);
  kv("run_name", c.run_name);
  kv("model", to_string(c.model));
  kv("features", to_string(c.features));
  kv("sweep_axis", c.sweep_axis);
  {
    std::string joined;
    for (std::size_t i = 0; i < c.axis_values.size(); ++i) {
      if (i) joined += ',';
      joined += c.axis_values[i];
    }
    kv("axis_values", joined);
  }
  kv("n_trees", std::to_string(c.n_trees));
  kv("forest_max_depth", std::to_string(c.forest_max_depth));
  kv("min_samples_leaf", std::to_string(c.min_samples_leaf));
  kv("adaboost_rounds", std::to_string(c.adaboost_rounds));
  kv("gbt_rounds", std::to_string(c.gbt_rounds));
  kv("gbt_max_depth", std::to_string(c.gbt_max_depth));
  kv("shrinkage", fmt_full(c.shrinkage));
  kv("n_per_class", std::to_string(c.n_per_class));
  kv("max_vocab", std::to_string(c.max_vocab));
  kv("max_sentences", std::to_string(c.max_sentences));
  kv("histogram_bins", std::to_string(c.histogram_bins));
  kv("seed", std::to_string(c.seed));
  kv("embedding_dimension", std::to_string(c.model_config.embedding_dimension));
  kv("max_seq_len", std::to_string(c.model_config.max_seq_len));
  kv("lstm_hidden", std::to_string(c.model_config.lstm_hidden));
  kv("lstm_depth", std::to_string(c.model_config.lstm_depth));
  {
    std::string joined;
    for (std::size_t i = 0; i < c.model_config.head_hidden_sizes.size(); ++i) {
      if (i) joined += ',';
      joined += std::to_string(c.model_config.head_hidden_sizes[i]);
    }
    kv("head_hidden_sizes", joined);
  }
  kv("dropout_rate", fmt_full(c.model_config.dropout_rate));
  kv("dropout_on_single_layer", c.model_config.dropout_on_single_layer ? "true" : "false");
  kv("use_numerical_features", c.features != FeatureMode::text ? "true" : "false");
  kv("learning_rate", fmt_full(c.model_config.learning_rate));
  kv("epochs", std::to_string(c.model_config.epochs));
  kv("batch_size", std::to_string(c.model_config.batch_size));
  return out.str();
}

namespace {

std::string plain_question_text(const ExperimentConfig& config, const std::string& q_body) {
  std::string text = textproc::strip_html(q_body);
  return vectorize::summarize_sentences(text, config.max_sentences);
}

std::string plain_answer_text(const ExperimentConfig& config, const std::string& a_body) {
  std::string text = textproc::strip_html(a_body);
  return vectorize::summarize_sentences(text, config.max_sentences);
}

const std::string& embedding_path_for(const ExperimentConfig& config) {
  if (config.embedding_source == "wiki") return config.embedding_path_wiki;
  if (config.embedding_source == "twitter") return config.embedding_path_twitter;
  throw std::invalid_argument("unknown embedding_source: " + config.embedding_source);
}

// Training matrix per feature mode for the forest models.
Matrix forest_matrix(const ExperimentConfig& config, const Encoders& enc,
                     const std::vector<corpus::AnswerRecord>& records) {
  Matrix numerical;
  if (config.features != FeatureMode::text) numerical = features::build_feature_matrix(records);

  Matrix text;
  if (config.features != FeatureMode::numerical) {
    std::vector<vectorize::SparseVector> rows;
    rows.reserve(records.size());
    for (const auto& r : records) {
      rows.push_back(vectorize::tfidf_transform(
          enc.tfidf, textproc::tokenize(plain_answer_text(config, r.a_body))));
    }
    text = vectorize::densify(rows, enc.tfidf.vocabulary.size());
  }

  if (config.features == FeatureMode::numerical) return numerical;
  if (config.features == FeatureMode::text) return text;
  Matrix both(records.size(), numerical.cols() + text.cols());
  for (std::size_t r = 0; r < records.size(); ++r) {
    auto dst = both.row(r);
    auto num = numerical.row(r);
    auto txt = text.row(r);
    std::copy(num.begin(), num.end(), dst.begin());
    std::copy(txt.begin(), txt.end(), dst.begin() + static_cast<std::ptrdiff_t>(num.size()));
  }
  return both;
}

neural::TrainingSet neural_training_set(const ExperimentConfig& config, const Encoders& enc,
                                        const std::vector<corpus::AnswerRecord>& records) {
  neural::TrainingSet set;
  for (const auto& r : records) {
    set.question_seqs.push_back(vectorize::encode_sequence(
        plain_question_text(config, r.q_body), *enc.embeddings, enc.max_seq_len));
    set.answer_seqs.push_back(vectorize::encode_sequence(
        plain_answer_text(config, r.a_body), *enc.embeddings, enc.max_seq_len));
    set.labels.push_back(r.a_accepted ? 1 : 0);
  }
  if (config.features == FeatureMode::both) {
    set.numerical = features::apply_standardization(features::build_feature_matrix(records),
                                                    enc.standardization);
  }
  return set;
}

Encoders fit_encoders(const ExperimentConfig& config,
                      const std::vector<corpus::AnswerRecord>& train_records,
                      std::shared_ptr<const vectorize::EmbeddingTable> embeddings) {
  Encoders enc;
  enc.kind = config.model;
  enc.mode = config.features;
  enc.max_sentences = config.max_sentences;
  enc.max_seq_len = config.model_config.max_seq_len;
  enc.embeddings = std::move(embeddings);

  if (config.model != ModelKind::neural && config.features != FeatureMode::numerical) {
    std::vector<std::vector<std::string>> documents;
    documents.reserve(train_records.size());
    for (const auto& r : train_records) {
      documents.push_back(textproc::tokenize(plain_answer_text(config, r.a_body)));
    }
    enc.tfidf = vectorize::fit_tfidf(documents, static_cast<std::size_t>(config.max_vocab));
  }
  if (config.model == ModelKind::neural && config.features == FeatureMode::both) {
    Matrix train_features = features::build_feature_matrix(train_records);
    enc.standardization = features::standardize(train_features, train_features).stats;
  }
  return enc;
}

TrainedModel train_model(const ExperimentConfig& config, const Encoders& enc,
                         const std::vector<corpus::AnswerRecord>& train_records) {
  std::vector<int> labels;
  labels.reserve(train_records.size());
  for (const auto& r : train_records) labels.push_back(r.a_accepted ? 1 : 0);

  switch (config.model) {
    case ModelKind::random_forest: {
      forest::RandomForestParams params;
      params.n_trees = config.n_trees;
      params.max_depth = config.forest_max_depth;
      params.min_samples_leaf = config.min_samples_leaf;
      Matrix X = forest_matrix(config, enc, train_records);
      return forest::train_random_forest(X, labels, params, fan_seed(config.seed, "rf"));
    }
    case ModelKind::adaboost: {
      Matrix X = forest_matrix(config, enc, train_records);
      return forest::train_adaboost(X, labels, config.adaboost_rounds,
                                    fan_seed(config.seed, "adaboost"));
    }
    case ModelKind::gradient_boosted: {
      forest::GbtParams params;
      params.n_rounds = config.gbt_rounds;
      params.max_depth = config.gbt_max_depth;
      params.shrinkage = config.shrinkage;
      Matrix X = forest_matrix(config, enc, train_records);
      return forest::train_gbt(X, labels, params, fan_seed(config.seed, "gbt"));
    }
    case ModelKind::neural: {
      neural::ModelConfig mc = config.model_config;
      mc.use_numerical_features = config.features == FeatureMode::both;
      mc.numerical_feature_count = mc.use_numerical_features
                                       ? static_cast<int>(features::kFeatureCount)
                                       : 0;
      mc.seed = fan_seed(config.seed, "neural");
      neural::SiameseRanker model =
          neural::init_model(mc, enc.embeddings, fan_seed(config.seed, "neural-init"));
      neural::TrainingSet set = neural_training_set(config, enc, train_records);
      neural::train(model, set, mc);
      return model;
    }
  }
  throw std::logic_error("unreachable model kind");
}

std::vector<double> score_records(const TrainedModel& model, const Encoders& enc,
                                  const ExperimentConfig& config,
                                  const std::vector<corpus::AnswerRecord>& records) {
  if (const auto* forest_model = std::get_if<forest::ForestModel>(&model)) {
    Matrix X = forest_matrix(config, enc, records);
    return forest::predict_proba(*forest_model, X);
  }
  const auto& ranker = std::get<neural::SiameseRanker>(model);
  neural::TrainingSet set = neural_training_set(config, enc, records);
  neural::Batch batch{std::move(set.question_seqs), std::move(set.answer_seqs),
                      std::move(set.numerical), std::move(set.labels)};
  return neural::forward(ranker, batch, /*training=*/false, 0);
}

}  // namespace

RankedThread rank_answers(const TrainedModel& model, const corpus::QuestionThread& thread,
                          const Encoders& encoders) {
  ExperimentConfig config;
  config.model = encoders.kind;
  config.features = encoders.mode;
  config.max_sentences = encoders.max_sentences;
  config.model_config.max_seq_len = encoders.max_seq_len;

  std::vector<double> scores = score_records(model, encoders, config, thread.answers);

  std::vector<int> gold;
  gold.reserve(thread.answers.size());
  for (const auto& a : thread.answers) gold.push_back(a.a_accepted ? 1 : 0);

  std::vector<std::size_t> order(thread.answers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return thread.answers[a].a_id < thread.answers[b].a_id;
  });
  std::vector<long long> ranked_ids;
  ranked_ids.reserve(order.size());
  for (std::size_t i : order) ranked_ids.push_back(thread.answers[i].a_id);

  return {std::move(ranked_ids), metrics::RankingQuery(std::move(gold), std::move(scores))};
}

namespace {

std::string queries_csv(const std::vector<long long>& q_ids,
                        const std::vector<metrics::RankingQuery>& queries,
                        const std::vector<corpus::QuestionThread>& threads) {
  std::string out = "q_id,a_id,gold,score\n";
  for (std::size_t t = 0; t < queries.size(); ++t) {
    for (std::size_t i = 0; i < queries[t].n_answers(); ++i) {
      out += std::to_string(q_ids[t]);
      out += ',';
      out += std::to_string(threads[t].answers[i].a_id);
      out += ',';
      out += std::to_string(queries[t].gold[i]);
      out += ',';
      out += fmt_full(queries[t].scores[i]);
      out += '\n';
    }
  }
  return out;
}

std::string curve_csv(const std::vector<metrics::RankingQuery>& queries) {
  std::string out = "n_answers,mean_rr,expected_random_rr,n_queries\n";
  for (const auto& row : metrics::mrr_vs_answer_count(queries)) {
    out += std::to_string(row.n_answers);
    out += ',';
    out += fmt_fixed(row.mean_rr, 6);
    out += ',';
    out += fmt_fixed(metrics::expected_random_rr(static_cast<int>(row.n_answers)), 6);
    out += ',';
    out += std::to_string(row.n_queries);
    out += '\n';
  }
  return out;
}

std::string histogram_csv(const std::vector<metrics::RankingQuery>& queries, int bins) {
  std::string out = "bin_lower_edge,count\n";
  for (const auto& bin : metrics::mrr_histogram(queries, bins)) {
    out += fmt_fixed(bin.lower_edge, 6);
    out += ',';
    out += std::to_string(bin.count);
    out += '\n';
  }
  return out;
}

std::string encoders_json(const Encoders& enc) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["max_sentences"] = enc.max_sentences;
  doc["max_seq_len"] = enc.max_seq_len;
  if (!enc.tfidf.vocabulary.empty()) {
    nlohmann::json tfidf;
    tfidf["corpus_size"] = enc.tfidf.corpus_size;
    nlohmann::json vocab = nlohmann::json::object();
    for (const auto& [token, column] : enc.tfidf.vocabulary) {
      vocab[token] = {{"column", column}, {"df", enc.tfidf.document_frequency.at(token)}};
    }
    tfidf["vocabulary"] = std::move(vocab);
    doc["tfidf"] = std::move(tfidf);
  }
  if (!enc.standardization.mean.empty()) {
    doc["standardization"] = {{"mean", enc.standardization.mean},
                              {"stddev", enc.standardization.stddev}};
  }
  return doc.dump(2);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.model == ModelKind::neural && config.features == FeatureMode::numerical) {
    throw std::invalid_argument(
        "the neural ranker needs text input; use feature mode text or both");
  }

  // Everything that can fail on bad inputs happens before training starts.
  auto train_records = corpus::parse_records_file(config.train_path);
  auto test_records = corpus::parse_records_file(config.test_path);
  if (train_records.empty()) throw std::runtime_error("training file holds no records");

  std::shared_ptr<const vectorize::EmbeddingTable> embeddings;
  if (config.model == ModelKind::neural) {
    embeddings = std::make_shared<const vectorize::EmbeddingTable>(vectorize::load_embeddings(
        embedding_path_for(config), config.model_config.embedding_dimension));
  }

  if (config.n_per_class > 0) {
    train_records = corpus::balance_training(
        train_records, static_cast<std::size_t>(config.n_per_class), fan_seed(config.seed, "balance"));
  }

  corpus::ThreadingResult threading = corpus::group_threads(test_records);
  if (threading.threads.empty()) throw std::runtime_error("test file holds no rankable threads");

  Encoders enc = fit_encoders(config, train_records, embeddings);
  TrainedModel model = train_model(config, enc, train_records);

  ExperimentResult result;
  for (const auto& thread : threading.threads) {
    RankedThread ranked = rank_answers(model, thread, enc);
    result.queries.push_back(std::move(ranked.query));
    result.q_ids.push_back(thread.q_id);
  }
  result.report = metrics::evaluate_queries(result.queries);

  std::string run_name = config.run_name.empty()
                             ? to_string(config.model) + "-" + to_string(config.features)
                             : config.run_name;
  result.run_dir = fs::path(config.output_dir) / run_name;
  fs::create_directories(result.run_dir);
  write_text_file(result.run_dir / "report.csv",
                  emit_report(run_name, result.report, ReportFormat::csv));
  write_text_file(result.run_dir / "queries.csv",
                  queries_csv(result.q_ids, result.queries, threading.threads));
  write_text_file(result.run_dir / "mrr_vs_answer_count.csv", curve_csv(result.queries));
  write_text_file(result.run_dir / "mrr_histogram.csv",
                  histogram_csv(result.queries, config.histogram_bins));
  write_text_file(result.run_dir / "encoders.json", encoders_json(enc));
  write_text_file(result.run_dir / "config.txt", config_echo(config));
  return result;
}

std::vector<std::string> default_axis_values(const std::string& axis) {
  if (axis == "learning_rate") return {"0.1", "0.01", "0.001", "0.0001", "0.00001", "0.000001"};
  if (axis == "max_sentences") return {"-1", "1", "2", "3", "4"};
  if (axis == "max_seq_len") return {"100", "150", "200", "250", "300"};
  if (axis == "embedding_source") return {"wiki", "twitter"};
  if (axis == "lstm_depth") return {"1", "2", "3", "4"};
  if (axis == "head_depth") return {"0", "1", "2", "3"};
  throw std::invalid_argument("unknown sweep axis: " + axis);
}

namespace {

ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis,
                            const std::string& value) {
  ExperimentConfig config = base;
  config.sweep_axis = "none";
  config.axis_values.clear();
  config.run_name = axis + "-" + value;
  config.output_dir = (fs::path(base.output_dir) / ("sweep-" + axis)).string();

  if (axis == "learning_rate") config.model_config.learning_rate = std::stod(value);
  else if (axis == "max_sentences") config.max_sentences = std::stoi(value);
  else if (axis == "max_seq_len") config.model_config.max_seq_len = std::stoi(value);
  else if (axis == "embedding_source") config.embedding_source = value;
  else if (axis == "lstm_depth") config.model_config.lstm_depth = std::stoi(value);
  else if (axis == "head_depth") {
    static const std::vector<std::vector<int>> kHeads = {{}, {200}, {200, 100}, {200, 100, 50}};
    int depth = std::stoi(value);
    if (depth < 0 || depth > 3) throw std::invalid_argument("head_depth must be 0..3");
    config.model_config.head_hidden_sizes = kHeads[static_cast<std::size_t>(depth)];
  } else {
    throw std::invalid_argument("unknown sweep axis: " + axis);
  }
  return config;
}

}  // namespace

SweepReport run_sweep(const ExperimentConfig& config) {
  if (config.sweep_axis == "none" || config.sweep_axis.empty()) {
    throw std::invalid_argument("run_sweep: no sweep axis set");
  }
  SweepReport report;
  report.axis = config.sweep_axis;
  report.base_config_echo = config_echo(config);

  std::vector<std::string> values =
      config.axis_values.empty() ? default_axis_values(config.sweep_axis) : config.axis_values;
  for (const auto& value : values) {
    ExperimentConfig row_config = apply_axis(config, config.sweep_axis, value);
    auto start = std::chrono::steady_clock::now();
    ExperimentResult result;
    try {
      result = run_experiment(row_config);
    } catch (const std::exception& e) {
      throw std::runtime_error(config.sweep_axis + "=" + value + ": " + e.what());
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back({value, result.report, config_echo(row_config), wall});
  }

  fs::path sweep_dir = fs::path(config.output_dir) / ("sweep-" + config.sweep_axis);
  fs::create_directories(sweep_dir);
  write_text_file(sweep_dir / "sweep_report.csv", emit_report(report, ReportFormat::csv));
  write_text_file(sweep_dir / "sweep_report.md", emit_report(report, ReportFormat::markdown));
  return report;
}

namespace {

constexpr const char* kReportHeader = "name,NDCG@1,NDCG@3,NDCG@5,MRR";

std::string report_row_csv(const std::string& name, const metrics::MetricReport& r) {
  return name + "," + fmt_fixed(r.ndcg_at_1, 6) + "," + fmt_fixed(r.ndcg_at_3, 6) + "," +
         fmt_fixed(r.ndcg_at_5, 6) + "," + fmt_fixed(r.mrr, 6) + "\n";
}

std::string report_row_md(const std::string& name, const metrics::MetricReport& r) {
  return "| " + name + " | " + fmt_fixed(r.ndcg_at_1, 6) + " | " + fmt_fixed(r.ndcg_at_3, 6) +
         " | " + fmt_fixed(r.ndcg_at_5, 6) + " | " + fmt_fixed(r.mrr, 6) + " |\n";
}

constexpr const char* kMarkdownHeader =
    "| name | NDCG@1 | NDCG@3 | NDCG@5 | MRR |\n|---|---|---|---|---|\n";

}  // namespace

std::string emit_report(const std::string& name, const metrics::MetricReport& report,
                        ReportFormat format) {
  if (format == ReportFormat::csv) {
    return std::string(kReportHeader) + "\n" + report_row_csv(name, report);
  }
  return std::string(kMarkdownHeader) + report_row_md(name, report);
}

std::string emit_report(const SweepReport& report, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out = std::string(kReportHeader) + "\n";
    for (const auto& row : report.rows) out += report_row_csv(row.axis_value, row.report);
    return out;
  }
  std::string out = kMarkdownHeader;
  for (const auto& row : report.rows) out += report_row_md(row.axis_value, row.report);
  return out;
}

RunData read_run_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("run file is empty");
  if (trim(line) != "q_id,a_id,gold,score") {
    throw std::runtime_error("run file header must be q_id,a_id,gold,score");
  }

  struct Row {
    long long q_id;
    int gold;
    double score;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto parts = split_csv_list(line);
    if (parts.size() != 4) {
      throw std::runtime_error("run file line " + std::to_string(line_no) + ": expected 4 columns");
    }
    try {
      rows.push_back({std::stoll(parts[0]), std::stoi(parts[2]), std::stod(parts[3])});
    } catch (const std::exception&) {
      throw std::runtime_error("run file line " + std::to_string(line_no) + ": bad value");
    }
  }

  RunData data;
  std::size_t i = 0;
  while (i < rows.size()) {  // rows of one query are contiguous
    long long q_id = rows[i].q_id;
    std::vector<int> gold;
    std::vector<double> scores;
    while (i < rows.size() && rows[i].q_id == q_id) {
      gold.push_back(rows[i].gold);
      scores.push_back(rows[i].score);
      ++i;
    }
    data.q_ids.push_back(q_id);
    data.queries.emplace_back(std::move(gold), std::move(scores));
  }
  return data;
}

RunData read_run_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run file " + path);
  return read_run_csv(in);
}

}  // namespace cqarank::harness
