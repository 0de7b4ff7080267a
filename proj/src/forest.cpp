#include "cqarank/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace cqarank::forest {

namespace {

constexpr double kEpsClamp = 1e-10;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Shared recursive builder for classification (weighted Gini, fraction
// leaves) and regression (variance reduction, mean or Newton-step leaves).
struct TreeBuilder {
  const Matrix& X;
  const std::vector<int>* labels = nullptr;          // classification
  const std::vector<double>* targets = nullptr;      // regression
  const std::vector<double>* weights = nullptr;      // classification sample weights
  const std::vector<double>* hessians = nullptr;     // regression Newton denominators
  int max_depth = -1;
  int min_samples_leaf = 1;
  int feature_subsample = 0;
  Rng* rng = nullptr;

  std::vector<TreeNode> nodes;

  bool classification() const { return labels != nullptr; }

  double leaf_value(const std::vector<std::size_t>& idx) const {
    if (classification()) {
      double w1 = 0.0, w = 0.0;
      for (std::size_t i : idx) {
        double wi = weights ? (*weights)[i] : 1.0;
        w += wi;
        if ((*labels)[i] == 1) w1 += wi;
      }
      return w > 0.0 ? w1 / w : 0.0;
    }
    if (hessians) {
      double num = 0.0, den = 0.0;
      for (std::size_t i : idx) {
        num += (*targets)[i];
        den += (*hessians)[i];
      }
      return num / std::max(den, 1e-12);
    }
    double sum = 0.0;
    for (std::size_t i : idx) sum += (*targets)[i];
    return sum / static_cast<double>(idx.size());
  }

  // Impurity scaled by total weight, so split gain = parent - left - right
  // stays non-negative without renormalizing at every candidate.
  double scaled_impurity(double w, double w1, double sum, double sumsq) const {
    if (classification()) {
      if (w <= 0.0) return 0.0;
      double w0 = w - w1;
      return w - (w1 * w1 + w0 * w0) / w;  // w * gini
    }
    if (w <= 0.0) return 0.0;
    return sumsq - sum * sum / w;  // SSE
  }

  std::vector<int> candidate_features() const {
    int total = static_cast<int>(X.cols());
    if (feature_subsample <= 0 || feature_subsample >= total) {
      std::vector<int> all(total);
      std::iota(all.begin(), all.end(), 0);
      return all;
    }
    // partial Fisher-Yates, then ascending order for deterministic scans
    std::vector<int> pool(total);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < feature_subsample; ++i) {
      auto j = static_cast<std::size_t>(i) + rng->below(static_cast<std::uint64_t>(total - i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(feature_subsample));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  int build(std::vector<std::size_t>& idx, int depth) {
    int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[node_id].value = leaf_value(idx);

    if (max_depth >= 0 && depth >= max_depth) return node_id;
    if (idx.size() < 2 || idx.size() < 2 * static_cast<std::size_t>(min_samples_leaf)) {
      return node_id;
    }
    if (classification()) {
      bool pure = true;
      for (std::size_t i : idx) pure = pure && (*labels)[i] == (*labels)[idx.front()];
      if (pure) return node_id;
    }

    // node totals
    double w_total = 0.0, w1_total = 0.0, sum_total = 0.0, sumsq_total = 0.0;
    for (std::size_t i : idx) {
      if (classification()) {
        double wi = weights ? (*weights)[i] : 1.0;
        w_total += wi;
        if ((*labels)[i] == 1) w1_total += wi;
      } else {
        double t = (*targets)[i];
        w_total += 1.0;
        sum_total += t;
        sumsq_total += t * t;
      }
    }
    double parent_impurity = scaled_impurity(w_total, w1_total, sum_total, sumsq_total);

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;

    std::vector<std::pair<double, std::size_t>> sorted;
    sorted.reserve(idx.size());
    for (int f : candidate_features()) {
      sorted.clear();
      for (std::size_t i : idx) sorted.emplace_back(X(i, static_cast<std::size_t>(f)), i);
      std::sort(sorted.begin(), sorted.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      double w_left = 0.0, w1_left = 0.0, sum_left = 0.0, sumsq_left = 0.0;
      for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
        std::size_t i = sorted[pos].second;
        if (classification()) {
          double wi = weights ? (*weights)[i] : 1.0;
          w_left += wi;
          if ((*labels)[i] == 1) w1_left += wi;
        } else {
          double t = (*targets)[i];
          w_left += 1.0;
          sum_left += t;
          sumsq_left += t * t;
        }
        double lo = sorted[pos].first, hi = sorted[pos + 1].first;
        if (lo == hi) continue;
        std::size_t n_left = pos + 1, n_right = sorted.size() - n_left;
        if (n_left < static_cast<std::size_t>(min_samples_leaf) ||
            n_right < static_cast<std::size_t>(min_samples_leaf)) {
          continue;
        }
        double threshold = lo + (hi - lo) / 2.0;
        if (!(lo < threshold && threshold < hi)) continue;  // adjacent doubles

        double gain = parent_impurity -
                      scaled_impurity(w_left, w1_left, sum_left, sumsq_left) -
                      scaled_impurity(w_total - w_left, w1_total - w1_left,
                                      sum_total - sum_left, sumsq_total - sumsq_left);
        if (gain > best_gain) {  // ties keep the earliest (feature, threshold)
          best_gain = gain;
          best_feature = f;
          best_threshold = threshold;
        }
      }
    }
    if (best_feature < 0 || best_gain <= 0.0) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
      (X(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_idx : right_idx)
          .push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    int left = build(left_idx, depth + 1);
    int right = build(right_idx, depth + 1);
    nodes[node_id].left = left;
    nodes[node_id].right = right;
    return node_id;
  }
};

double tree_value(const DecisionTree& tree, std::span<const double> row) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    node = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].value;
}

void check_training_input(const Matrix& X, std::size_t n_labels) {
  if (X.rows() == 0 || X.cols() == 0) throw std::invalid_argument("empty training input");
  if (X.rows() != n_labels) throw std::invalid_argument("X rows and label count differ");
}

void check_both_classes(const std::vector<int>& y) {
  bool has0 = false, has1 = false;
  for (int v : y) {
    has0 = has0 || v == 0;
    has1 = has1 || v == 1;
  }
  if (!has0 || !has1) throw std::invalid_argument("training labels hold a single class");
}

DecisionTree train_cart_impl(const Matrix& X, const std::vector<int>& y,
                             const std::vector<double>* weights, const CartParams& params,
                             Rng& rng) {
  check_training_input(X, y.size());
  TreeBuilder b{X, &y, nullptr, weights, nullptr,
                params.max_depth, params.min_samples_leaf, params.feature_subsample, &rng, {}};
  std::vector<std::size_t> idx(X.rows());
  std::iota(idx.begin(), idx.end(), 0);
  b.build(idx, 0);
  DecisionTree tree;
  tree.nodes = std::move(b.nodes);
  tree.n_features = static_cast<int>(X.cols());
  tree.max_depth = params.max_depth;
  tree.min_samples_leaf = params.min_samples_leaf;
  return tree;
}

DecisionTree train_regression_tree(const Matrix& X, const std::vector<double>& targets,
                                   const std::vector<double>& hessians, int max_depth,
                                   Rng& rng) {
  TreeBuilder b{X, nullptr, &targets, nullptr, &hessians, max_depth, 1, 0, &rng, {}};
  std::vector<std::size_t> idx(X.rows());
  std::iota(idx.begin(), idx.end(), 0);
  b.build(idx, 0);
  DecisionTree tree;
  tree.nodes = std::move(b.nodes);
  tree.n_features = static_cast<int>(X.cols());
  tree.max_depth = max_depth;
  return tree;
}

double mean_log_loss(const std::vector<double>& scores, const std::vector<int>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double p = std::clamp(sigmoid(scores[i]), 1e-7, 1.0 - 1e-7);
    total += y[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(y.size());
}

}  // namespace

DecisionTree train_cart(const Matrix& X, const std::vector<int>& y, const CartParams& params,
                        std::uint64_t seed) {
  Rng rng(seed);
  return train_cart_impl(X, y, nullptr, params, rng);
}

ForestModel train_random_forest(const Matrix& X, const std::vector<int>& y,
                                const RandomForestParams& params, std::uint64_t seed) {
  check_training_input(X, y.size());
  if (params.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");

  int subsample = params.feature_subsample;
  if (subsample == 0) {
    subsample = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(X.cols()))));
  }

  ForestModel model;
  model.kind = ForestKind::random_forest;
  model.seed = seed;
  model.n_features = static_cast<int>(X.cols());
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(seed + static_cast<std::uint64_t>(t));
    if (params.bootstrap) {
      // bootstrap by replicating indices in a scratch matrix-free way:
      // the builder works on an index list, so draw it directly
      std::vector<std::size_t> idx(X.rows());
      for (auto& i : idx) i = static_cast<std::size_t>(rng.below(X.rows()));
      std::sort(idx.begin(), idx.end());
      TreeBuilder b{X, &y, nullptr, nullptr, nullptr,
                    params.max_depth, params.min_samples_leaf, subsample, &rng, {}};
      b.build(idx, 0);
      DecisionTree tree;
      tree.nodes = std::move(b.nodes);
      tree.n_features = model.n_features;
      tree.max_depth = params.max_depth;
      tree.min_samples_leaf = params.min_samples_leaf;
      model.trees.push_back(std::move(tree));
    } else {
      CartParams cart{params.max_depth, params.min_samples_leaf, subsample};
      model.trees.push_back(train_cart_impl(X, y, nullptr, cart, rng));
    }
  }
  return model;
}

ForestModel train_adaboost(const Matrix& X, const std::vector<int>& y, int n_rounds,
                           std::uint64_t seed) {
  check_training_input(X, y.size());
  check_both_classes(y);
  if (n_rounds < 1) throw std::invalid_argument("n_rounds must be >= 1");

  std::size_t n = y.size();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  Rng rng(seed);

  ForestModel model;
  model.kind = ForestKind::adaboost;
  model.seed = seed;
  model.n_features = static_cast<int>(X.cols());

  CartParams stump_params{1, 1, 0};
  for (int round = 0; round < n_rounds; ++round) {
    DecisionTree stump = train_cart_impl(X, y, &w, stump_params, rng);

    double eps = 0.0;
    std::vector<int> h(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = tree_value(stump, X.row(i)) >= 0.5 ? 1 : -1;
      int yi = y[i] == 1 ? 1 : -1;
      if (h[i] != yi) eps += w[i];
    }
    double eps_clamped = std::clamp(eps, kEpsClamp, 1.0 - kEpsClamp);
    double alpha = 0.5 * std::log((1.0 - eps_clamped) / eps_clamped);

    model.trees.push_back(std::move(stump));
    model.tree_weights.push_back(alpha);
    if (eps <= kEpsClamp) break;  // perfect stump; reweighting is a no-op

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int yi = y[i] == 1 ? 1 : -1;
      w[i] *= std::exp(-alpha * static_cast<double>(yi * h[i]));
      total += w[i];
    }
    for (auto& wi : w) wi /= total;
  }
  return model;
}

ForestModel train_gbt(const Matrix& X, const std::vector<int>& y, const GbtParams& params,
                      std::uint64_t seed, std::vector<double>* loss_trace) {
  check_training_input(X, y.size());
  check_both_classes(y);
  if (params.n_rounds < 0) throw std::invalid_argument("n_rounds must be >= 0");
  if (!(params.shrinkage > 0.0 && params.shrinkage <= 1.0)) {
    throw std::invalid_argument("shrinkage must be in (0, 1]");
  }

  std::size_t n = y.size();
  double prevalence = 0.0;
  for (int v : y) prevalence += v;
  prevalence /= static_cast<double>(n);

  ForestModel model;
  model.kind = ForestKind::gradient_boosted;
  model.seed = seed;
  model.n_features = static_cast<int>(X.cols());
  model.shrinkage = params.shrinkage;
  model.init_log_odds = std::log(prevalence / (1.0 - prevalence));

  std::vector<double> scores(n, model.init_log_odds);
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(mean_log_loss(scores, y));
  }

  Rng rng(seed);
  std::vector<double> residuals(n), hessians(n);
  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      double p = sigmoid(scores[i]);
      residuals[i] = static_cast<double>(y[i]) - p;
      hessians[i] = p * (1.0 - p);
    }
    DecisionTree tree = train_regression_tree(X, residuals, hessians, params.max_depth, rng);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] += params.shrinkage * tree_value(tree, X.row(i));
    }
    model.trees.push_back(std::move(tree));
    if (loss_trace) loss_trace->push_back(mean_log_loss(scores, y));
  }
  return model;
}

std::vector<double> predict_proba(const DecisionTree& tree, const Matrix& X) {
  if (static_cast<int>(X.cols()) != tree.n_features) {
    throw std::invalid_argument("feature count mismatch");
  }
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = tree_value(tree, X.row(i));
  return out;
}

std::vector<double> predict_proba(const ForestModel& model, const Matrix& X) {
  if (static_cast<int>(X.cols()) != model.n_features) {
    throw std::invalid_argument("feature count mismatch");
  }
  std::vector<double> out(X.rows(), 0.0);
  switch (model.kind) {
    case ForestKind::random_forest:
      for (std::size_t i = 0; i < X.rows(); ++i) {
        double sum = 0.0;
        for (const auto& tree : model.trees) sum += tree_value(tree, X.row(i));
        out[i] = sum / static_cast<double>(model.trees.size());
      }
      break;
    case ForestKind::adaboost:
      for (std::size_t i = 0; i < X.rows(); ++i) {
        double margin = 0.0;
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
          double h = tree_value(model.trees[t], X.row(i)) >= 0.5 ? 1.0 : -1.0;
          margin += model.tree_weights[t] * h;
        }
        out[i] = sigmoid(margin);
      }
      break;
    case ForestKind::gradient_boosted:
      for (std::size_t i = 0; i < X.rows(); ++i) {
        double score = model.init_log_odds;
        for (const auto& tree : model.trees) score += model.shrinkage * tree_value(tree, X.row(i));
        out[i] = sigmoid(score);
      }
      break;
  }
  return out;
}

namespace {

using nlohmann::json;

const char* kind_name(ForestKind kind) {
  switch (kind) {
    case ForestKind::random_forest: return "random_forest";
    case ForestKind::adaboost: return "adaboost";
    case ForestKind::gradient_boosted: return "gradient_boosted";
  }
  return "random_forest";
}

ForestKind kind_from_name(const std::string& name) {
  if (name == "random_forest") return ForestKind::random_forest;
  if (name == "adaboost") return ForestKind::adaboost;
  if (name == "gradient_boosted") return ForestKind::gradient_boosted;
  throw std::runtime_error("unknown model kind: " + name);
}

}  // namespace

std::string save_model(const ForestModel& model) {
  json doc;
  doc["format_version"] = 1;
  doc["kind"] = kind_name(model.kind);
  doc["seed"] = model.seed;
  doc["n_features"] = model.n_features;
  doc["shrinkage"] = model.shrinkage;
  doc["init_log_odds"] = model.init_log_odds;
  doc["tree_weights"] = model.tree_weights;
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json t;
    t["max_depth"] = tree.max_depth;
    t["min_samples_leaf"] = tree.min_samples_leaf;
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back({{"f", n.feature},
                       {"t", n.threshold},
                       {"l", n.left},
                       {"r", n.right},
                       {"v", n.value}});
    }
    t["nodes"] = std::move(nodes);
    trees.push_back(std::move(t));
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

ForestModel load_model(const std::string& json_text) {
  json doc = json::parse(json_text);
  if (doc.at("format_version").get<int>() != 1) {
    throw std::runtime_error("unsupported model format version");
  }
  ForestModel model;
  model.kind = kind_from_name(doc.at("kind").get<std::string>());
  model.seed = doc.at("seed").get<std::uint64_t>();
  model.n_features = doc.at("n_features").get<int>();
  model.shrinkage = doc.at("shrinkage").get<double>();
  model.init_log_odds = doc.at("init_log_odds").get<double>();
  model.tree_weights = doc.at("tree_weights").get<std::vector<double>>();
  for (const auto& t : doc.at("trees")) {
    DecisionTree tree;
    tree.n_features = model.n_features;
    tree.max_depth = t.at("max_depth").get<int>();
    tree.min_samples_leaf = t.at("min_samples_leaf").get<int>();
    for (const auto& n : t.at("nodes")) {
      TreeNode node;
      node.feature = n.at("f").get<int>();
      node.threshold = n.at("t").get<double>();
      node.left = n.at("l").get<int>();
      node.right = n.at("r").get<int>();
      node.value = n.at("v").get<double>();
      tree.nodes.push_back(node);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace cqarank::forest
