#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cqarank/common.hpp"

namespace cqarank::forest {

// feature < 0 marks a leaf; the leaf payload lives in value (class-1
// probability for classification trees, additive step for boosted
// regression trees).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int n_features = 0;
  int max_depth = -1;  // -1: unlimited
  int min_samples_leaf = 1;
};

enum class ForestKind { random_forest, adaboost, gradient_boosted };

struct ForestModel {
  ForestKind kind = ForestKind::random_forest;
  std::vector<DecisionTree> trees;
  std::vector<double> tree_weights;  // AdaBoost round weights
  double shrinkage = 0.0;            // gradient boosting
  double init_log_odds = 0.0;        // gradient boosting
  std::uint64_t seed = 0;
  int n_features = 0;
};

struct CartParams {
  int max_depth = -1;
  int min_samples_leaf = 1;
  int feature_subsample = 0;  // 0: consider every feature at each split
};

// Greedy Gini tree over 0/1 labels; midpoint thresholds, deterministic
// tie-break on (feature index, threshold). Leaf value = class-1 fraction.
DecisionTree train_cart(const Matrix& X, const std::vector<int>& y, const CartParams& params,
                        std::uint64_t seed);

struct RandomForestParams {
  int n_trees = 100;
  int max_depth = -1;
  int min_samples_leaf = 1;
  bool bootstrap = true;
  int feature_subsample = 0;  // 0: ceil(sqrt(F)) per split
};

// Bagged Gini trees; per-tree randomness derives from seed + tree index and
// prediction averages the leaf probabilities.
ForestModel train_random_forest(const Matrix& X, const std::vector<int>& y,
                                const RandomForestParams& params, std::uint64_t seed);

// Discrete AdaBoost over depth-1 stumps; round weight 0.5*ln((1-e)/e) with e
// clamped to [1e-10, 1-1e-10]. Probability is the logistic of the weighted
// margin. Throws when y holds a single class.
ForestModel train_adaboost(const Matrix& X, const std::vector<int>& y, int n_rounds,
                           std::uint64_t seed);

struct GbtParams {
  int n_rounds = 100;
  int max_depth = 3;
  double shrinkage = 0.1;
};

// Gradient boosting on logistic loss: prior log-odds start, regression trees
// on the negative gradient with Newton-step leaves, shrinkage-scaled
// accumulation. loss_trace (when given) receives the training log-loss
// before any round and after each one.
ForestModel train_gbt(const Matrix& X, const std::vector<int>& y, const GbtParams& params,
                      std::uint64_t seed, std::vector<double>* loss_trace = nullptr);

std::vector<double> predict_proba(const DecisionTree& tree, const Matrix& X);
std::vector<double> predict_proba(const ForestModel& model, const Matrix& X);

// Self-describing versioned JSON round-trip.
std::string save_model(const ForestModel& model);
ForestModel load_model(const std::string& json_text);

}  // namespace cqarank::forest
