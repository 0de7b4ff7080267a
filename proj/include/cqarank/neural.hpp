#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cqarank/common.hpp"
#include "cqarank/vectorize.hpp"

namespace cqarank::neural {

struct ModelConfig {
  int embedding_dimension = 100;
  int max_seq_len = 100;
  int lstm_hidden = 64;  // per direction
  int lstm_depth = 1;    // 1..4
  std::vector<int> head_hidden_sizes;  // one of {}, {200}, {200,100}, {200,100,50}
  double dropout_rate = 0.25;
  // Dropout sits after the embedding and between stacked layers; with a
  // single layer it stays off unless explicitly requested.
  bool dropout_on_single_layer = false;
  bool use_numerical_features = false;
  int numerical_feature_count = 0;
  double learning_rate = 0.01;
  int epochs = 5;
  int batch_size = 512;
  std::uint64_t seed = 0;
};

// Gate blocks are packed [input, forget, cell, output] along the rows:
// W is 4H x input_dim, U is 4H x H, b is 4H.
struct LstmLayerParams {
  Matrix W;
  Matrix U;
  std::vector<double> b;
};

struct BiLstmLayer {
  LstmLayerParams fwd, bwd;
};

struct DenseLayer {
  Matrix W;  // out x in
  std::vector<double> b;
};

// The trainable tensors; gradients and Adam moments reuse this layout.
struct ParameterSet {
  std::vector<BiLstmLayer> question_branch, answer_branch;
  std::vector<DenseLayer> head;  // hidden layers then the single logistic unit
};

struct SiameseRanker {
  ModelConfig config;
  std::shared_ptr<const vectorize::EmbeddingTable> embeddings;  // frozen
  ParameterSet params;
};

struct TensorRef {
  std::string name;
  std::vector<double>* values;
};

// Every trainable tensor in the one declared order used by initialization,
// Adam updates, checkpoints, and gradient checks.
std::vector<TensorRef> tensor_refs(ParameterSet& params);

struct Batch {
  std::vector<vectorize::TokenSequence> question_seqs, answer_seqs;
  Matrix numerical;  // rows x numerical_feature_count, standardized; empty when unused
  std::vector<int> labels;  // 0/1
  std::size_t size() const { return labels.size(); }
};

// Glorot-uniform weights (forget-gate biases start at 1), deterministic
// given seed. Throws on config/table mismatches.
SiameseRanker init_model(const ModelConfig& config,
                         std::shared_ptr<const vectorize::EmbeddingTable> embeddings,
                         std::uint64_t seed);

// Class-1 probability per row. Padded timesteps never update the recurrent
// state, so outputs are independent of pad length. Dropout applies only when
// training is true; the seed reproduces its masks.
std::vector<double> forward(const SiameseRanker& model, const Batch& batch, bool training,
                            std::uint64_t seed);

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7].
double loss(std::span<const double> probabilities, std::span<const int> labels);

struct BackwardResult {
  ParameterSet gradients;  // shapes mirror the model parameters
  double batch_loss = 0.0;
  std::vector<double> probabilities;
};

// Analytic gradients of the batch loss for every trainable parameter
// (embeddings are frozen). Reruns the forward pass internally; the same seed
// reproduces the forward call's dropout masks.
BackwardResult backward(const SiameseRanker& model, const Batch& batch, std::uint64_t seed,
                        bool training = true);

// Central finite differences over 20 coordinates per tensor (all of them for
// small tensors), taken by gradient magnitude so the comparison stays above
// double-precision differencing noise; dropout disabled. Returns the max
// relative error |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
double gradient_check(SiameseRanker& model, const Batch& batch, double step = 1e-5);

struct AdamState {
  ParameterSet m, v;
  long long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const SiameseRanker& model);

// Standard bias-corrected Adam update applied in declared tensor order.
void adam_step(SiameseRanker& model, ParameterSet& gradients, AdamState& state,
               double learning_rate);

struct TrainingSet {
  std::vector<vectorize::TokenSequence> question_seqs, answer_seqs;
  Matrix numerical;
  std::vector<int> labels;
};

// epochs x shuffled batches with Adam; the shuffle and the dropout streams
// both derive from config.seed. Returns the mean training loss per epoch.
std::vector<double> train(SiameseRanker& model, const TrainingSet& data,
                          const ModelConfig& config);

// Versioned JSON checkpoint: config plus all tensors in declared order.
// Loading validates every shape against the config.
std::string save_checkpoint(const SiameseRanker& model);
SiameseRanker load_checkpoint(const std::string& json_text,
                              std::shared_ptr<const vectorize::EmbeddingTable> embeddings);

}  // namespace cqarank::neural
