#include "cqarank/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace cqarank::neural {

namespace {

constexpr double kProbClampLo = 1e-7;
constexpr double kProbClampHi = 1.0 - 1e-7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// y += W x
void matvec_acc(const Matrix& W, const double* x, double* y) {
  std::size_t rows = W.rows(), cols = W.cols();
  const double* data = W.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = data + r * cols;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    y[r] += s;
  }
}

// y += W^T d
void matvec_t_acc(const Matrix& W, const double* d, double* y) {
  std::size_t rows = W.rows(), cols = W.cols();
  const double* data = W.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = data + r * cols;
    double dr = d[r];
    if (dr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * dr;
  }
}

// G += d x^T
void outer_acc(Matrix& G, const double* d, const double* x) {
  std::size_t rows = G.rows(), cols = G.cols();
  double* data = G.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double dr = d[r];
    if (dr == 0.0) continue;
    double* row = data + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += dr * x[c];
  }
}

double effective_dropout(const ModelConfig& config) {
  if (config.lstm_depth == 1 && !config.dropout_on_single_layer) return 0.0;
  return config.dropout_rate;
}

bool head_in_grid(const std::vector<int>& sizes) {
  static const std::vector<std::vector<int>> kGrid = {{}, {200}, {200, 100}, {200, 100, 50}};
  return std::find(kGrid.begin(), kGrid.end(), sizes) != kGrid.end();
}

void validate_config(const ModelConfig& config) {
  if (config.embedding_dimension < 1) throw std::invalid_argument("embedding_dimension must be positive");
  if (config.max_seq_len < 1) throw std::invalid_argument("max_seq_len must be positive");
  if (config.lstm_hidden < 1) throw std::invalid_argument("lstm_hidden must be positive");
  if (config.lstm_depth < 1 || config.lstm_depth > 4) {
    throw std::invalid_argument("lstm_depth must be in [1, 4]");
  }
  if (!head_in_grid(config.head_hidden_sizes)) {
    throw std::invalid_argument("head_hidden_sizes must be one of {}, {200}, {200,100}, {200,100,50}");
  }
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must be in [0, 1)");
  }
  if (config.use_numerical_features && config.numerical_feature_count < 1) {
    throw std::invalid_argument("numerical_feature_count must be positive when features are used");
  }
  if (config.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (config.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
}

int head_input_width(const ModelConfig& config) {
  int width = 4 * config.lstm_hidden;  // two branches x two directions
  if (config.use_numerical_features) width += config.numerical_feature_count;
  return width;
}

// ---------------------------------------------------------------------------
// forward/backward plumbing
// ---------------------------------------------------------------------------

// One direction of one layer; step s is the position in this direction's own
// processing order (the backward direction walks the sequence reversed).
struct DirTrace {
  std::vector<double> gates;   // steps * 4H, post-activation [i f g o]
  std::vector<double> c;       // steps * H
  std::vector<double> tanh_c;  // steps * H
  std::vector<double> h;       // steps * H
};

struct LayerTrace {
  std::vector<double> input;   // steps * in_dim, after dropout
  DirTrace dir[2];             // 0 forward, 1 backward
  std::vector<double> output;  // steps * 2H, timestep-major
};

struct BranchTrace {
  int valid = 0;
  std::vector<LayerTrace> layers;
  std::vector<std::vector<double>> masks;  // masks[l]: multiplier on layer l's input
  std::vector<double> summary;             // 2H
};

struct HeadTrace {
  std::vector<std::vector<double>> activations;  // input, then each hidden output
  double logit = 0.0;
  double probability = 0.0;
};

void run_direction(const LstmLayerParams& p, const std::vector<double>& input, int steps,
                   int in_dim, int hidden, bool reversed, DirTrace& tr) {
  int gate_width = 4 * hidden;
  tr.gates.assign(static_cast<std::size_t>(steps) * gate_width, 0.0);
  tr.c.assign(static_cast<std::size_t>(steps) * hidden, 0.0);
  tr.tanh_c.assign(static_cast<std::size_t>(steps) * hidden, 0.0);
  tr.h.assign(static_cast<std::size_t>(steps) * hidden, 0.0);

  std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
  for (int s = 0; s < steps; ++s) {
    int t = reversed ? steps - 1 - s : s;
    const double* x = input.data() + static_cast<std::size_t>(t) * in_dim;
    double* gates = tr.gates.data() + static_cast<std::size_t>(s) * gate_width;
    std::copy(p.b.begin(), p.b.end(), gates);
    matvec_acc(p.W, x, gates);
    matvec_acc(p.U, h.data(), gates);

    double* c_out = tr.c.data() + static_cast<std::size_t>(s) * hidden;
    double* tc_out = tr.tanh_c.data() + static_cast<std::size_t>(s) * hidden;
    double* h_out = tr.h.data() + static_cast<std::size_t>(s) * hidden;
    for (int j = 0; j < hidden; ++j) {
      double gi = sigmoid(gates[j]);
      double gf = sigmoid(gates[hidden + j]);
      double gg = std::tanh(gates[2 * hidden + j]);
      double go = sigmoid(gates[3 * hidden + j]);
      gates[j] = gi;
      gates[hidden + j] = gf;
      gates[2 * hidden + j] = gg;
      gates[3 * hidden + j] = go;
      double cn = gf * c[j] + gi * gg;
      c_out[j] = cn;
      double tc = std::tanh(cn);
      tc_out[j] = tc;
      h_out[j] = go * tc;
      c[j] = cn;
      h[j] = go * tc;
    }
  }
}

// Embeds the valid tokens, applies dropout, runs the stacked Bi-LSTM, and
// fills the trace. Padded steps are skipped entirely.
void branch_forward(const std::vector<BiLstmLayer>& layers, const ModelConfig& config,
                    const vectorize::EmbeddingTable& table,
                    const vectorize::TokenSequence& seq, bool training, Rng* dropout_rng,
                    BranchTrace& tr) {
  int hidden = config.lstm_hidden;
  int steps = seq.valid_length;
  if (steps > static_cast<int>(seq.ids.size())) {
    throw std::invalid_argument("token sequence: valid_length exceeds id count");
  }
  double rate = training ? effective_dropout(config) : 0.0;

  tr.valid = steps;
  tr.layers.assign(layers.size(), {});
  tr.masks.assign(layers.size(), {});
  tr.summary.assign(static_cast<std::size_t>(2) * hidden, 0.0);
  if (steps == 0) return;  // empty text: the zero initial state is the summary

  int table_rows = static_cast<int>(table.vectors.size()) / table.dimension;
  std::vector<double> embedded(static_cast<std::size_t>(steps) * config.embedding_dimension);
  for (int t = 0; t < steps; ++t) {
    int id = seq.ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= table_rows) throw std::invalid_argument("token id outside embedding table");
    auto v = table.vec(id);
    std::copy(v.begin(), v.end(), embedded.begin() + static_cast<std::size_t>(t) * config.embedding_dimension);
  }

  auto apply_dropout = [&](std::vector<double>& values, std::vector<double>& mask) {
    if (rate == 0.0) return;
    mask.resize(values.size());
    double scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < values.size(); ++i) {
      mask[i] = dropout_rng->uniform() < rate ? 0.0 : scale;
      values[i] *= mask[i];
    }
  };

  for (std::size_t l = 0; l < layers.size(); ++l) {
    LayerTrace& lt = tr.layers[l];
    int in_dim = l == 0 ? config.embedding_dimension : 2 * hidden;
    lt.input = l == 0 ? std::move(embedded) : tr.layers[l - 1].output;
    apply_dropout(lt.input, tr.masks[l]);

    run_direction(layers[l].fwd, lt.input, steps, in_dim, hidden, false, lt.dir[0]);
    run_direction(layers[l].bwd, lt.input, steps, in_dim, hidden, true, lt.dir[1]);

    lt.output.assign(static_cast<std::size_t>(steps) * 2 * hidden, 0.0);
    for (int t = 0; t < steps; ++t) {
      const double* hf = lt.dir[0].h.data() + static_cast<std::size_t>(t) * hidden;
      const double* hb = lt.dir[1].h.data() + static_cast<std::size_t>(steps - 1 - t) * hidden;
      double* out = lt.output.data() + static_cast<std::size_t>(t) * 2 * hidden;
      std::copy(hf, hf + hidden, out);
      std::copy(hb, hb + hidden, out + hidden);
    }
  }

  // summary: forward state after the last valid token, backward state after
  // the first (each direction's own final step)
  const LayerTrace& top = tr.layers.back();
  const double* hf = top.dir[0].h.data() + static_cast<std::size_t>(steps - 1) * hidden;
  const double* hb = top.dir[1].h.data() + static_cast<std::size_t>(steps - 1) * hidden;
  std::copy(hf, hf + hidden, tr.summary.begin());
  std::copy(hb, hb + hidden, tr.summary.begin() + hidden);
}

// BPTT for one branch. d_summary is the loss gradient at the branch summary;
// gradients accumulate into grads.
void branch_backward(const std::vector<BiLstmLayer>& layers, const ModelConfig& config,
                     const BranchTrace& tr, std::span<const double> d_summary,
                     std::vector<BiLstmLayer>& grads) {
  int hidden = config.lstm_hidden;
  int steps = tr.valid;
  if (steps == 0) return;

  std::vector<double> d_out(static_cast<std::size_t>(steps) * 2 * hidden, 0.0);
  double* top_fwd = d_out.data() + static_cast<std::size_t>(steps - 1) * 2 * hidden;
  for (int j = 0; j < hidden; ++j) top_fwd[j] += d_summary[static_cast<std::size_t>(j)];
  for (int j = 0; j < hidden; ++j) d_out[hidden + j] += d_summary[static_cast<std::size_t>(hidden + j)];

  std::vector<double> d_input, dpre(static_cast<std::size_t>(4) * hidden),
      dh_rec(hidden), dc_rec(hidden), dh(hidden);
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const LayerTrace& lt = tr.layers[static_cast<std::size_t>(l)];
    int in_dim = l == 0 ? config.embedding_dimension : 2 * hidden;
    d_input.assign(static_cast<std::size_t>(steps) * in_dim, 0.0);

    for (int dir = 0; dir < 2; ++dir) {
      const DirTrace& dt = lt.dir[dir];
      const LstmLayerParams& p = dir == 0 ? layers[static_cast<std::size_t>(l)].fwd
                                          : layers[static_cast<std::size_t>(l)].bwd;
      LstmLayerParams& g = dir == 0 ? grads[static_cast<std::size_t>(l)].fwd
                                    : grads[static_cast<std::size_t>(l)].bwd;
      std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
      std::fill(dc_rec.begin(), dc_rec.end(), 0.0);

      for (int s = steps - 1; s >= 0; --s) {
        int t = dir == 0 ? s : steps - 1 - s;
        const double* gates = dt.gates.data() + static_cast<std::size_t>(s) * 4 * hidden;
        const double* c = dt.c.data() + static_cast<std::size_t>(s) * hidden;
        const double* tanh_c = dt.tanh_c.data() + static_cast<std::size_t>(s) * hidden;
        const double* c_prev = s > 0 ? dt.c.data() + static_cast<std::size_t>(s - 1) * hidden : nullptr;
        const double* h_prev = s > 0 ? dt.h.data() + static_cast<std::size_t>(s - 1) * hidden : nullptr;

        const double* d_out_t = d_out.data() + static_cast<std::size_t>(t) * 2 * hidden +
                                (dir == 0 ? 0 : hidden);
        for (int j = 0; j < hidden; ++j) dh[j] = d_out_t[j] + dh_rec[j];

        for (int j = 0; j < hidden; ++j) {
          double gi = gates[j], gf = gates[hidden + j], gg = gates[2 * hidden + j],
                 go = gates[3 * hidden + j];
          double dcj = dc_rec[j] + dh[j] * go * (1.0 - tanh_c[j] * tanh_c[j]);
          double doj = dh[j] * tanh_c[j];
          double dij = dcj * gg;
          double dgj = dcj * gi;
          double dfj = dcj * (c_prev ? c_prev[j] : 0.0);
          dpre[j] = dij * gi * (1.0 - gi);
          dpre[hidden + j] = dfj * gf * (1.0 - gf);
          dpre[2 * hidden + j] = dgj * (1.0 - gg * gg);
          dpre[3 * hidden + j] = doj * go * (1.0 - go);
          dc_rec[j] = dcj * gf;
        }
        (void)c;

        for (int j = 0; j < 4 * hidden; ++j) g.b[static_cast<std::size_t>(j)] += dpre[static_cast<std::size_t>(j)];
        const double* x = lt.input.data() + static_cast<std::size_t>(t) * in_dim;
        outer_acc(g.W, dpre.data(), x);
        if (h_prev) outer_acc(g.U, dpre.data(), h_prev);

        std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
        matvec_t_acc(p.U, dpre.data(), dh_rec.data());
        matvec_t_acc(p.W, dpre.data(), d_input.data() + static_cast<std::size_t>(t) * in_dim);
      }
    }

    if (l > 0) {
      // gradient w.r.t. the lower layer's output, through this layer's dropout
      const std::vector<double>& mask = tr.masks[static_cast<std::size_t>(l)];
      if (!mask.empty()) {
        for (std::size_t i = 0; i < d_input.size(); ++i) d_input[i] *= mask[i];
      }
      d_out = std::move(d_input);
    }
    // l == 0: gradient w.r.t. the (frozen) embeddings is dropped
  }
}

struct SampleResult {
  BranchTrace q_trace, a_trace;
  HeadTrace head;
};

void head_forward(const ParameterSet& params, const std::vector<double>& input, HeadTrace& tr) {
  tr.activations.clear();
  tr.activations.push_back(input);
  for (std::size_t l = 0; l + 1 < params.head.size(); ++l) {
    const DenseLayer& layer = params.head[l];
    std::vector<double> out(layer.b);
    matvec_acc(layer.W, tr.activations.back().data(), out.data());
    for (double& v : out) v = std::tanh(v);
    tr.activations.push_back(std::move(out));
  }
  const DenseLayer& last = params.head.back();
  double logit = last.b[0];
  const auto& z = tr.activations.back();
  for (std::size_t c = 0; c < last.W.cols(); ++c) logit += last.W(0, c) * z[c];
  tr.logit = logit;
  tr.probability = sigmoid(logit);
}

// Returns the gradient w.r.t. the head input.
std::vector<double> head_backward(const ParameterSet& params, const HeadTrace& tr,
                                  double d_logit, ParameterSet& grads) {
  std::size_t depth = params.head.size();
  std::vector<double> d_act;  // gradient w.r.t. activations[l]

  {
    const DenseLayer& last = params.head.back();
    DenseLayer& g = grads.head.back();
    const auto& z = tr.activations.back();
    g.b[0] += d_logit;
    for (std::size_t c = 0; c < last.W.cols(); ++c) g.W(0, c) += d_logit * z[c];
    d_act.assign(last.W.cols(), 0.0);
    for (std::size_t c = 0; c < last.W.cols(); ++c) d_act[c] = last.W(0, c) * d_logit;
  }

  for (std::size_t l = depth - 1; l-- > 0;) {
    const DenseLayer& layer = params.head[l];
    DenseLayer& g = grads.head[l];
    const auto& a = tr.activations[l + 1];  // tanh outputs of this layer
    const auto& z = tr.activations[l];      // its input
    std::vector<double> d_pre(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) d_pre[j] = d_act[j] * (1.0 - a[j] * a[j]);
    for (std::size_t j = 0; j < d_pre.size(); ++j) g.b[j] += d_pre[j];
    outer_acc(g.W, d_pre.data(), z.data());
    d_act.assign(z.size(), 0.0);
    matvec_t_acc(layer.W, d_pre.data(), d_act.data());
  }
  return d_act;
}

void validate_batch(const SiameseRanker& model, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  if (batch.question_seqs.size() != batch.size() || batch.answer_seqs.size() != batch.size()) {
    throw std::invalid_argument("batch lists must share one length");
  }
  if (model.config.use_numerical_features) {
    if (batch.numerical.rows() != batch.size() ||
        batch.numerical.cols() != static_cast<std::size_t>(model.config.numerical_feature_count)) {
      throw std::invalid_argument("numerical feature block does not match the model config");
    }
  }
  for (int y : batch.labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0/1");
  }
}

std::vector<double> assemble_head_input(const SiameseRanker& model, const Batch& batch,
                                        std::size_t row, const BranchTrace& q,
                                        const BranchTrace& a) {
  std::vector<double> input;
  input.reserve(static_cast<std::size_t>(head_input_width(model.config)));
  input.insert(input.end(), q.summary.begin(), q.summary.end());
  input.insert(input.end(), a.summary.begin(), a.summary.end());
  if (model.config.use_numerical_features) {
    auto feats = batch.numerical.row(row);
    input.insert(input.end(), feats.begin(), feats.end());
  }
  return input;
}

ParameterSet zero_like(const ParameterSet& params) {
  ParameterSet z;
  auto zero_branch = [](const std::vector<BiLstmLayer>& src) {
    std::vector<BiLstmLayer> out;
    out.reserve(src.size());
    for (const auto& layer : src) {
      BiLstmLayer zl;
      for (auto [dst, srcp] : {std::pair{&zl.fwd, &layer.fwd}, std::pair{&zl.bwd, &layer.bwd}}) {
        dst->W = Matrix(srcp->W.rows(), srcp->W.cols());
        dst->U = Matrix(srcp->U.rows(), srcp->U.cols());
        dst->b.assign(srcp->b.size(), 0.0);
      }
      out.push_back(std::move(zl));
    }
    return out;
  };
  z.question_branch = zero_branch(params.question_branch);
  z.answer_branch = zero_branch(params.answer_branch);
  for (const auto& layer : params.head) {
    DenseLayer dl;
    dl.W = Matrix(layer.W.rows(), layer.W.cols());
    dl.b.assign(layer.b.size(), 0.0);
    z.head.push_back(std::move(dl));
  }
  return z;
}

}  // namespace

std::vector<TensorRef> tensor_refs(ParameterSet& params) {
  std::vector<TensorRef> refs;
  auto add_branch = [&](const char* prefix, std::vector<BiLstmLayer>& branch) {
    for (std::size_t l = 0; l < branch.size(); ++l) {
      std::string base = std::string(prefix) + ".l" + std::to_string(l);
      refs.push_back({base + ".fwd.W", &branch[l].fwd.W.data()});
      refs.push_back({base + ".fwd.U", &branch[l].fwd.U.data()});
      refs.push_back({base + ".fwd.b", &branch[l].fwd.b});
      refs.push_back({base + ".bwd.W", &branch[l].bwd.W.data()});
      refs.push_back({base + ".bwd.U", &branch[l].bwd.U.data()});
      refs.push_back({base + ".bwd.b", &branch[l].bwd.b});
    }
  };
  add_branch("question", params.question_branch);
  add_branch("answer", params.answer_branch);
  for (std::size_t l = 0; l < params.head.size(); ++l) {
    std::string base = "head.l" + std::to_string(l);
    refs.push_back({base + ".W", &params.head[l].W.data()});
    refs.push_back({base + ".b", &params.head[l].b});
  }
  return refs;
}

SiameseRanker init_model(const ModelConfig& config,
                         std::shared_ptr<const vectorize::EmbeddingTable> embeddings,
                         std::uint64_t seed) {
  validate_config(config);
  if (!embeddings) throw std::invalid_argument("embedding table is required");
  if (embeddings->dimension != config.embedding_dimension) {
    throw std::invalid_argument("embedding table dimension does not match the config");
  }

  SiameseRanker model;
  model.config = config;
  model.embeddings = std::move(embeddings);

  int hidden = config.lstm_hidden;
  Rng rng(seed);
  auto glorot = [&](Matrix& m) {
    double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (double& v : m.data()) v = rng.uniform(-limit, limit);
  };
  auto make_branch = [&] {
    std::vector<BiLstmLayer> branch;
    for (int l = 0; l < config.lstm_depth; ++l) {
      int in_dim = l == 0 ? config.embedding_dimension : 2 * hidden;
      BiLstmLayer layer;
      for (LstmLayerParams* p : {&layer.fwd, &layer.bwd}) {
        p->W = Matrix(static_cast<std::size_t>(4) * hidden, static_cast<std::size_t>(in_dim));
        p->U = Matrix(static_cast<std::size_t>(4) * hidden, static_cast<std::size_t>(hidden));
        p->b.assign(static_cast<std::size_t>(4) * hidden, 0.0);
        glorot(p->W);
        glorot(p->U);
        std::fill(p->b.begin() + hidden, p->b.begin() + 2 * hidden, 1.0);  // forget gate
      }
      branch.push_back(std::move(layer));
    }
    return branch;
  };
  model.params.question_branch = make_branch();
  model.params.answer_branch = make_branch();

  int in_width = head_input_width(config);
  std::vector<int> widths = config.head_hidden_sizes;
  widths.push_back(1);
  for (int out : widths) {
    DenseLayer layer;
    layer.W = Matrix(static_cast<std::size_t>(out), static_cast<std::size_t>(in_width));
    layer.b.assign(static_cast<std::size_t>(out), 0.0);
    glorot(layer.W);
    model.params.head.push_back(std::move(layer));
    in_width = out;
  }
  return model;
}

std::vector<double> forward(const SiameseRanker& model, const Batch& batch, bool training,
                            std::uint64_t seed) {
  validate_batch(model, batch);
  std::vector<double> probabilities(batch.size());
  SampleResult sample;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng dropout_rng(fan_seed(seed, "dropout", i));
    branch_forward(model.params.question_branch, model.config, *model.embeddings,
                   batch.question_seqs[i], training, &dropout_rng, sample.q_trace);
    branch_forward(model.params.answer_branch, model.config, *model.embeddings,
                   batch.answer_seqs[i], training, &dropout_rng, sample.a_trace);
    head_forward(model.params, assemble_head_input(model, batch, i, sample.q_trace, sample.a_trace),
                 sample.head);
    probabilities[i] = sample.head.probability;
  }
  return probabilities;
}

double loss(std::span<const double> probabilities, std::span<const int> labels) {
  if (probabilities.empty()) throw std::invalid_argument("loss: empty batch");
  if (probabilities.size() != labels.size()) {
    throw std::invalid_argument("loss: probability and label counts differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    double p = std::clamp(probabilities[i], kProbClampLo, kProbClampHi);
    total += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(probabilities.size());
}

BackwardResult backward(const SiameseRanker& model, const Batch& batch, std::uint64_t seed,
                        bool training) {
  validate_batch(model, batch);
  BackwardResult result;
  result.gradients = zero_like(model.params);
  result.probabilities.resize(batch.size());

  int hidden = model.config.lstm_hidden;
  double n = static_cast<double>(batch.size());
  SampleResult sample;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng dropout_rng(fan_seed(seed, "dropout", i));
    branch_forward(model.params.question_branch, model.config, *model.embeddings,
                   batch.question_seqs[i], training, &dropout_rng, sample.q_trace);
    branch_forward(model.params.answer_branch, model.config, *model.embeddings,
                   batch.answer_seqs[i], training, &dropout_rng, sample.a_trace);
    head_forward(model.params, assemble_head_input(model, batch, i, sample.q_trace, sample.a_trace),
                 sample.head);
    double p = sample.head.probability;
    result.probabilities[i] = p;

    // mean BCE through the clamp: flat outside the clamp window
    double d_logit = 0.0;
    if (p > kProbClampLo && p < kProbClampHi) {
      d_logit = (p - static_cast<double>(batch.labels[i])) / n;
    }
    std::vector<double> d_input = head_backward(model.params, sample.head, d_logit, result.gradients);

    std::span<const double> d_q(d_input.data(), static_cast<std::size_t>(2) * hidden);
    std::span<const double> d_a(d_input.data() + 2 * hidden, static_cast<std::size_t>(2) * hidden);
    branch_backward(model.params.question_branch, model.config, sample.q_trace, d_q,
                    result.gradients.question_branch);
    branch_backward(model.params.answer_branch, model.config, sample.a_trace, d_a,
                    result.gradients.answer_branch);
  }
  result.batch_loss = loss(result.probabilities, batch.labels);
  return result;
}

double gradient_check(SiameseRanker& model, const Batch& batch, double step) {
  BackwardResult analytic = backward(model, batch, 0, /*training=*/false);
  auto grad_refs = tensor_refs(analytic.gradients);
  auto param_refs = tensor_refs(model.params);

  double max_rel = 0.0;
  for (std::size_t t = 0; t < param_refs.size(); ++t) {
    std::vector<double>& values = *param_refs[t].values;
    const std::vector<double>& grads = *grad_refs[t].values;

    // Check the largest-magnitude coordinates of each tensor: a systematic
    // gradient bug corrupts those first, while coordinates whose true
    // gradient sits at a zero crossing carry nothing but rounding noise in
    // the central difference.
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > 20) {
      std::sort(coords.begin(), coords.end(), [&](std::size_t a, std::size_t b) {
        double ga = std::abs(grads[a]), gb = std::abs(grads[b]);
        if (ga != gb) return ga > gb;
        return a < b;
      });
      coords.resize(20);
    }

    for (std::size_t c : coords) {
      double original = values[c];
      values[c] = original + step;
      double lp = loss(forward(model, batch, false, 0), batch.labels);
      values[c] = original - step;
      double lm = loss(forward(model, batch, false, 0), batch.labels);
      values[c] = original;

      double numeric = (lp - lm) / (2.0 * step);
      double rel = std::abs(grads[c] - numeric) /
                   std::max({std::abs(grads[c]), std::abs(numeric), 1e-12});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

AdamState make_adam_state(const SiameseRanker& model) {
  AdamState state;
  state.m = zero_like(model.params);
  state.v = zero_like(model.params);
  return state;
}

void adam_step(SiameseRanker& model, ParameterSet& gradients, AdamState& state,
               double learning_rate) {
  auto params = tensor_refs(model.params);
  auto grads = tensor_refs(gradients);
  auto ms = tensor_refs(state.m);
  auto vs = tensor_refs(state.v);
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: tensor count mismatch");

  ++state.step;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    std::vector<double>& p = *params[t].values;
    const std::vector<double>& g = *grads[t].values;
    std::vector<double>& m = *ms[t].values;
    std::vector<double>& v = *vs[t].values;
    if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
      throw std::invalid_argument("adam_step: shape mismatch on " + params[t].name);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      double m_hat = m[i] / bc1;
      double v_hat = v[i] / bc2;
      p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

std::vector<double> train(SiameseRanker& model, const TrainingSet& data,
                          const ModelConfig& config) {
  std::size_t n = data.labels.size();
  if (n == 0) throw std::invalid_argument("train: empty training data");
  if (data.question_seqs.size() != n || data.answer_seqs.size() != n) {
    throw std::invalid_argument("train: training lists must share one length");
  }

  AdamState state = make_adam_state(model);
  Rng shuffle_rng(fan_seed(config.seed, "train-shuffle"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> trace;
  std::uint64_t batch_counter = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      Batch batch;
      for (std::size_t k = start; k < end; ++k) {
        std::size_t idx = order[k];
        batch.question_seqs.push_back(data.question_seqs[idx]);
        batch.answer_seqs.push_back(data.answer_seqs[idx]);
        batch.labels.push_back(data.labels[idx]);
      }
      if (config.use_numerical_features) {
        batch.numerical = Matrix(end - start, data.numerical.cols());
        for (std::size_t k = start; k < end; ++k) {
          auto src = data.numerical.row(order[k]);
          std::copy(src.begin(), src.end(), batch.numerical.row(k - start).begin());
        }
      }
      std::uint64_t batch_seed = fan_seed(config.seed, "train-dropout", batch_counter++);
      BackwardResult result = backward(model, batch, batch_seed, /*training=*/true);
      adam_step(model, result.gradients, state, config.learning_rate);
      loss_sum += result.batch_loss * static_cast<double>(batch.size());
    }
    trace.push_back(loss_sum / static_cast<double>(n));
  }
  return trace;
}

namespace {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{{"embedding_dimension", c.embedding_dimension},
              {"max_seq_len", c.max_seq_len},
              {"lstm_hidden", c.lstm_hidden},
              {"lstm_depth", c.lstm_depth},
              {"head_hidden_sizes", c.head_hidden_sizes},
              {"dropout_rate", c.dropout_rate},
              {"dropout_on_single_layer", c.dropout_on_single_layer},
              {"use_numerical_features", c.use_numerical_features},
              {"numerical_feature_count", c.numerical_feature_count},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.embedding_dimension = j.at("embedding_dimension").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.lstm_hidden = j.at("lstm_hidden").get<int>();
  c.lstm_depth = j.at("lstm_depth").get<int>();
  c.head_hidden_sizes = j.at("head_hidden_sizes").get<std::vector<int>>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.dropout_on_single_layer = j.at("dropout_on_single_layer").get<bool>();
  c.use_numerical_features = j.at("use_numerical_features").get<bool>();
  c.numerical_feature_count = j.at("numerical_feature_count").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string save_checkpoint(const SiameseRanker& model) {
  json doc;
  doc["format_version"] = 1;
  doc["config"] = config_to_json(model.config);
  json tensors = json::array();
  auto refs = tensor_refs(const_cast<ParameterSet&>(model.params));
  for (const auto& ref : refs) {
    tensors.push_back({{"name", ref.name}, {"values", *ref.values}});
  }
  doc["tensors"] = std::move(tensors);
  return doc.dump();
}

SiameseRanker load_checkpoint(const std::string& json_text,
                              std::shared_ptr<const vectorize::EmbeddingTable> embeddings) {
  json doc = json::parse(json_text);
  if (doc.at("format_version").get<int>() != 1) {
    throw std::runtime_error("unsupported checkpoint format version");
  }
  ModelConfig config = config_from_json(doc.at("config"));
  SiameseRanker model = init_model(config, std::move(embeddings), config.seed);

  auto refs = tensor_refs(model.params);
  const json& tensors = doc.at("tensors");
  if (tensors.size() != refs.size()) throw std::runtime_error("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const json& t = tensors[i];
    if (t.at("name").get<std::string>() != refs[i].name) {
      throw std::runtime_error("checkpoint tensor order mismatch at " + refs[i].name);
    }
    auto values = t.at("values").get<std::vector<double>>();
    if (values.size() != refs[i].values->size()) {
      throw std::runtime_error("checkpoint shape mismatch at " + refs[i].name);
    }
    *refs[i].values = std::move(values);
  }
  return model;
}

}  // namespace cqarank::neural
