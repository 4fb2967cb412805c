#include "memrouter/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "memrouter/error.hpp"
#include "memrouter/rng.hpp"

namespace memrouter {

namespace {

Eigen::Index ix(std::size_t n) { return static_cast<Eigen::Index>(n); }

RouterParams zeros_like(const RouterParams& p) {
  auto g = RouterParams::zeros(p.dims);
  g.ln_gain.setZero();
  return g;
}

struct ExampleTerms {
  double loss;
  RowVector d_op;
  RowVector d_type;
};

ExampleTerms example_terms(const HeadLogits& logits, const TrainExample& ex,
                           const OpWeights& weights) {
  const auto y = static_cast<std::size_t>(ex.y_op);
  const double w = weights[y];
  ExampleTerms t;
  t.loss = w * (log_sum_exp(logits.op) - logits.op(ix(y)));
  t.d_op = softmax(logits.op) * w;
  t.d_op(ix(y)) -= w;
  t.d_type = RowVector::Zero(logits.type.size());
  if (ex.y_op == Op::Add) {
    if (!ex.y_type) throw InvariantError("ADD example '" + ex.turn_id + "' without content type");
    const auto c = static_cast<std::size_t>(*ex.y_type);
    t.loss += log_sum_exp(logits.type) - logits.type(ix(c));
    t.d_type = softmax(logits.type);
    t.d_type(ix(c)) -= 1.0;
  }
  return t;
}

void accumulate(RouterParams& grad, const RouterParams& p, const Contextualizer& f,
                const TrainExample& ex, const OpWeights& weights, double scale, double& loss_sum) {
  ProjectionTrace trace;
  const Matrix h = project(p, ex.embeddings, &trace);
  const Matrix z_all = f.forward(h);
  const RowVector z = z_all.row(z_all.rows() - 1);
  const auto logits = head_logits(p, z);
  auto terms = example_terms(logits, ex, weights);
  loss_sum += terms.loss;
  terms.d_op *= scale;
  terms.d_type *= scale;

  grad.w_op.noalias() += z.transpose() * terms.d_op;
  grad.b_op.row(0) += terms.d_op;
  grad.w_type.noalias() += z.transpose() * terms.d_type;
  grad.b_type.row(0) += terms.d_type;
  const RowVector dz = terms.d_op * p.w_op.transpose() + terms.d_type * p.w_type.transpose();

  Matrix grad_z = Matrix::Zero(h.rows(), h.cols());
  grad_z.row(h.rows() - 1) = dz;
  const Matrix dh = f.backward(h, grad_z);

  grad.w2.noalias() += trace.activated.transpose() * dh;
  grad.b2.row(0) += dh.colwise().sum();
  const Matrix d_act = dh * p.w2.transpose();
  const Matrix d_pre = d_act.cwiseProduct(trace.pre_gelu.unaryExpr([](double v) {
    return gelu_grad(v);
  }));
  grad.ln_gain.row(0) += d_pre.cwiseProduct(trace.normed).colwise().sum();
  grad.ln_bias.row(0) += d_pre.colwise().sum();
  const Matrix d_normed = (d_pre.array().rowwise() * p.ln_gain.row(0).array()).matrix();
  const Matrix d_a = layer_norm_rows_backward(trace.normed, trace.rstd, d_normed);
  grad.w1.noalias() += trace.input.transpose() * d_a;
  grad.b1.row(0) += d_a.colwise().sum();
}

struct AdamState {
  RouterParams m;
  RouterParams v;
  long step = 0;
};

void adam_step(RouterParams& p, const RouterParams& g, AdamState& st, const TrainConfig& cfg) {
  ++st.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  auto pt = p.tensors();
  auto gt = g.tensors();
  auto mt = st.m.tensors();
  auto vt = st.v.tensors();
  for (std::size_t k = 0; k < RouterParams::kNumTensors; ++k) {
    *mt[k] = cfg.beta1 * *mt[k] + (1.0 - cfg.beta1) * *gt[k];
    *vt[k] = cfg.beta2 * *vt[k] + (1.0 - cfg.beta2) * gt[k]->cwiseProduct(*gt[k]);
    const Matrix m_hat = *mt[k] / c1;
    const Matrix v_hat = *vt[k] / c2;
    *pt[k] -= (cfg.learning_rate * m_hat.array() / (v_hat.array().sqrt() + cfg.epsilon)).matrix();
  }
}

}  // namespace

double loss(const RouterParams& p, const Contextualizer& f, std::span<const TrainExample> batch,
            const OpWeights& weights) {
  if (batch.empty()) throw InvariantError("loss: empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    const RowVector z = contextualize(f, project(p, ex.embeddings));
    total += example_terms(head_logits(p, z), ex, weights).loss;
  }
  return total / static_cast<double>(batch.size());
}

RouterParams gradient(const RouterParams& p, const Contextualizer& f,
                      std::span<const TrainExample> batch, const OpWeights& weights,
                      double* loss_out) {
  if (batch.empty()) throw InvariantError("gradient: empty batch");
  auto grad = zeros_like(p);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss_sum = 0.0;
  for (const auto& ex : batch) accumulate(grad, p, f, ex, weights, scale, loss_sum);
  if (!grad.all_finite()) throw NumericError("gradient: non-finite component");
  if (loss_out) *loss_out = loss_sum * scale;
  return grad;
}

OpWeights class_weights(std::span<const TrainExample> examples) {
  std::array<std::size_t, kNumOps> counts{};
  for (const auto& ex : examples) ++counts[static_cast<std::size_t>(ex.y_op)];
  if (counts[0] == 0 || counts[1] == 0) {
    throw InvariantError("class_weights: both ADD and NOOP examples are required");
  }
  const double n = static_cast<double>(examples.size());
  return {n / (2.0 * static_cast<double>(counts[0])), n / (2.0 * static_cast<double>(counts[1]))};
}

double op_accuracy(const RouterParams& p, const Contextualizer& f,
                   std::span<const TrainExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    const RowVector z = contextualize(f, project(p, ex.embeddings));
    const auto logits = head_logits(p, z);
    // argmax with ties to the lowest index, matching classify() at threshold 0.5
    const Op predicted = logits.op(0) >= logits.op(1) ? Op::Add : Op::Noop;
    if (predicted == ex.y_op) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrainResult train(RouterParams init, const Contextualizer& f,
                  std::span<const TrainExample> train_set,
                  std::span<const TrainExample> validation_set, const TrainConfig& config) {
  if (config.epochs < 1) throw InvariantError("train: epochs must be >= 1");
  if (config.learning_rate < 0.0) throw InvariantError("train: learning_rate must be >= 0");
  if (config.batch_size == 0) throw InvariantError("train: batch_size must be >= 1");
  if (train_set.empty()) throw InvariantError("train: empty training set");

  TrainResult result{init, {}};
  auto& hist = result.history;
  hist.op_weights = config.op_class_weights ? *config.op_class_weights : class_weights(train_set);
  for (auto w : hist.op_weights) {
    if (!(w > 0.0)) throw InvariantError("train: class weights must be positive");
  }
  for (const auto& ex : train_set) hist.train_conversations.insert(ex.conversation_id);
  for (const auto& ex : validation_set) hist.validation_conversations.insert(ex.conversation_id);

  RouterParams params = std::move(init);
  AdamState adam{zeros_like(params), zeros_like(params), 0};
  hist.train_loss.push_back(loss(params, f, train_set, hist.op_weights));
  hist.validation_accuracy.push_back(op_accuracy(params, f, validation_set));

  std::vector<std::size_t> order(train_set.size());
  std::vector<TrainExample> batch;
  double best_acc = -1.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, "epoch-" + std::to_string(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train_set[order[i]]);
      const auto grad = gradient(params, f, batch, hist.op_weights);
      if (config.learning_rate > 0.0) adam_step(params, grad, adam, config);
    }
    hist.train_loss.push_back(loss(params, f, train_set, hist.op_weights));
    const double acc = op_accuracy(params, f, validation_set);
    hist.validation_accuracy.push_back(acc);
    if (acc > best_acc || validation_set.empty()) {
      best_acc = acc;
      hist.selected_epoch = epoch;
      result.params = params;
    }
  }
  result.params.round_to_float();
  return result;
}

std::vector<TrainExample> build_examples(std::span<const Conversation* const> conversations,
                                         const LabelSet& labels, const EmbeddingCache& cache,
                                         const EmbeddingProvider& provider,
                                         bool current_chunk_only) {
  std::vector<TrainExample> out;
  for (const auto* conv : conversations) {
    const auto turns = conv->turns();
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const auto* rec = labels.find(conv->conversation_id, turns[i].turn->turn_id);
      if (!rec) continue;
      auto seq = chunks_for_turn(turns, i);
      if (current_chunk_only) seq.chunks.erase(seq.chunks.begin(), seq.chunks.end() - 1);
      TrainExample ex;
      ex.embeddings = to_double(lookup_chunks(cache, provider, seq));
      ex.y_op = rec->op;
      ex.y_type = rec->content_type;
      ex.conversation_id = conv->conversation_id;
      ex.turn_id = rec->turn_id;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

void assert_no_test_labels(const LabelSet& labels, const Split& split) {
  for (const auto& [key, rec] : labels) {
    if (split.is_test(rec.conversation_id)) {
      throw LeakageError("label for turn '" + rec.turn_id + "' belongs to test conversation '" +
                         rec.conversation_id + "'");
    }
  }
}

TrainResult train_router(const LabelSet& labels, const Split& split, const EmbeddingCache& cache,
                         const EmbeddingProvider& provider, const Contextualizer& f,
                         const RouterDims& dims, const TrainConfig& config,
                         bool current_chunk_only) {
  assert_no_test_labels(labels, split);
  if (cache.dim() != dims.input) {
    throw DimensionError("train: cache dimension " + std::to_string(cache.dim()) +
                         " does not match router input " + std::to_string(dims.input));
  }
  if (f.dim() != dims.model) throw DimensionError("train: contextualizer width mismatch");
  auto train_set = build_examples(split.train, labels, cache, provider, current_chunk_only);
  auto val_set = build_examples(split.validation, labels, cache, provider, current_chunk_only);
  auto init = RouterParams::initialize(dims, derive_seed(config.seed, "init"));
  auto result = train(std::move(init), f, train_set, val_set, config);
  for (const auto& id : result.history.train_conversations) {
    if (split.is_test(id)) throw LeakageError("test conversation '" + id + "' used in training");
  }
  for (const auto& id : result.history.validation_conversations) {
    if (split.is_test(id)) throw LeakageError("test conversation '" + id + "' used in selection");
  }
  return result;
}

std::string training_report(const TrainHistory& h, const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  j["op_class_weights"] = {{"ADD", h.op_weights[0]}, {"NOOP", h.op_weights[1]}};
  j["train_loss"] = h.train_loss;
  j["validation_accuracy"] = h.validation_accuracy;
  j["selected_epoch"] = h.selected_epoch;
  j["train_conversations"] = h.train_conversations;
  j["validation_conversations"] = h.validation_conversations;
  return j.dump(2);
}

}  // namespace memrouter
