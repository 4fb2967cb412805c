#pragma once

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "memrouter/cache.hpp"
#include "memrouter/contextualizer.hpp"
#include "memrouter/corpus.hpp"
#include "memrouter/router.hpp"

namespace memrouter {

struct TrainExample {
  Matrix embeddings;  // L x d, from the cache
  Op y_op = Op::Noop;
  std::optional<ContentType> y_type;  // present iff y_op == ADD
  std::string conversation_id;
  std::string turn_id;
};

/// Per-class weight for the operation loss, indexed like Op (ADD, NOOP).
using OpWeights = std::array<double, kNumOps>;

struct TrainConfig {
  int epochs = 5;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::optional<OpWeights> op_class_weights;  // default: inverse frequency
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Mean over the batch of w(y_op) * CE(op) + [y_op = ADD] * CE(type).
double loss(const RouterParams& params, const Contextualizer& f,
            std::span<const TrainExample> batch, const OpWeights& weights);

/// Analytic gradient of `loss` for every RouterParams tensor. The
/// contextualizer only supplies its vector-Jacobian product.
RouterParams gradient(const RouterParams& params, const Contextualizer& f,
                      std::span<const TrainExample> batch, const OpWeights& weights,
                      double* loss_out = nullptr);

/// weight(c) = N / (2 * count(c)). Throws if either class is absent.
OpWeights class_weights(std::span<const TrainExample> examples);

/// Fraction of examples whose argmax op matches the label.
double op_accuracy(const RouterParams& params, const Contextualizer& f,
                   std::span<const TrainExample> examples);

struct TrainHistory {
  /// Full-train-set loss; entry 0 is before the first update.
  std::vector<double> train_loss;
  /// Validation op-accuracy; entry 0 is before the first update.
  std::vector<double> validation_accuracy;
  int selected_epoch = 0;
  OpWeights op_weights{1.0, 1.0};
  /// Conversations whose examples were read for updates / for selection.
  std::set<std::string> train_conversations;
  std::set<std::string> validation_conversations;
};

struct TrainResult {
  RouterParams params;
  TrainHistory history;
};

/// Bias-corrected moment optimizer over seeded per-epoch shuffles; returns the
/// epoch with best validation op-accuracy (earliest on ties), rounded to f32.
TrainResult train(RouterParams init, const Contextualizer& f,
                  std::span<const TrainExample> train_set,
                  std::span<const TrainExample> validation_set, const TrainConfig& config);

/// Labeled examples for the given conversations. `current_chunk_only` keeps
/// just the last chunk row (the MLP-only baseline input).
std::vector<TrainExample> build_examples(std::span<const Conversation* const> conversations,
                                         const LabelSet& labels, const EmbeddingCache& cache,
                                         const EmbeddingProvider& provider,
                                         bool current_chunk_only = false);

/// Throws LeakageError if any label belongs to a test conversation.
void assert_no_test_labels(const LabelSet& labels, const Split& split);

/// End-to-end supervised training on the train split with validation-based
/// model selection.
TrainResult train_router(const LabelSet& labels, const Split& split, const EmbeddingCache& cache,
                         const EmbeddingProvider& provider, const Contextualizer& f,
                         const RouterDims& dims, const TrainConfig& config,
                         bool current_chunk_only = false);

std::string training_report(const TrainHistory& history, const TrainConfig& config);

}  // namespace memrouter
