#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "memrouter/contextualizer.hpp"
#include "memrouter/corpus.hpp"
#include "memrouter/embedding.hpp"
#include "memrouter/nn.hpp"

namespace memrouter {

/// Input embedding width d, projection hidden width h, backbone width d'.
struct RouterDims {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t model = 0;

  /// Trainable scalars: projection, layer-norm affine and both heads.
  std::size_t parameter_count() const noexcept;
  std::size_t projection_count() const noexcept;
  std::size_t head_count() const noexcept;
  bool operator==(const RouterDims&) const = default;
};

inline constexpr std::size_t kNumOps = 2;  // index 0 = ADD, 1 = NOOP

/// Trainable router weights. Row-vector convention: a chunk embedding e (1 x d)
/// maps to GELU(LayerNorm(e W1 + b1)) W2 + b2.
struct RouterParams {
  RouterDims dims;
  Matrix w1;       // d x h
  Matrix b1;       // 1 x h
  Matrix ln_gain;  // 1 x h
  Matrix ln_bias;  // 1 x h
  Matrix w2;       // h x d'
  Matrix b2;       // 1 x d'
  Matrix w_op;     // d' x 2
  Matrix b_op;     // 1 x 2
  Matrix w_type;   // d' x 5
  Matrix b_type;   // 1 x 5

  static constexpr std::size_t kNumTensors = 10;

  /// All-zero weights with unit layer-norm gain.
  static RouterParams zeros(const RouterDims& dims);
  /// Glorot-uniform matrices, zero biases, unit gain, zero shift.
  static RouterParams initialize(const RouterDims& dims, std::uint64_t seed);

  /// Tensors in checkpoint field order.
  std::array<Matrix*, kNumTensors> tensors();
  std::array<const Matrix*, kNumTensors> tensors() const;
  static std::array<const char*, kNumTensors> tensor_names();

  bool all_finite() const;
  /// Snaps every entry to the nearest float32 so the checkpoint is exact.
  void round_to_float();
  bool operator==(const RouterParams& other) const;
};

std::size_t parameter_count(const RouterParams& params);

/// Per-row intermediate values kept for backpropagation.
struct ProjectionTrace {
  Matrix input;      // L x d
  Matrix normed;     // L x h, before gain/shift
  Vector rstd;       // L
  Matrix pre_gelu;   // L x h
  Matrix activated;  // L x h
};

/// Row-wise projection of an L x d embedding matrix into L x d'.
Matrix project(const RouterParams& params, const Matrix& embeddings,
               ProjectionTrace* trace = nullptr);

struct RouterDecision {
  Op op = Op::Noop;
  std::array<double, kNumOps> op_probs{};
  ContentType content_type = ContentType::KeyFacts;
  std::array<double, kNumContentTypes> type_probs{};
  double add_score = 0.0;
};

struct HeadLogits {
  RowVector op;
  RowVector type;
};

HeadLogits head_logits(const RouterParams& params, const RowVector& z);

/// Softmax heads on z; ADD iff add_score >= threshold. Content-type ties go to
/// the lowest class index. Throws NumericError on non-finite logits.
RouterDecision classify(const RouterParams& params, const RowVector& z, double threshold = 0.5);

RouterDecision route_embeddings(const RouterParams& params, const Contextualizer& f,
                                const Matrix& embeddings, double threshold = 0.5);

/// The full write-path decision for one turn: chunk, embed, project,
/// contextualize, classify. No text generation happens here.
RouterDecision route_turn(const RouterParams& params, const Contextualizer& f,
                          const EmbeddingProvider& provider, std::span<const Turn* const> history,
                          const Turn& current, double threshold = 0.5);

Matrix to_double(const EmbeddingMatrix& m);

/// `MRRTR1` checkpoint: magic, u32 d, h, d', every tensor as row-major f32 in
/// field order, SHA-256 trailer.
std::vector<std::uint8_t> encode_checkpoint(const RouterParams& params);
RouterParams decode_checkpoint(std::vector<std::uint8_t> bytes,
                               std::string_view what = "checkpoint");
void save_checkpoint(const RouterParams& params, const std::string& path);
RouterParams load_checkpoint(const std::string& path);

}  // namespace memrouter
