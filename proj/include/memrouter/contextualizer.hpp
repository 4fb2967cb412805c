#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "memrouter/nn.hpp"

namespace memrouter {

/// Frozen sequence-to-sequence map over an unpadded L x d' chunk sequence.
/// Parameters never change after construction. `backward` is the
/// vector-Jacobian product used to train the projection through it.
class Contextualizer {
 public:
  virtual ~Contextualizer() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Matrix forward(const Matrix& h) const = 0;
  virtual Matrix backward(const Matrix& h, const Matrix& grad_out) const = 0;
  /// SHA-256 over configuration and every parameter byte.
  virtual std::string state_hash() const = 0;
};

class IdentityContextualizer final : public Contextualizer {
 public:
  explicit IdentityContextualizer(std::size_t dim) : dim_(dim) {}

  std::string name() const override { return "identity"; }
  std::size_t dim() const override { return dim_; }
  Matrix forward(const Matrix& h) const override { return h; }
  Matrix backward(const Matrix&, const Matrix& grad_out) const override { return grad_out; }
  std::string state_hash() const override;

 private:
  std::size_t dim_;
};

/// Seeded stand-in for a frozen transformer body. Each block computes
///   U = X + CausalMean(X) * A + c,   X' = LayerNorm(U)
/// where row i of CausalMean(X) is the mean of rows 0..i, A is a fixed
/// d' x d' matrix drawn uniformly from +-sqrt(3/d') and c a fixed bias drawn
/// from +-0.1. The layer norm has no affine terms.
class MixerContextualizer final : public Contextualizer {
 public:
  struct Block {
    Matrix mix;     // d' x d'
    RowVector bias;  // 1 x d'
  };

  MixerContextualizer(std::size_t dim, std::uint64_t seed, std::size_t blocks = 2);

  std::string name() const override { return "mixer"; }
  std::size_t dim() const override { return dim_; }
  Matrix forward(const Matrix& h) const override;
  Matrix backward(const Matrix& h, const Matrix& grad_out) const override;
  std::string state_hash() const override;

  const std::vector<Block>& blocks() const noexcept { return blocks_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<Block> blocks_;
};

/// Client for a hosted backbone exposing `POST {endpoint}/forward` and
/// `POST {endpoint}/vjp` with JSON bodies {"inputs": [[...]...]} and
/// {"inputs": ..., "grad_outputs": ...}; both answer {"outputs": [[...]...]}.
class RemoteContextualizer final : public Contextualizer {
 public:
  RemoteContextualizer(std::string endpoint, std::size_t dim, int timeout_ms = 60000);

  std::string name() const override { return "remote"; }
  std::size_t dim() const override { return dim_; }
  Matrix forward(const Matrix& h) const override;
  Matrix backward(const Matrix& h, const Matrix& grad_out) const override;
  std::string state_hash() const override;

 private:
  Matrix call(const std::string& path, const Matrix& inputs, const Matrix* grads) const;

  std::string endpoint_;
  std::size_t dim_;
  int timeout_ms_;
};

struct ContextualizerConfig {
  std::string kind = "mixer";  // identity | mixer | remote
  std::uint64_t seed = 1234;
  std::size_t blocks = 2;
  std::string endpoint;
  int timeout_ms = 60000;
};

std::shared_ptr<Contextualizer> make_contextualizer(const ContextualizerConfig& config,
                                                    std::size_t dim);

/// Last row of F(h): the representation of the current-turn chunk.
RowVector contextualize(const Contextualizer& f, const Matrix& h);

}  // namespace memrouter
