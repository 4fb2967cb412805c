#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memrouter/corpus.hpp"

namespace memrouter {

using Embedding = std::vector<float>;
/// L rows of dimension d, one per chunk.
using EmbeddingMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kTurnsPerChunk = 5;
inline constexpr std::size_t kMaxHistoryChunks = 12;
inline constexpr std::size_t kMaxChunks = kMaxHistoryChunks + 1;
inline constexpr std::size_t kMaxHistoryTurns = kTurnsPerChunk * kMaxHistoryChunks;

struct Chunk {
  std::string text;
  std::size_t first_index = 0;
  std::size_t last_index = 0;

  std::size_t span_length() const noexcept { return last_index - first_index + 1; }
};

/// Chronological; the chunk holding the current turn is last.
struct ChunkSequence {
  std::vector<Chunk> chunks;

  std::size_t size() const noexcept { return chunks.size(); }
};

/// `speaker: text`
std::string render_turn(const Turn& turn);

/// History is grouped right-to-left in fives so the most recent history chunk
/// is full and any ragged remainder is the oldest chunk. Only the most recent
/// 60 history turns are kept; the current turn always forms its own chunk.
ChunkSequence make_chunks(std::span<const Turn* const> history, const Turn& current);

/// Chunks for turn `index` of a conversation, using all earlier turns as history.
ChunkSequence chunks_for_turn(const std::vector<TurnView>& turns, std::size_t index);

/// Deterministic text encoder. Implementations must be safe for concurrent calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  /// Configuration string folded into cache digests; changes whenever outputs would.
  virtual std::string fingerprint() const = 0;

  /// Counts one provider invocation per text.
  Embedding embed(std::string_view text) const;
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) const;

  std::uint64_t calls() const noexcept { return calls_.load(); }
  /// Hash of all state that determines outputs.
  std::string state_hash() const;

 protected:
  virtual Embedding do_embed(std::string_view text) const = 0;
  virtual std::vector<Embedding> do_embed_batch(std::span<const std::string> texts) const;

 private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Seeded token-hash encoder: each lowercase whitespace token maps to a
/// pseudo-random unit vector; the text vector is the normalized sum.
Embedding hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  HashEmbeddingProvider(std::size_t dim, std::uint64_t seed);

  std::string name() const override { return "stub"; }
  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;

 protected:
  Embedding do_embed(std::string_view text) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Client for an OpenAI-compatible `POST {endpoint}/embeddings` service.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(std::string endpoint, std::string model, std::size_t dim,
                          int timeout_ms = 30000);

  std::string name() const override { return "remote:" + model_; }
  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;

 protected:
  Embedding do_embed(std::string_view text) const override;
  std::vector<Embedding> do_embed_batch(std::span<const std::string> texts) const override;

 private:
  std::string endpoint_;
  std::string model_;
  std::size_t dim_;
  int timeout_ms_;
};

/// In-memory memoization in front of another provider. Inner calls are only
/// made for texts not seen before.
class MemoizingProvider final : public EmbeddingProvider {
 public:
  explicit MemoizingProvider(std::shared_ptr<const EmbeddingProvider> inner);

  std::string name() const override { return inner_->name(); }
  std::size_t dim() const override { return inner_->dim(); }
  std::string fingerprint() const override { return inner_->fingerprint(); }
  const EmbeddingProvider& inner() const { return *inner_; }

 protected:
  Embedding do_embed(std::string_view text) const override;

 private:
  std::shared_ptr<const EmbeddingProvider> inner_;
  mutable std::mutex mu_;
  mutable std::map<std::string, Embedding, std::less<>> memo_;
};

struct ProviderConfig {
  std::string kind = "stub";  // stub | remote
  std::size_t dim = 256;
  std::uint64_t seed = 42;
  std::string endpoint;
  std::string model;
  int timeout_ms = 30000;
};

std::shared_ptr<EmbeddingProvider> make_provider(const ProviderConfig& config);

/// Embeds one chunk, checking dimension and finiteness.
Embedding embed(const EmbeddingProvider& provider, const Chunk& chunk);
EmbeddingMatrix embed_chunks(const EmbeddingProvider& provider, const ChunkSequence& seq);

double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace memrouter
