#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memrouter/digest.hpp"
#include "memrouter/embedding.hpp"

namespace memrouter {

/// Content-addressed embedding rows persisted in the `MREMB1` binary format:
/// magic, u32 count, u32 dim, count*dim f32 row-major, count 16-byte digests,
/// then a SHA-256 over everything before it. All integers little-endian.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return keys_.size(); }

  /// Returns false if the digest is already present.
  bool add(const Digest16& key, std::span<const float> row);
  std::optional<std::span<const float>> find(const Digest16& key) const;

  const Digest16& key(std::size_t i) const { return keys_[i]; }
  std::span<const float> row(std::size_t i) const;

  std::vector<std::uint8_t> encode() const;
  static EmbeddingCache decode(std::vector<std::uint8_t> bytes, std::string_view what = "cache");
  void save(const std::string& path) const;
  static EmbeddingCache load(const std::string& path);

 private:
  std::size_t dim_;
  std::vector<Digest16> keys_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Digest of a chunk text under a specific provider configuration.
Digest16 chunk_digest(const EmbeddingProvider& provider, std::string_view text);

struct CacheStats {
  std::size_t distinct_chunks = 0;
  std::size_t reused = 0;
  std::size_t embedded = 0;
  bool rebuilt = false;  // existing file unusable (checksum, dim or provider change)
};

/// Embeds every distinct chunk text of every turn exactly once, reusing rows
/// from an existing cache at `cache_path` whose digests still match. The
/// resulting cache (only rows for this corpus) is written back.
EmbeddingCache precompute_cache(const Corpus& corpus, const EmbeddingProvider& provider,
                                const std::string& cache_path, CacheStats* stats = nullptr);

/// Assembles the L x d matrix for a chunk sequence from the cache.
EmbeddingMatrix lookup_chunks(const EmbeddingCache& cache, const EmbeddingProvider& provider,
                              const ChunkSequence& seq);

}  // namespace memrouter
