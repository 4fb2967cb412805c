#include "memrouter/cache.hpp"

#include <filesystem>

#include "memrouter/error.hpp"

namespace memrouter {

namespace {
constexpr std::string_view kMagic = "MREMB1";

std::string key_string(const Digest16& d) {
  return std::string(reinterpret_cast<const char*>(d.data()), d.size());
}
}  // namespace

bool EmbeddingCache::add(const Digest16& key, std::span<const float> row) {
  if (row.size() != dim_) {
    throw DimensionError("cache row has dimension " + std::to_string(row.size()) +
                         ", cache expects " + std::to_string(dim_));
  }
  auto [it, fresh] = index_.emplace(key_string(key), keys_.size());
  if (!fresh) return false;
  keys_.push_back(key);
  data_.insert(data_.end(), row.begin(), row.end());
  return true;
}

std::optional<std::span<const float>> EmbeddingCache::find(const Digest16& key) const {
  auto it = index_.find(key_string(key));
  if (it == index_.end()) return std::nullopt;
  return row(it->second);
}

std::span<const float> EmbeddingCache::row(std::size_t i) const {
  return std::span<const float>(data_).subspan(i * dim_, dim_);
}

std::vector<std::uint8_t> EmbeddingCache::encode() const {
  ByteWriter w;
  w.put_magic(kMagic);
  w.put_u32(static_cast<std::uint32_t>(keys_.size()));
  w.put_u32(static_cast<std::uint32_t>(dim_));
  for (float x : data_) w.put_f32(x);
  for (const auto& k : keys_) w.put_bytes(k);
  w.seal();
  return w.bytes();
}

EmbeddingCache EmbeddingCache::decode(std::vector<std::uint8_t> bytes, std::string_view what) {
  ByteReader r(std::move(bytes), what);
  r.expect_magic(kMagic);
  const auto count = r.get_u32();
  const auto dim = r.get_u32();
  EmbeddingCache cache(dim);
  std::vector<float> data(static_cast<std::size_t>(count) * dim);
  for (auto& x : data) x = r.get_f32();
  for (std::uint32_t i = 0; i < count; ++i) {
    Digest16 k{};
    r.get_bytes(k);
    if (!cache.add(k, std::span<const float>(data).subspan(std::size_t{i} * dim, dim))) {
      throw ParseError(std::string(what), "duplicate row digest " + to_hex(k));
    }
  }
  if (!r.at_end()) throw ParseError(std::string(what), "trailing bytes before checksum");
  return cache;
}

void EmbeddingCache::save(const std::string& path) const { write_file_bytes(path, encode()); }

EmbeddingCache EmbeddingCache::load(const std::string& path) {
  return decode(read_file_bytes(path), path);
}

Digest16 chunk_digest(const EmbeddingProvider& provider, std::string_view text) {
  std::string payload = provider.fingerprint();
  payload.push_back('\0');
  payload.append(text);
  return digest16(payload);
}

EmbeddingCache precompute_cache(const Corpus& corpus, const EmbeddingProvider& provider,
                                const std::string& cache_path, CacheStats* stats) {
  CacheStats local;
  std::optional<EmbeddingCache> previous;
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
    try {
      previous = EmbeddingCache::load(cache_path);
      if (previous->dim() != provider.dim()) {
        previous.reset();
        local.rebuilt = true;
      }
    } catch (const Error&) {
      local.rebuilt = true;
    }
  }

  // Distinct chunk texts in first-appearance order; rows land in that order
  // whether they were reused or freshly embedded.
  struct Entry {
    Digest16 key;
    std::string text;
    std::optional<std::vector<float>> row;
  };
  std::vector<Entry> entries;
  std::unordered_map<std::string, bool> seen;
  for (const auto& conv : corpus) {
    auto turns = conv.turns();
    for (std::size_t i = 0; i < turns.size(); ++i) {
      for (auto& chunk : chunks_for_turn(turns, i).chunks) {
        auto key = chunk_digest(provider, chunk.text);
        auto ks = key_string(key);
        if (seen.contains(ks)) continue;
        seen.emplace(std::move(ks), true);
        Entry e{key, std::move(chunk.text), std::nullopt};
        if (previous) {
          if (auto row = previous->find(key)) {
            e.row.emplace(row->begin(), row->end());
            ++local.reused;
          }
        }
        entries.push_back(std::move(e));
      }
    }
  }
  local.distinct_chunks = entries.size();
  if (previous && local.reused == 0 && !entries.empty()) local.rebuilt = true;
  EmbeddingCache cache(provider.dim());
  for (auto& e : entries) {
    if (!e.row) {
      e.row = embed(provider, Chunk{e.text, 0, 0});
      ++local.embedded;
    }
    cache.add(e.key, *e.row);
  }
  if (!cache_path.empty()) cache.save(cache_path);
  if (stats) *stats = local;
  return cache;
}

EmbeddingMatrix lookup_chunks(const EmbeddingCache& cache, const EmbeddingProvider& provider,
                              const ChunkSequence& seq) {
  EmbeddingMatrix m(static_cast<Eigen::Index>(seq.size()),
                    static_cast<Eigen::Index>(cache.dim()));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    auto row = cache.find(chunk_digest(provider, seq.chunks[i].text));
    if (!row) throw Error("embedding cache miss for chunk ending at turn " +
                          std::to_string(seq.chunks[i].last_index));
    for (std::size_t j = 0; j < cache.dim(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*row)[j];
    }
  }
  return m;
}

}  // namespace memrouter
