#include "memrouter/embedding.hpp"

#include <cmath>
#include <numbers>

#include "json.hpp"
#include "memrouter/digest.hpp"
#include "memrouter/error.hpp"
#include "memrouter/http.hpp"
#include "memrouter/text.hpp"

namespace memrouter {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Uniform in (0, 1].
double unit_open(std::uint64_t& state) {
  return (static_cast<double>(splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
}

void add_token_vector(std::string_view token, std::uint64_t seed, std::vector<double>& acc) {
  std::uint64_t seed_state = seed;
  std::uint64_t state = fnv1a64(token) ^ splitmix64(seed_state);
  const std::size_t d = acc.size();
  std::vector<double> v(d);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < d; i += 2) {
    // Box-Muller on the splitmix stream keeps vectors identical across platforms.
    const double r = std::sqrt(-2.0 * std::log(unit_open(state)));
    const double theta = 2.0 * std::numbers::pi * unit_open(state);
    v[i] = r * std::cos(theta);
    if (i + 1 < d) v[i + 1] = r * std::sin(theta);
  }
  for (double x : v) norm2 += x * x;
  const double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t i = 0; i < d; ++i) acc[i] += v[i] * inv;
}

void check_vector(const Embedding& v, std::size_t dim, const std::string& who) {
  if (v.size() != dim) {
    throw DimensionError(who + ": expected dimension " + std::to_string(dim) + ", got " +
                         std::to_string(v.size()));
  }
  for (float x : v) {
    if (!std::isfinite(x)) throw NumericError(who + ": non-finite embedding component");
  }
}

}  // namespace

std::string render_turn(const Turn& turn) { return turn.speaker + ": " + turn.text; }

ChunkSequence make_chunks(std::span<const Turn* const> history, const Turn& current) {
  const std::size_t keep = std::min(history.size(), kMaxHistoryTurns);
  const auto recent = history.subspan(history.size() - keep);
  ChunkSequence seq;
  // Walk right-to-left in groups of five, then reverse into chronological order.
  std::vector<Chunk> reversed;
  std::size_t end = recent.size();
  while (end > 0) {
    const std::size_t begin = end >= kTurnsPerChunk ? end - kTurnsPerChunk : 0;
    Chunk c;
    for (std::size_t i = begin; i < end; ++i) {
      if (i > begin) c.text += '\n';
      c.text += render_turn(*recent[i]);
    }
    c.first_index = recent[begin]->turn_index;
    c.last_index = recent[end - 1]->turn_index;
    reversed.push_back(std::move(c));
    end = begin;
  }
  seq.chunks.assign(reversed.rbegin(), reversed.rend());
  seq.chunks.push_back(Chunk{render_turn(current), current.turn_index, current.turn_index});
  return seq;
}

ChunkSequence chunks_for_turn(const std::vector<TurnView>& turns, std::size_t index) {
  std::vector<const Turn*> history;
  const std::size_t start = index > kMaxHistoryTurns ? index - kMaxHistoryTurns : 0;
  history.reserve(index - start);
  for (std::size_t i = start; i < index; ++i) history.push_back(turns[i].turn);
  return make_chunks(history, *turns[index].turn);
}

Embedding EmbeddingProvider::embed(std::string_view text) const {
  calls_.fetch_add(1);
  return do_embed(text);
}

std::vector<Embedding> EmbeddingProvider::embed_batch(std::span<const std::string> texts) const {
  calls_.fetch_add(texts.size());
  return do_embed_batch(texts);
}

std::vector<Embedding> EmbeddingProvider::do_embed_batch(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(do_embed(t));
  return out;
}

std::string EmbeddingProvider::state_hash() const { return to_hex(sha256(fingerprint())); }

Embedding hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  auto tokens = whitespace_tokens(text);
  if (tokens.empty()) tokens.emplace_back();
  std::vector<double> acc(dim, 0.0);
  for (const auto& tok : tokens) add_token_vector(tok, seed, acc);
  double norm2 = 0.0;
  for (double x : acc) norm2 += x * x;
  Embedding out(dim);
  if (norm2 == 0.0) {
    // Exact cancellation is practically impossible; fall back to a basis vector.
    out[0] = 1.0f;
    return out;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
  return out;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim < 8) throw DimensionError("stub provider dimension must be >= 8");
}

std::string HashEmbeddingProvider::fingerprint() const {
  return "stub/hash-v1/dim=" + std::to_string(dim_) + "/seed=" + std::to_string(seed_);
}

Embedding HashEmbeddingProvider::do_embed(std::string_view text) const {
  return hash_embed(text, dim_, seed_);
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string endpoint, std::string model,
                                                 std::size_t dim, int timeout_ms)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), dim_(dim),
      timeout_ms_(timeout_ms) {
  if (endpoint_.empty()) throw ProviderError("remote provider requires provider.endpoint");
  if (dim_ == 0) throw DimensionError("remote provider requires provider.dim > 0");
}

std::string RemoteEmbeddingProvider::fingerprint() const {
  return "remote/" + endpoint_ + "/model=" + model_ + "/dim=" + std::to_string(dim_);
}

Embedding RemoteEmbeddingProvider::do_embed(std::string_view text) const {
  std::string t(text);
  return do_embed_batch(std::span(&t, 1)).front();
}

std::vector<Embedding> RemoteEmbeddingProvider::do_embed_batch(
    std::span<const std::string> texts) const {
  using json = nlohmann::json;
  json req{{"model", model_}, {"input", json::array()}};
  for (const auto& t : texts) req["input"].push_back(t);
  auto headers = auth_headers();
  auto res = http_post_json(endpoint_ + "/embeddings", req.dump(), headers,
                            std::chrono::milliseconds(timeout_ms_));
  if (!res.ok()) throw ProviderError("embedding service: " + res.error);
  std::vector<Embedding> out(texts.size());
  try {
    auto body = json::parse(res.body);
    const auto& data = body.at("data");
    if (data.size() != texts.size()) {
      throw ProviderError("embedding service returned " + std::to_string(data.size()) +
                          " vectors for " + std::to_string(texts.size()) + " inputs");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t slot = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
      if (slot >= out.size()) throw ProviderError("embedding service: index out of range");
      out[slot] = data[i].at("embedding").get<Embedding>();
    }
  } catch (const json::exception& e) {
    throw ProviderError(std::string("embedding service: malformed response: ") + e.what());
  }
  for (const auto& v : out) check_vector(v, dim_, "embedding service");
  return out;
}

MemoizingProvider::MemoizingProvider(std::shared_ptr<const EmbeddingProvider> inner)
    : inner_(std::move(inner)) {}

Embedding MemoizingProvider::do_embed(std::string_view text) const {
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_.find(text); it != memo_.end()) return it->second;
  }
  auto v = inner_->embed(text);
  std::lock_guard lock(mu_);
  return memo_.emplace(std::string(text), std::move(v)).first->second;
}

std::shared_ptr<EmbeddingProvider> make_provider(const ProviderConfig& config) {
  if (config.kind == "stub") {
    return std::make_shared<HashEmbeddingProvider>(config.dim, config.seed);
  }
  if (config.kind == "remote") {
    return std::make_shared<RemoteEmbeddingProvider>(config.endpoint, config.model, config.dim,
                                                     config.timeout_ms);
  }
  throw ProviderError("unknown provider.kind '" + config.kind + "'");
}

Embedding embed(const EmbeddingProvider& provider, const Chunk& chunk) {
  auto v = provider.embed(chunk.text);
  check_vector(v, provider.dim(), provider.name());
  return v;
}

EmbeddingMatrix embed_chunks(const EmbeddingProvider& provider, const ChunkSequence& seq) {
  EmbeddingMatrix m(static_cast<Eigen::Index>(seq.size()),
                    static_cast<Eigen::Index>(provider.dim()));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    auto v = embed(provider, seq.chunks[i]);
    m.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXf>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return m;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double{a[i]} * b[i];
    na += double{a[i]} * a[i];
    nb += double{b[i]} * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace memrouter
