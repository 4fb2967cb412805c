#include "memrouter/memstore.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <mutex>
#include "json.hpp"
#include <sstream>

#include "memrouter/cache.hpp"
#include "memrouter/error.hpp"
#include "memrouter/text.hpp"

namespace memrouter {

namespace {
constexpr std::array<std::string_view, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};
constexpr std::array<std::string_view, 5> kTemporalWords = {"when", "date", "day", "year",
                                                            "how long"};

Digest16 record_digest(const EmbeddingProvider& provider, std::string_view line) {
  std::string payload = provider.fingerprint();
  payload.push_back('\0');
  payload.append(line);
  return digest16(payload);
}
}  // namespace

std::string MemoryItem::searchable() const {
  return "[" + timestamp.str() + "] " + speaker + ": " + text;
}

bool has_temporal_cue(std::string_view question) {
  for (auto m : kMonths) {
    if (contains_word(question, m)) return true;
  }
  for (auto w : kTemporalWords) {
    if (contains_word(question, w)) return true;
  }
  for (const auto& tok : alnum_tokens(question)) {
    if (tok.size() == 4 && is_all_digits(tok)) return true;
  }
  return false;
}

std::optional<std::string> mentioned_speaker(std::string_view question,
                                             std::span<const std::string> speakers) {
  std::optional<std::string> best;
  std::size_t best_pos = std::string::npos;
  for (const auto& s : speakers) {
    const auto pos = find_word(question, s);
    if (pos < best_pos) {
      best_pos = pos;
      best = s;
    }
  }
  return best;
}

Query Query::from_text(std::string text, Category category,
                       std::span<const std::string> speakers) {
  Query q;
  q.mentioned_speaker = memrouter::mentioned_speaker(text, speakers);
  q.has_temporal_cue = memrouter::has_temporal_cue(text);
  q.text = std::move(text);
  q.category = category;
  return q;
}

Boosts apply_boosts(const Query& query, const MemoryItem& item, double base,
                    const RetrievalConfig& config) {
  Boosts b;
  if (query.mentioned_speaker && to_lower(*query.mentioned_speaker) == to_lower(item.speaker)) {
    b.speaker = query.category == Category::OpenDomain ? config.open_domain_speaker_boost
                                                       : config.speaker_boost;
  }
  if (query.has_temporal_cue) b.temporal = config.temporal_boost;
  b.final_score = base * b.speaker * b.temporal;
  return b;
}

std::vector<double> min_max_normalize(std::span<const double> raw) {
  std::vector<double> out(raw.size(), 1.0);
  if (raw.empty()) return out;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *lo) / range;
  return out;
}

bool rank_before(const ScoredMemory& a, const ScoredMemory& b) {
  if (a.final_score != b.final_score) return a.final_score > b.final_score;
  if (a.item->timestamp != b.item->timestamp) return a.item->timestamp < b.item->timestamp;
  return a.item->turn_id < b.item->turn_id;
}

std::vector<ScoredMemory> select_diverse(std::vector<ScoredMemory> ranked, std::size_t k,
                                         std::size_t session_cap) {
  std::vector<ScoredMemory> out;
  std::unordered_map<std::string, std::size_t> per_session;
  for (auto& s : ranked) {
    if (out.size() >= k) break;
    if (session_cap > 0) {
      auto& n = per_session[s.item->session_id];
      if (n >= session_cap) continue;
      ++n;
    }
    out.push_back(s);
  }
  return out;
}

MemoryStore::MemoryStore(std::shared_ptr<const EmbeddingProvider> provider, Bm25Params bm25)
    : provider_(std::move(provider)), bm25_params_(bm25), bm25_(bm25) {
  if (!provider_) throw InvariantError("memory store needs an embedding provider");
}

const MemoryItem& MemoryStore::admit(const Turn& turn, const Session& session,
                                     std::optional<ContentType> content_type) {
  MemoryItem item;
  item.turn_id = turn.turn_id;
  item.session_id = session.session_id;
  item.timestamp = session.datetime;
  item.speaker = turn.speaker;
  item.text = turn.text;
  item.content_type = content_type;
  item.turn_index = turn.turn_index;
  if (contains(item.turn_id)) {
    throw InvariantError("turn '" + item.turn_id + "' is already in the memory store");
  }
  item.embedding = embed(*provider_, Chunk{item.searchable(), turn.turn_index, turn.turn_index});
  return insert(std::move(item));
}

const MemoryItem& MemoryStore::insert(MemoryItem item) {
  if (item.embedding.size() != provider_->dim()) {
    throw DimensionError("memory item '" + item.turn_id + "' has embedding dimension " +
                         std::to_string(item.embedding.size()));
  }
  const auto tokens = alnum_tokens(item.searchable());
  auto owned = std::make_unique<MemoryItem>(std::move(item));
  std::unique_lock lock(*mu_);
  if (by_turn_.contains(owned->turn_id)) {
    throw InvariantError("turn '" + owned->turn_id + "' is already in the memory store");
  }
  by_turn_.emplace(owned->turn_id, items_.size());
  bm25_.add(tokens);
  items_.push_back(std::move(owned));
  return *items_.back();
}

std::size_t MemoryStore::size() const {
  std::shared_lock lock(*mu_);
  return items_.size();
}

bool MemoryStore::contains(std::string_view turn_id) const {
  std::shared_lock lock(*mu_);
  return by_turn_.contains(std::string(turn_id));
}

const MemoryItem& MemoryStore::item(std::size_t i) const {
  std::shared_lock lock(*mu_);
  return *items_.at(i);
}

std::vector<const MemoryItem*> MemoryStore::items() const {
  std::shared_lock lock(*mu_);
  std::vector<const MemoryItem*> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.get());
  return out;
}

std::vector<ScoredMemory> MemoryStore::score_all(const Query& query,
                                                 const RetrievalConfig& config) const {
  const Embedding q = provider_->embed(query.text);
  const auto q_tokens = alnum_tokens(query.text);

  std::shared_lock lock(*mu_);
  const std::size_t n = items_.size();
  std::vector<double> dense(n), sparse(n);
  for (std::size_t i = 0; i < n; ++i) {
    dense[i] = cosine(q, items_[i]->embedding);
    sparse[i] = bm25(q_tokens, bm25_.doc(i), bm25_.stats(), config.bm25);
  }
  const auto dn = min_max_normalize(dense);
  const auto sn = min_max_normalize(sparse);
  std::vector<ScoredMemory> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = out[i];
    s.item = items_[i].get();
    s.dense = dense[i];
    s.sparse = sparse[i];
    s.dense_norm = dn[i];
    s.sparse_norm = sn[i];
    s.base_score = config.lambda * dn[i] + (1.0 - config.lambda) * sn[i];
    const auto b = apply_boosts(query, *s.item, s.base_score, config);
    s.speaker_multiplier = b.speaker;
    s.temporal_multiplier = b.temporal;
    s.final_score = b.final_score;
  }
  return out;
}

std::vector<ScoredMemory> MemoryStore::hybrid_rank(const Query& query,
                                                   const RetrievalConfig& config) const {
  auto scored = score_all(query, config);
  std::sort(scored.begin(), scored.end(), rank_before);
  return select_diverse(std::move(scored), config.k, config.session_cap);
}

std::string store_record(const MemoryItem& item) {
  nlohmann::ordered_json j;
  j["turn_id"] = item.turn_id;
  j["session_id"] = item.session_id;
  j["timestamp"] = item.timestamp.str();
  j["speaker"] = item.speaker;
  j["text"] = item.text;
  if (item.content_type) {
    j["content_type"] = std::string(to_string(*item.content_type));
  } else {
    j["content_type"] = nullptr;
  }
  j["turn_index"] = item.turn_index;
  return j.dump();
}

std::string sidecar_path(const std::string& store_path) { return store_path + ".emb"; }

void MemoryStore::persist(const std::string& path) const {
  std::shared_lock lock(*mu_);
  std::string jsonl;
  EmbeddingCache emb(provider_->dim());
  for (const auto& it : items_) {
    const auto line = store_record(*it);
    jsonl += line;
    jsonl += '\n';
    emb.add(record_digest(*provider_, line), it->embedding);
  }
  emb.save(sidecar_path(path));
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(jsonl.data()),
                                   jsonl.size()));
}

MemoryStore MemoryStore::load(const std::string& path,
                              std::shared_ptr<const EmbeddingProvider> provider) {
  MemoryStore store(provider);
  const auto emb = EmbeddingCache::load(sidecar_path(path));
  if (emb.dim() != provider->dim()) {
    throw DimensionError(path + ": sidecar dimension " + std::to_string(emb.dim()) +
                         " does not match provider dimension " + std::to_string(provider->dim()));
  }
  const auto bytes = read_file_bytes(path);
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!text.empty() && text.back() != '\n') {
    throw ChecksumError(path + ": store file is truncated (no final newline)");
  }
  std::size_t row = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    const auto line = text.substr(start, end - start);
    start = end + 1;
    const std::string where = path + ":" + std::to_string(row + 1);
    if (row >= emb.size()) throw ChecksumError(where + ": more records than sidecar rows");
    if (record_digest(*provider, line) != emb.key(row)) {
      throw ChecksumError(where + ": record does not match its sidecar digest");
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where, e.what());
    }
    MemoryItem item;
    try {
      item.turn_id = j.at("turn_id").get<std::string>();
      item.session_id = j.at("session_id").get<std::string>();
      auto ts = DateTime::parse(j.at("timestamp").get<std::string>());
      if (!ts) throw ParseError(where + ".timestamp", "bad datetime");
      item.timestamp = *ts;
      item.speaker = j.at("speaker").get<std::string>();
      item.text = j.at("text").get<std::string>();
      if (!j.at("content_type").is_null()) {
        auto ct = parse_content_type(j["content_type"].get<std::string>());
        if (!ct) throw ParseError(where + ".content_type", "unknown content type");
        item.content_type = ct;
      }
      item.turn_index = j.value("turn_index", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where, e.what());
    }
    const auto r = emb.row(row);
    item.embedding.assign(r.begin(), r.end());
    store.insert(std::move(item));
    ++row;
  }
  if (row != emb.size()) {
    throw ChecksumError(path + ": " + std::to_string(row) + " records but sidecar holds " +
                        std::to_string(emb.size()) + " rows");
  }
  return store;
}

}  // namespace memrouter
