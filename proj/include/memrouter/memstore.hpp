#pragma once

#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memrouter/bm25.hpp"
#include "memrouter/corpus.hpp"
#include "memrouter/embedding.hpp"

namespace memrouter {

struct MemoryItem {
  std::string turn_id;
  std::string session_id;
  DateTime timestamp;
  std::string speaker;
  std::string text;  // verbatim turn text
  std::optional<ContentType> content_type;
  std::size_t turn_index = 0;
  Embedding embedding;  // of searchable()

  /// `[YYYY-MM-DD HH:MM] speaker: text`
  std::string searchable() const;
};

struct Query {
  std::string text;
  Category category = Category::SingleHop;
  std::optional<std::string> mentioned_speaker;
  bool has_temporal_cue = false;

  /// Derives the speaker mention (earliest whole-word match among `speakers`)
  /// and the temporal cue from the question text.
  static Query from_text(std::string text, Category category,
                         std::span<const std::string> speakers);
};

/// Month name, four-digit year, or one of when/date/day/year/"how long".
bool has_temporal_cue(std::string_view question);
std::optional<std::string> mentioned_speaker(std::string_view question,
                                             std::span<const std::string> speakers);

struct RetrievalConfig {
  std::size_t k = 60;
  double lambda = 0.7;
  std::size_t session_cap = 8;  // 0 disables the diversity constraint
  double speaker_boost = 1.2;
  double open_domain_speaker_boost = 1.4;
  double temporal_boost = 1.2;
  Bm25Params bm25;
};

struct ScoredMemory {
  const MemoryItem* item = nullptr;
  double dense = 0.0;   // raw cosine
  double sparse = 0.0;  // raw BM25
  double dense_norm = 0.0;
  double sparse_norm = 0.0;
  double base_score = 0.0;
  double final_score = 0.0;
  double speaker_multiplier = 1.0;
  double temporal_multiplier = 1.0;
};

struct Boosts {
  double speaker = 1.0;
  double temporal = 1.0;
  double final_score = 0.0;
};

Boosts apply_boosts(const Query& query, const MemoryItem& item, double base,
                    const RetrievalConfig& config = {});

/// Min-max scaling to [0, 1]; all-equal (or single) input maps to 1.0.
std::vector<double> min_max_normalize(std::span<const double> raw);

/// Append-only store of admitted turns with dense and BM25 indexes.
/// One writer, many concurrent readers.
class MemoryStore {
 public:
  explicit MemoryStore(std::shared_ptr<const EmbeddingProvider> provider,
                       Bm25Params bm25 = {});

  /// Stores the verbatim turn; throws InvariantError on a duplicate turn id.
  const MemoryItem& admit(const Turn& turn, const Session& session,
                          std::optional<ContentType> content_type = std::nullopt);
  /// Inserts a fully formed item (used when loading).
  const MemoryItem& insert(MemoryItem item);

  std::size_t size() const;
  bool contains(std::string_view turn_id) const;
  const MemoryItem& item(std::size_t i) const;
  std::vector<const MemoryItem*> items() const;
  const EmbeddingProvider& provider() const { return *provider_; }

  /// Scores every item: raw channels, normalization over the whole store,
  /// blend and boosts. Unsorted, in insertion order.
  std::vector<ScoredMemory> score_all(const Query& query, const RetrievalConfig& config) const;

  /// Top-k by final score (ties: older timestamp, then turn id) subject to the
  /// per-session cap; capped slots are backfilled from lower ranks.
  std::vector<ScoredMemory> hybrid_rank(const Query& query, const RetrievalConfig& config) const;

  /// JSONL records at `path`, embeddings in the `path + ".emb"` sidecar.
  void persist(const std::string& path) const;
  static MemoryStore load(const std::string& path,
                          std::shared_ptr<const EmbeddingProvider> provider);

 private:
  std::shared_ptr<const EmbeddingProvider> provider_;
  Bm25Params bm25_params_;
  std::unique_ptr<std::shared_mutex> mu_ = std::make_unique<std::shared_mutex>();
  std::vector<std::unique_ptr<MemoryItem>> items_;
  std::unordered_map<std::string, std::size_t> by_turn_;
  Bm25Index bm25_;
};

/// Orders candidates by final score, then older timestamp, then turn id.
bool rank_before(const ScoredMemory& a, const ScoredMemory& b);

/// Greedy top-k under a per-session cap.
std::vector<ScoredMemory> select_diverse(std::vector<ScoredMemory> ranked, std::size_t k,
                                         std::size_t session_cap);

std::string store_record(const MemoryItem& item);
std::string sidecar_path(const std::string& store_path);

}  // namespace memrouter
