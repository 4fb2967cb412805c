#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "memrouter/contextualizer.hpp"
#include "memrouter/corpus.hpp"
#include "memrouter/embedding.hpp"
#include "memrouter/router.hpp"
#include "memrouter/stats.hpp"

namespace memrouter {

struct PolicyScore {
  std::string turn_id;
  std::size_t turn_index = 0;
  double score = 0.0;  // higher = more storable
  std::string policy_name;
  /// Content type predicted by learned policies for admitted turns.
  std::optional<ContentType> content_type;
};

/// A write-side storage policy. Scoring is pure per conversation.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  /// One score per turn in document order. When `latency` is given, the time
  /// spent deciding each turn is recorded there in milliseconds.
  virtual std::vector<PolicyScore> score(const Conversation& conv,
                                         LatencyCollector* latency = nullptr) const = 0;
  /// Unbudgeted decision: ADD iff score >= threshold().
  virtual std::vector<bool> admit(std::span<const PolicyScore> scores) const;
  virtual double threshold() const { return 0.5; }
  /// True if the policy issues text generation requests.
  virtual bool generates() const { return false; }
};

class StoreAllPolicy final : public Policy {
 public:
  std::string name() const override { return "store-all"; }
  std::vector<PolicyScore> score(const Conversation& conv,
                                 LatencyCollector* latency = nullptr) const override;
  double threshold() const override { return 0.0; }
};

/// Seeded uniform draws; the stream is derived from (seed, conversation id).
class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  std::vector<PolicyScore> score(const Conversation& conv,
                                 LatencyCollector* latency = nullptr) const override;

 private:
  std::uint64_t seed_;
};

/// score = turn_index; unbudgeted it keeps the last k turns.
class RecentKPolicy final : public Policy {
 public:
  explicit RecentKPolicy(std::size_t k = 60) : k_(k) {}
  std::string name() const override { return "recent-k"; }
  std::vector<PolicyScore> score(const Conversation& conv,
                                 LatencyCollector* latency = nullptr) const override;
  std::vector<bool> admit(std::span<const PolicyScore> scores) const override;

 private:
  std::size_t k_;
};

/// Counts lexicon hits: month and weekday names, four-digit years, numerals
/// and a fixed list of life-event words.
std::size_t keyword_hits(std::string_view text);

class KeywordPolicy final : public Policy {
 public:
  std::string name() const override { return "keyword"; }
  std::vector<PolicyScore> score(const Conversation& conv,
                                 LatencyCollector* latency = nullptr) const override;
  double threshold() const override { return 1.0; }
};

/// ADD probability of the full router (chunks, projection, contextualizer,
/// heads) for every turn.
class RouterPolicy final : public Policy {
 public:
  RouterPolicy(std::shared_ptr<const RouterParams> params,
               std::shared_ptr<const Contextualizer> contextualizer,
               std::shared_ptr<const EmbeddingProvider> provider, double threshold = 0.5);
  std::string name() const override { return "router"; }
  std::vector<PolicyScore> score(const Conversation& conv,
                                 LatencyCollector* latency = nullptr) const override;
  double threshold() const override { return threshold_; }

 private:
  std::shared_ptr<const RouterParams> params_;
  std::shared_ptr<const Contextualizer> f_;
  std::shared_ptr<const EmbeddingProvider> provider_;
  double threshold_;
};

/// Projection and heads applied to the current-turn chunk alone, with no
/// contextualizer in between.
class MlpOnlyPolicy final : public Policy {
 public:
  MlpOnlyPolicy(std::shared_ptr<const RouterParams> params,
                std::shared_ptr<const EmbeddingProvider> provider, double threshold = 0.5);
  std::string name() const override { return "mlp-only"; }
  std::vector<PolicyScore> score(const Conversation& conv,
                                 LatencyCollector* latency = nullptr) const override;
  double threshold() const override { return threshold_; }

 private:
  std::shared_ptr<const RouterParams> params_;
  IdentityContextualizer identity_;
  std::shared_ptr<const EmbeddingProvider> provider_;
  double threshold_;
};

/// round-half-up of target * n.
std::size_t budget_count(double target_fraction, std::size_t n);

/// Top round(target * N) turns by score, ties to the earlier turn. The result
/// is a per-turn mask in document order.
std::vector<bool> budget_match(std::span<const PolicyScore> scores, double target_fraction);

struct SweepPoint {
  double threshold = 0.0;
  double store_fraction = 0.0;
  std::vector<bool> selected;
};

/// Selection score >= t for every threshold; thresholds must be strictly
/// increasing inside (0, 1).
std::vector<SweepPoint> threshold_sweep(std::span<const PolicyScore> scores,
                                        std::span<const double> thresholds);

/// Parses `lo:hi:step` (inclusive of hi within rounding) or a comma list.
std::vector<double> parse_thresholds(std::string_view spec);

struct GridCellKey {
  std::string policy;
  std::string retrieval;
  std::string prompt;
  auto operator<=>(const GridCellKey&) const = default;
};

struct Marginal {
  std::string factor;
  std::string level;
  double mean = 0.0;
  std::size_t cells = 0;
  std::size_t expected = 0;
  bool incomplete() const noexcept { return cells < expected; }
};

struct GridSummary {
  std::vector<Marginal> policy;     // budget-matched policies only
  std::vector<Marginal> separate;   // policies reported outside the policy marginals
  std::vector<Marginal> retrieval;  // averaged over every policy
  std::vector<Marginal> prompt;     // averaged over every policy
  std::vector<GridCellKey> missing;
};

/// Factorial layout: every (policy, retrieval, prompt) combination.
struct FactorialGrid {
  std::vector<std::string> policies;
  std::vector<std::string> retrievals;
  std::vector<std::string> prompts;
  std::map<GridCellKey, double> cells;

  /// Marginal mean of each factor level over all settings of the other two
  /// factors. Policies named in `unmatched` are left out of the policy
  /// marginals and reported in `separate`.
  GridSummary summarize(const std::set<std::string>& unmatched = {"store-all"}) const;
};

}  // namespace memrouter
