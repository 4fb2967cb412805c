#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memrouter/config.hpp"
#include "memrouter/memstore.hpp"
#include "memrouter/policies.hpp"
#include "memrouter/qa.hpp"
#include "memrouter/report.hpp"

namespace memrouter {

struct IngestOptions {
  /// Budget-matched selection when set; otherwise the policy's own rule.
  std::optional<double> budget;
  /// Plain score >= threshold selection; ignored when a budget is set.
  std::optional<double> threshold;
};

struct IngestResult {
  std::string conversation_id;
  std::vector<PolicyScore> scores;
  std::vector<bool> admitted;
  std::unique_ptr<MemoryStore> store;
};

/// Scores every turn, selects turns and admits them verbatim, in turn order.
/// Per-turn decision latency goes to `latency` when given.
IngestResult ingest_conversation(const Conversation& conv, const Policy& policy,
                                 std::shared_ptr<const EmbeddingProvider> store_provider,
                                 const IngestOptions& options = {},
                                 LatencyCollector* latency = nullptr);

struct EvalOptions {
  AnswerOptions answer;
  ReportOptions report;
  IngestOptions ingest;
};

struct PipelineResult {
  std::vector<IngestResult> ingests;
  std::vector<AnswerRecord> records;
  EvalReport report;
};

/// Ingest every conversation with `policy`, then answer all scorable
/// questions with `client`. Generation calls are counted separately for the
/// write path (ingestion) and the read path (answering).
PipelineResult run_pipeline(std::span<const Conversation* const> conversations,
                            const Policy& policy, GenerationClient& client,
                            std::shared_ptr<const EmbeddingProvider> store_provider,
                            const EvalOptions& options);

struct HitRate {
  std::size_t hits = 0;
  std::size_t total = 0;
  double rate() const noexcept {
    return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
  }
};

/// For every scorable question with evidence, counts evidence turns that
/// appear in the top-k retrieval from `store`.
HitRate retrieval_hit_rate(const Conversation& conv, const MemoryStore& store,
                           const RetrievalConfig& retrieval);

/// Provider, contextualizer and learned policies assembled from a config.
struct Runtime {
  std::shared_ptr<EmbeddingProvider> provider;  // memoizing
  std::shared_ptr<Contextualizer> contextualizer;
  std::shared_ptr<const RouterParams> router;
  std::shared_ptr<const RouterParams> mlp;

  static Runtime from_config(const RunConfig& config);
  /// store-all | random | recent-k | keyword | mlp-only | router | llm-manager
  std::unique_ptr<Policy> make_policy(const std::string& name, const RunConfig& config,
                                      std::shared_ptr<GenerationClient> client = nullptr) const;
};

inline const std::vector<std::string>& grid_policies() {
  static const std::vector<std::string> p = {"random", "mlp-only", "keyword", "router",
                                             "store-all"};
  return p;
}

/// Runs every (policy, retrieval, prompt) cell and records overall F1.
/// Retrieval variants: `cosine` (lambda = 1) and `hybrid`; prompt variants:
/// `generic` and `category`. Store-all is not budget-matched.
FactorialGrid run_grid(std::span<const Conversation* const> conversations, const Runtime& runtime,
                       const RunConfig& config, double budget);

}  // namespace memrouter
