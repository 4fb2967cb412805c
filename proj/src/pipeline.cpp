#include "memrouter/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>

#include "memrouter/error.hpp"

namespace memrouter {

IngestResult ingest_conversation(const Conversation& conv, const Policy& policy,
                                 std::shared_ptr<const EmbeddingProvider> store_provider,
                                 const IngestOptions& options, LatencyCollector* latency) {
  IngestResult r;
  r.conversation_id = conv.conversation_id;
  r.scores = policy.score(conv, latency);
  if (options.budget) {
    r.admitted = budget_match(r.scores, *options.budget);
  } else if (options.threshold) {
    r.admitted.resize(r.scores.size());
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
      r.admitted[i] = r.scores[i].score >= *options.threshold;
    }
  } else {
    r.admitted = policy.admit(r.scores);
  }
  r.store = std::make_unique<MemoryStore>(std::move(store_provider));
  const auto turns = conv.turns();
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (!r.admitted[i]) continue;
    r.store->admit(*turns[i].turn, *turns[i].session, r.scores[i].content_type);
  }
  return r;
}

PipelineResult run_pipeline(std::span<const Conversation* const> conversations,
                            const Policy& policy, GenerationClient& client,
                            std::shared_ptr<const EmbeddingProvider> store_provider,
                            const EvalOptions& options) {
  using Clock = std::chrono::steady_clock;
  PipelineResult out;
  LatencyCollector write_latency;
  LatencyCollector qa_latency;
  const auto start = Clock::now();
  const auto calls_before = client.calls();
  for (const auto* conv : conversations) {
    out.ingests.push_back(
        ingest_conversation(*conv, policy, store_provider, options.ingest, &write_latency));
  }
  const auto calls_after_write = client.calls();
  if (!policy.generates() && calls_after_write != calls_before) {
    throw InvariantError("write path issued " + std::to_string(calls_after_write - calls_before) +
                         " generation calls under policy '" + policy.name() + "'");
  }
  for (std::size_t i = 0; i < conversations.size(); ++i) {
    auto recs = answer_questions(client, *conversations[i], *out.ingests[i].store, options.answer);
    for (auto& r : recs) {
      qa_latency.record(r.latency_ms);
      out.records.push_back(std::move(r));
    }
  }
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();

  out.report = score_answers(out.records, options.report);
  out.report.label = policy.name();
  out.report.memory_mgmt = summarize(write_latency);
  out.report.qa = summarize(qa_latency);
  out.report.wall_seconds = wall;
  const auto answered = out.report.questions - out.report.unanswered;
  out.report.throughput_qps = wall > 0.0 ? static_cast<double>(answered) / wall : 0.0;
  out.report.write_generation_calls = calls_after_write - calls_before;
  out.report.read_generation_calls = client.calls() - calls_after_write;
  for (const auto& ing : out.ingests) {
    out.report.total_turns += ing.admitted.size();
    out.report.stored_turns += ing.store->size();
  }
  return out;
}

HitRate retrieval_hit_rate(const Conversation& conv, const MemoryStore& store,
                           const RetrievalConfig& retrieval) {
  HitRate h;
  const auto speakers = conv.speakers();
  for (const auto& qa : conv.qa) {
    if (!qa.scorable() || qa.evidence.empty()) continue;
    h.total += qa.evidence.size();
    if (store.size() == 0) continue;
    const auto ranked =
        store.hybrid_rank(Query::from_text(qa.question, qa.category, speakers), retrieval);
    for (const auto& id : qa.evidence) {
      h.hits += std::any_of(ranked.begin(), ranked.end(),
                            [&](const ScoredMemory& m) { return m.item->turn_id == id; });
    }
  }
  return h;
}

Runtime Runtime::from_config(const RunConfig& config) {
  Runtime rt;
  rt.provider = std::make_shared<MemoizingProvider>(make_provider(config.provider()));
  const auto dims = config.router_dims();
  rt.contextualizer = make_contextualizer(config.contextualizer(), dims.model);
  if (config.has_value("paths.checkpoint") && std::filesystem::exists(config.get("paths.checkpoint"))) {
    rt.router = std::make_shared<RouterParams>(load_checkpoint(config.get("paths.checkpoint")));
  }
  if (config.has_value("paths.mlp_checkpoint") &&
      std::filesystem::exists(config.get("paths.mlp_checkpoint"))) {
    rt.mlp = std::make_shared<RouterParams>(load_checkpoint(config.get("paths.mlp_checkpoint")));
  }
  for (const auto& p : {rt.router, rt.mlp}) {
    if (p && p->dims.input != rt.provider->dim()) {
      throw DimensionError("checkpoint input width " + std::to_string(p->dims.input) +
                           " does not match provider dimension " +
                           std::to_string(rt.provider->dim()));
    }
  }
  if (rt.router && rt.router->dims.model != rt.contextualizer->dim()) {
    throw DimensionError("checkpoint width does not match the contextualizer");
  }
  return rt;
}

std::unique_ptr<Policy> Runtime::make_policy(const std::string& name, const RunConfig& config,
                                             std::shared_ptr<GenerationClient> client) const {
  const double threshold = config.get_double("router.threshold");
  if (name == "store-all") return std::make_unique<StoreAllPolicy>();
  if (name == "random") return std::make_unique<RandomPolicy>(config.get_u64("policy.seed"));
  if (name == "recent-k") {
    return std::make_unique<RecentKPolicy>(static_cast<std::size_t>(config.get_u64("policy.recent_k")));
  }
  if (name == "keyword") return std::make_unique<KeywordPolicy>();
  if (name == "router") {
    if (!router) throw InvariantError("policy 'router' needs paths.checkpoint");
    return std::make_unique<RouterPolicy>(router, contextualizer, provider, threshold);
  }
  if (name == "mlp-only") {
    if (!mlp) throw InvariantError("policy 'mlp-only' needs paths.mlp_checkpoint");
    return std::make_unique<MlpOnlyPolicy>(mlp, provider, threshold);
  }
  if (name == "llm-manager") {
    if (!client) throw InvariantError("policy 'llm-manager' needs a generation client");
    return std::make_unique<LlmManagerPolicy>(std::move(client));
  }
  throw InvariantError("unknown policy '" + name + "'");
}

FactorialGrid run_grid(std::span<const Conversation* const> conversations, const Runtime& runtime,
                       const RunConfig& config, double budget) {
  FactorialGrid grid;
  grid.policies = grid_policies();
  grid.retrievals = {"cosine", "hybrid"};
  grid.prompts = {"generic", "category"};
  for (const auto& pname : grid.policies) {
    const auto policy = runtime.make_policy(pname, config);
    IngestOptions ingest;
    if (pname != "store-all") ingest.budget = budget;
    for (const auto& rname : grid.retrievals) {
      for (const auto& prompt : grid.prompts) {
        EvalOptions opts;
        opts.ingest = ingest;
        opts.answer.retrieval = config.retrieval();
        if (rname == "cosine") opts.answer.retrieval.lambda = 1.0;
        opts.answer.style = *parse_prompt_style(prompt);
        opts.answer.max_inflight = config.qa().max_inflight;
        opts.report.resamples = static_cast<std::size_t>(config.get_u64("eval.resamples"));
        opts.report.seed = config.get_u64("eval.seed");
        auto client = make_client(config.qa());
        const auto result = run_pipeline(conversations, *policy, *client, runtime.provider, opts);
        grid.cells[{pname, rname, prompt}] = result.report.overall_f1;
      }
    }
  }
  return grid;
}

}  // namespace memrouter
