#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memrouter/corpus.hpp"
#include "memrouter/memstore.hpp"
#include "memrouter/policies.hpp"

namespace memrouter {

/// One line per memory, `[timestamp] text`, in chronological order, under a
/// `speaker:` heading per speaker. Sections follow `speaker_order`; speakers
/// missing from it come after, by first chronological appearance.
std::string group_by_speaker(std::span<const MemoryItem* const> memories,
                             std::span<const std::string> speaker_order);

enum class PromptStyle { CategorySpecific, Generic };

std::string_view to_string(PromptStyle s);
std::optional<PromptStyle> parse_prompt_style(std::string_view s);

struct PromptTemplate {
  std::string name;
  std::vector<Category> categories;
  std::string instruction;
  bool word_limit = false;
};

/// The versioned wording. Built-ins mirror prompts/v1.json.
struct PromptSet {
  std::string version;
  PromptTemplate concise;   // single_hop, open_domain
  PromptTemplate temporal;  // temporal
  PromptTemplate list;      // multi_hop
  PromptTemplate generic;   // every category, for the prompt-style ablation
  std::string layout;       // with {instruction}, {context}, {question}

  static const PromptSet& builtin();
  static PromptSet load(const std::string& path);
  static PromptSet parse(std::string_view json, std::string_view source = "<memory>");
  std::string to_json() const;

  /// Throws InvariantError for adversarial questions.
  const PromptTemplate& select(Category category,
                               PromptStyle style = PromptStyle::CategorySpecific) const;
  std::string render(const PromptTemplate& t, std::string_view context,
                     std::string_view question) const;
};

const PromptTemplate& select_prompt(Category category,
                                    PromptStyle style = PromptStyle::CategorySpecific);

struct GenerationRequest {
  std::string prompt;
  /// Retrieved memory texts, best first. Only the offline stub reads them.
  std::vector<std::string> memories;
};

enum class GenerationFailure { None, Timeout, Transport, Status, Malformed };

struct GenerationResult {
  GenerationFailure failure = GenerationFailure::None;
  std::string text;
  std::string error;
  int attempts = 1;

  bool ok() const noexcept { return failure == GenerationFailure::None; }
};

/// Text generation service. The counter moves exactly once per generate()
/// call, whatever the outcome, and regardless of internal retries.
class GenerationClient {
 public:
  virtual ~GenerationClient() = default;

  virtual std::string name() const = 0;
  GenerationResult generate(const GenerationRequest& request);
  std::uint64_t calls() const noexcept { return calls_.load(); }

 protected:
  virtual GenerationResult do_generate(const GenerationRequest& request) = 0;

 private:
  std::atomic<std::uint64_t> calls_{0};
};

/// Offline client: answers with the whitespace tokens of the top-ranked
/// memory, or a fixed reply when one is configured.
class StubClient final : public GenerationClient {
 public:
  StubClient() = default;
  explicit StubClient(std::string canned) : canned_(std::move(canned)) {}
  std::string name() const override { return "stub"; }

 protected:
  GenerationResult do_generate(const GenerationRequest& request) override;

 private:
  std::optional<std::string> canned_;
};

struct ChatConfig {
  std::string endpoint;  // base URL; requests go to {endpoint}/chat/completions
  std::string model;
  int timeout_ms = 60000;
  double temperature = 0.0;
  int max_tokens = 64;
};

/// OpenAI-compatible chat completions client. A transport failure is retried
/// once; timeouts and HTTP status errors are not retried.
class RemoteChatClient final : public GenerationClient {
 public:
  explicit RemoteChatClient(ChatConfig config);
  std::string name() const override { return "remote:" + config_.model; }

 protected:
  GenerationResult do_generate(const GenerationRequest& request) override;

 private:
  GenerationResult attempt(const std::string& body) const;
  ChatConfig config_;
};

struct QaConfig {
  std::string kind = "stub";  // stub | remote
  std::string endpoint;
  std::string model;
  int timeout_ms = 60000;
  std::size_t max_inflight = 4;
};

std::shared_ptr<GenerationClient> make_client(const QaConfig& config);

struct AnswerRecord {
  std::string question;
  std::string gold_answer;
  Category category = Category::SingleHop;
  std::vector<std::string> retrieved_ids;
  std::string prompt;
  std::string raw_answer;
  double latency_ms = 0.0;
  bool answered = false;
  std::string error;
  int attempts = 0;
};

/// One generation request for one question; latency is wall-clock around it.
/// Failures are recorded, never thrown.
AnswerRecord answer(GenerationClient& client, const QAPair& qa,
                    std::span<const ScoredMemory> memories,
                    std::span<const std::string> speaker_order,
                    PromptStyle style = PromptStyle::CategorySpecific,
                    const PromptSet& prompts = PromptSet::builtin());

struct AnswerOptions {
  RetrievalConfig retrieval;
  PromptStyle style = PromptStyle::CategorySpecific;
  std::size_t max_inflight = 4;
  const PromptSet* prompts = nullptr;
};

/// Retrieves and answers every scorable question of a conversation, up to
/// `max_inflight` at a time. Records come back in question order.
std::vector<AnswerRecord> answer_questions(GenerationClient& client, const Conversation& conv,
                                           const MemoryStore& store, const AnswerOptions& options);

std::string answer_record_json(const AnswerRecord& rec);

/// Comparator that asks a generation service to decide ADD or NOOP for every
/// turn. Each turn costs one generation request on the write path.
class LlmManagerPolicy final : public Policy {
 public:
  explicit LlmManagerPolicy(std::shared_ptr<GenerationClient> client, std::size_t context_turns = 5)
      : client_(std::move(client)), context_turns_(context_turns) {}
  std::string name() const override { return "llm-manager"; }
  std::vector<PolicyScore> score(const Conversation& conv,
                                 LatencyCollector* latency = nullptr) const override;
  bool generates() const override { return true; }

 private:
  std::shared_ptr<GenerationClient> client_;
  std::size_t context_turns_;
};

}  // namespace memrouter
