#include "memrouter/qa.hpp"

#include <algorithm>
#include <cctype>
#include "json.hpp"
#include <thread>

#include "memrouter/error.hpp"
#include "memrouter/digest.hpp"
#include "memrouter/http.hpp"
#include "memrouter/text.hpp"

namespace memrouter {

namespace {

using Clock = std::chrono::steady_clock;

const char* kBaseInstruction =
    "You are answering a question about a long conversation using the memories below.";

PromptSet make_builtin() {
  const std::string base = kBaseInstruction;
  const std::string concise = base + " Answer in 5-6 words. Pay special attention to timestamps.";
  PromptSet p;
  p.version = "v1";
  p.layout = "{instruction}\n\nMemories:\n{context}\nQuestion: {question}\nAnswer:";
  p.concise = {"concise", {Category::SingleHop, Category::OpenDomain}, concise, true};
  p.temporal = {"temporal",
                {Category::Temporal},
                concise +
                    " Answer with specific dates (e.g., March 12, 2026), NOT relative terms like "
                    "'next Thursday'.",
                true};
  p.list = {"list",
            {Category::MultiHop},
            base + " List all relevant items separated by commas.",
            false};
  p.generic = {"generic",
               {Category::SingleHop, Category::MultiHop, Category::Temporal, Category::OpenDomain},
               base + " Answer the question.",
               false};
  return p;
}

GenerationFailure from_http(HttpFailure f) {
  switch (f) {
    case HttpFailure::None: return GenerationFailure::None;
    case HttpFailure::Timeout: return GenerationFailure::Timeout;
    case HttpFailure::Transport: return GenerationFailure::Transport;
    case HttpFailure::Status: return GenerationFailure::Status;
  }
  return GenerationFailure::Transport;
}

}  // namespace

std::string group_by_speaker(std::span<const MemoryItem* const> memories,
                             std::span<const std::string> speaker_order) {
  std::vector<const MemoryItem*> sorted(memories.begin(), memories.end());
  std::sort(sorted.begin(), sorted.end(), [](const MemoryItem* a, const MemoryItem* b) {
    if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
    if (a->turn_index != b->turn_index) return a->turn_index < b->turn_index;
    return a->turn_id < b->turn_id;
  });
  std::vector<std::string> order(speaker_order.begin(), speaker_order.end());
  for (const auto* m : sorted) {
    if (std::find(order.begin(), order.end(), m->speaker) == order.end()) {
      order.push_back(m->speaker);
    }
  }
  std::string out;
  for (const auto& speaker : order) {
    bool any = false;
    for (const auto* m : sorted) {
      if (m->speaker != speaker) continue;
      if (!any) {
        if (!out.empty()) out += '\n';
        out += speaker + ":\n";
        any = true;
      }
      out += "[" + m->timestamp.str() + "] " + m->text + "\n";
    }
  }
  return out;
}

std::string_view to_string(PromptStyle s) {
  return s == PromptStyle::Generic ? "generic" : "category";
}

std::optional<PromptStyle> parse_prompt_style(std::string_view s) {
  if (s == "generic") return PromptStyle::Generic;
  if (s == "category" || s == "category-specific") return PromptStyle::CategorySpecific;
  return std::nullopt;
}

const PromptSet& PromptSet::builtin() {
  static const PromptSet p = make_builtin();
  return p;
}

PromptSet PromptSet::parse(std::string_view json, std::string_view source) {
  PromptSet p;
  try {
    const auto j = nlohmann::json::parse(json);
    p.version = j.at("version").get<std::string>();
    p.layout = j.at("layout").get<std::string>();
    auto read = [&](const char* name, PromptTemplate& t) {
      const auto& tj = j.at("templates").at(name);
      t.name = name;
      t.instruction = tj.at("instruction").get<std::string>();
      t.word_limit = tj.at("word_limit").get<bool>();
      for (const auto& c : tj.at("categories")) {
        auto cat = parse_category(c.get<std::string>());
        if (!cat) throw ParseError(std::string(source), "unknown category in template " + t.name);
        t.categories.push_back(*cat);
      }
    };
    read("concise", p.concise);
    read("temporal", p.temporal);
    read("list", p.list);
    read("generic", p.generic);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(source), e.what());
  }
  return p;
}

PromptSet PromptSet::load(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path);
}

std::string PromptSet::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = version;
  j["layout"] = layout;
  for (const auto* t : {&concise, &temporal, &list, &generic}) {
    nlohmann::ordered_json tj;
    std::vector<std::string> cats;
    for (auto c : t->categories) cats.emplace_back(to_string(c));
    tj["categories"] = cats;
    tj["instruction"] = t->instruction;
    tj["word_limit"] = t->word_limit;
    j["templates"][t->name] = tj;
  }
  return j.dump(2);
}

const PromptTemplate& PromptSet::select(Category category, PromptStyle style) const {
  if (category == Category::Adversarial) {
    throw InvariantError("adversarial questions have no prompt template");
  }
  if (style == PromptStyle::Generic) return generic;
  switch (category) {
    case Category::MultiHop: return list;
    case Category::Temporal: return temporal;
    default: return concise;
  }
}

std::string PromptSet::render(const PromptTemplate& t, std::string_view context,
                              std::string_view question) const {
  std::string out;
  std::size_t pos = 0;
  while (pos < layout.size()) {
    const auto open = layout.find('{', pos);
    if (open == std::string::npos) {
      out.append(layout, pos);
      break;
    }
    out.append(layout, pos, open - pos);
    const auto close = layout.find('}', open);
    const auto key = layout.substr(open + 1, close - open - 1);
    if (key == "instruction") {
      out += t.instruction;
    } else if (key == "context") {
      out += context;
    } else if (key == "question") {
      out += question;
    } else {
      out.append(layout, open, close - open + 1);
    }
    pos = close + 1;
  }
  return out;
}

const PromptTemplate& select_prompt(Category category, PromptStyle style) {
  return PromptSet::builtin().select(category, style);
}

GenerationResult GenerationClient::generate(const GenerationRequest& request) {
  calls_.fetch_add(1);
  try {
    return do_generate(request);
  } catch (const std::exception& e) {
    GenerationResult r;
    r.failure = GenerationFailure::Transport;
    r.error = e.what();
    return r;
  }
}

GenerationResult StubClient::do_generate(const GenerationRequest& request) {
  GenerationResult r;
  if (canned_) {
    r.text = *canned_;
  } else if (!request.memories.empty()) {
    std::vector<std::string> toks;
    std::size_t i = 0;
    const auto& m = request.memories.front();
    while (i < m.size()) {
      while (i < m.size() && std::isspace(static_cast<unsigned char>(m[i]))) ++i;
      std::size_t j = i;
      while (j < m.size() && !std::isspace(static_cast<unsigned char>(m[j]))) ++j;
      if (j > i) toks.emplace_back(m.substr(i, j - i));
      i = j;
    }
    r.text = join(toks, " ");
  }
  return r;
}

RemoteChatClient::RemoteChatClient(ChatConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ProviderError("remote chat client requires qa.endpoint");
}

GenerationResult RemoteChatClient::attempt(const std::string& body) const {
  GenerationResult r;
  auto res = http_post_json(config_.endpoint + "/chat/completions", body, auth_headers(),
                            std::chrono::milliseconds(config_.timeout_ms));
  if (!res.ok()) {
    r.failure = from_http(res.failure);
    r.error = res.error;
    return r;
  }
  try {
    const auto j = nlohmann::json::parse(res.body);
    r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    r.failure = GenerationFailure::Malformed;
    r.error = std::string("malformed completion response: ") + e.what();
  }
  return r;
}

GenerationResult RemoteChatClient::do_generate(const GenerationRequest& request) {
  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_tokens;
  const auto payload = body.dump();
  auto r = attempt(payload);
  if (r.failure == GenerationFailure::Transport) {
    r = attempt(payload);
    r.attempts = 2;
  }
  return r;
}

std::shared_ptr<GenerationClient> make_client(const QaConfig& config) {
  if (config.kind == "stub") return std::make_shared<StubClient>();
  if (config.kind == "remote") {
    ChatConfig c;
    c.endpoint = config.endpoint;
    c.model = config.model;
    c.timeout_ms = config.timeout_ms;
    return std::make_shared<RemoteChatClient>(std::move(c));
  }
  throw InvariantError("unknown qa.kind '" + config.kind + "'");
}

AnswerRecord answer(GenerationClient& client, const QAPair& qa,
                    std::span<const ScoredMemory> memories,
                    std::span<const std::string> speaker_order, PromptStyle style,
                    const PromptSet& prompts) {
  AnswerRecord rec;
  rec.question = qa.question;
  rec.gold_answer = qa.gold_answer;
  rec.category = qa.category;
  GenerationRequest req;
  std::vector<const MemoryItem*> items;
  for (const auto& m : memories) {
    rec.retrieved_ids.push_back(m.item->turn_id);
    req.memories.push_back(m.item->text);
    items.push_back(m.item);
  }
  const auto& tmpl = prompts.select(qa.category, style);
  rec.prompt = prompts.render(tmpl, group_by_speaker(items, speaker_order), qa.question);
  req.prompt = rec.prompt;

  const auto start = Clock::now();
  const auto result = client.generate(req);
  rec.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  rec.attempts = result.attempts;
  rec.answered = result.ok();
  if (result.ok()) {
    rec.raw_answer = result.text;
  } else {
    rec.error = result.error.empty() ? "generation failed" : result.error;
  }
  return rec;
}

std::vector<AnswerRecord> answer_questions(GenerationClient& client, const Conversation& conv,
                                           const MemoryStore& store,
                                           const AnswerOptions& options) {
  std::vector<const QAPair*> questions;
  for (const auto& qa : conv.qa) {
    if (qa.scorable()) questions.push_back(&qa);
  }
  const auto speakers = conv.speakers();
  const PromptSet& prompts = options.prompts ? *options.prompts : PromptSet::builtin();
  std::vector<AnswerRecord> out(questions.size());

  auto work = [&](std::size_t i) {
    const auto& qa = *questions[i];
    const auto query = Query::from_text(qa.question, qa.category, speakers);
    const auto ranked = store.hybrid_rank(query, options.retrieval);
    out[i] = answer(client, qa, ranked, speakers, options.style, prompts);
  };

  const std::size_t workers = std::min(std::max<std::size_t>(options.max_inflight, 1),
                                       questions.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < questions.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < questions.size();) work(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next.store(questions.size());
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::string answer_record_json(const AnswerRecord& rec) {
  nlohmann::ordered_json j;
  j["question"] = rec.question;
  j["gold_answer"] = rec.gold_answer;
  j["category"] = std::string(to_string(rec.category));
  j["retrieved_ids"] = rec.retrieved_ids;
  j["prompt"] = rec.prompt;
  j["raw_answer"] = rec.raw_answer;
  j["latency_ms"] = rec.latency_ms;
  j["answered"] = rec.answered;
  if (!rec.error.empty()) j["error"] = rec.error;
  j["attempts"] = rec.attempts;
  return j.dump();
}

std::vector<PolicyScore> LlmManagerPolicy::score(const Conversation& conv,
                                                 LatencyCollector* latency) const {
  const auto turns = conv.turns();
  std::vector<PolicyScore> out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto start = Clock::now();
    std::string context;
    const std::size_t from = i > context_turns_ ? i - context_turns_ : 0;
    for (std::size_t j = from; j < i; ++j) context += render_turn(*turns[j].turn) + "\n";
    GenerationRequest req;
    req.prompt =
        "Decide whether the latest turn of this conversation holds information worth keeping "
        "in long-term memory. Reply with exactly ADD or NOOP.\n\nRecent turns:\n" +
        context + "\nLatest turn:\n" + render_turn(*turns[i].turn) + "\n\nDecision:";
    const auto r = client_->generate(req);
    PolicyScore s;
    s.turn_id = turns[i].turn->turn_id;
    s.turn_index = turns[i].turn->turn_index;
    s.policy_name = name();
    s.score = r.ok() && trim(r.text).starts_with("ADD") ? 1.0 : 0.0;
    if (latency) {
      latency->record(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace memrouter
