#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include "json.hpp"

#include "memrouter/cache.hpp"
#include "memrouter/config.hpp"
#include "memrouter/error.hpp"
#include "memrouter/pipeline.hpp"
#include "memrouter/synthetic.hpp"
#include "memrouter/text.hpp"
#include "memrouter/training.hpp"

namespace fs = std::filesystem;
using namespace memrouter;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

RunConfig load_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? RunConfig() : RunConfig::load(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("--set", "expected key=value, got '" + kv + "'");
    c.set(memrouter::trim(kv.substr(0, eq)), memrouter::trim(kv.substr(eq + 1)));
  }
  if (g.seed) {
    const auto s = std::to_string(*g.seed);
    for (const auto* k : {"seed", "train.seed", "policy.seed", "eval.seed"}) c.set(k, s);
  }
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string reports_dir(const RunConfig& c) {
  const auto& d = c.get("paths.reports");
  fs::create_directories(d);
  return d;
}

std::string out_path(const RunConfig& c, const std::string& name) {
  return (fs::path(reports_dir(c)) / name).string();
}

struct Loaded {
  Corpus corpus;
  Split split;
};

Loaded load_inputs(const RunConfig& c) {
  c.require_inputs({"paths.corpus"});
  Loaded l;
  l.corpus = load_corpus(c.get("paths.corpus"));
  l.split = apply_split(l.corpus, c.split(l.corpus));
  for (const auto& w : l.split.warnings) std::cerr << "warning: " << w << "\n";
  return l;
}

std::vector<const Conversation*> select_conversations(const Loaded& l, bool all) {
  if (!all) return l.split.test;
  std::vector<const Conversation*> out;
  for (const auto& c : l.corpus) out.push_back(&c);
  return out;
}

EvalOptions eval_options(const RunConfig& c, const PromptSet* prompts) {
  EvalOptions o;
  o.answer.retrieval = c.retrieval();
  o.answer.max_inflight = c.qa().max_inflight;
  o.answer.prompts = prompts;
  o.report.resamples = static_cast<std::size_t>(c.get_u64("eval.resamples"));
  o.report.seed = c.get_u64("eval.seed");
  return o;
}

std::optional<PromptSet> load_prompts(const RunConfig& c) {
  if (!c.has_value("paths.prompts")) return std::nullopt;
  return PromptSet::load(c.get("paths.prompts"));
}

int guarded(const Globals& g, const std::string& command,
            const std::function<void(const RunConfig&, Manifest&)>& body) {
  std::string marker;
  try {
    const auto config = load_config(g);
    marker = out_path(config, command + ".partial");
    fs::remove(marker);
    auto manifest = Manifest::for_run(command, config);
    body(config, manifest);
    manifest.write(out_path(config, command + ".manifest.json"));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "memrouter " << command << ": " << e.what() << "\n";
    if (!marker.empty()) {
      std::ofstream(marker) << e.what() << "\n";
    }
    return 1;
  }
}

void cmd_synth(const std::string& kind, std::size_t conversations, std::uint64_t seed,
               const std::string& out, const std::string& labels_out, const std::string& split) {
  SyntheticData data;
  if (kind == "planted") {
    PlantedOptions o;
    o.conversations = conversations;
    o.seed = seed;
    data = planted_fact_corpus(o);
  } else if (kind == "keyword") {
    KeywordOptions o;
    o.conversations = conversations;
    o.seed = seed;
    data = keyword_corpus(o);
  } else if (kind == "long") {
    data = benchmark_shaped_corpus(conversations, 35, 588, seed);
  } else {
    throw InvariantError("unknown synthetic kind '" + kind + "'");
  }
  write_corpus(out, data.corpus);
  if (labels_out.empty()) return;
  RunConfig c;
  c.set("split", split);
  const auto s = apply_split(data.corpus, c.split(data.corpus));
  LabelSet kept;
  for (const auto& [key, rec] : data.labels) {
    if (!s.is_test(rec.conversation_id)) kept.insert(rec);
  }
  write_text(labels_out, serialize_labels(kept));
}

void cmd_train(const RunConfig& c, Manifest& m, bool mlp_only) {
  c.require_inputs({"paths.corpus", "paths.labels"});
  const auto ckpt_key = mlp_only ? "paths.mlp_checkpoint" : "paths.checkpoint";
  c.require_outputs({"paths.cache", ckpt_key});
  const auto l = load_inputs(c);
  const auto labels = load_labels(c.get("paths.labels"), l.corpus);
  auto provider = make_provider(c.provider());
  CacheStats stats;
  const auto cache = precompute_cache(l.corpus, *provider, c.get("paths.cache"), &stats);
  std::cerr << "cache: " << stats.distinct_chunks << " chunks, " << stats.embedded
            << " embedded, " << stats.reused << " reused\n";
  const auto dims = c.router_dims();
  std::shared_ptr<Contextualizer> f;
  if (mlp_only) {
    f = std::make_shared<IdentityContextualizer>(dims.model);
  } else {
    f = make_contextualizer(c.contextualizer(), dims.model);
  }
  const auto f_hash = f->state_hash();
  const auto p_hash = provider->state_hash();
  const auto tc = c.training();
  const auto result = train_router(labels, l.split, cache, *provider, *f, dims, tc, mlp_only);
  if (f->state_hash() != f_hash || provider->state_hash() != p_hash) {
    throw InvariantError("frozen components changed during training");
  }
  save_checkpoint(result.params, c.get(ckpt_key));
  const auto report = out_path(c, mlp_only ? "train_mlp_report.json" : "train_report.json");
  write_text(report, training_report(result.history, tc) + "\n");
  std::cout << training_report(result.history, tc) << "\n";
  m.add_output(c.get(ckpt_key));
  m.add_output(c.get("paths.cache"));
  m.add_output(report);
}

void cmd_route(const RunConfig& c, Manifest& m, const std::string& conversation) {
  const auto l = load_inputs(c);
  const auto rt = Runtime::from_config(c);
  const auto policy = rt.make_policy("router", c);
  const auto path = out_path(c, "route.jsonl");
  std::string out;
  for (const auto& conv : l.corpus) {
    if (!conversation.empty() && conv.conversation_id != conversation) continue;
    const auto scores = policy->score(conv);
    const auto admit = policy->admit(scores);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      nlohmann::ordered_json j;
      j["conversation_id"] = conv.conversation_id;
      j["turn_id"] = scores[i].turn_id;
      j["add_score"] = scores[i].score;
      j["op"] = admit[i] ? "ADD" : "NOOP";
      if (admit[i] && scores[i].content_type) {
        j["content_type"] = std::string(to_string(*scores[i].content_type));
      }
      out += j.dump() + "\n";
    }
  }
  write_text(path, out);
  std::cout << out;
  m.add_output(path);
}

void cmd_ingest(const RunConfig& c, Manifest& m, const std::string& policy_name,
                std::optional<double> budget, bool all) {
  const auto l = load_inputs(c);
  const auto rt = Runtime::from_config(c);
  auto client = make_client(c.qa());
  const auto policy = rt.make_policy(policy_name, c, client);
  const auto store_dir = c.get("paths.store");
  fs::create_directories(store_dir);
  LatencyCollector latency;
  std::size_t stored = 0, total = 0;
  const auto calls_before = client->calls();
  for (const auto* conv : select_conversations(l, all)) {
    IngestOptions opts;
    opts.budget = budget;
    auto r = ingest_conversation(*conv, *policy, rt.provider, opts, &latency);
    const auto path = (fs::path(store_dir) / (conv->conversation_id + ".jsonl")).string();
    r.store->persist(path);
    m.add_output(path);
    m.add_output(sidecar_path(path));
    stored += r.store->size();
    total += r.admitted.size();
  }
  const auto calls = client->calls() - calls_before;
  if (!policy->generates() && calls != 0) {
    throw InvariantError("write path issued generation calls under policy " + policy_name);
  }
  std::string log;
  for (double v : latency.values()) log += nlohmann::json({{"memory_mgmt_ms", v}}).dump() + "\n";
  const auto log_path = out_path(c, "ingest_latency.jsonl");
  write_text(log_path, log);
  std::cout << policy_name << ": stored " << stored << " of " << total << " turns ("
            << (total ? 100.0 * static_cast<double>(stored) / static_cast<double>(total) : 0.0)
            << "%), generation calls " << calls << ", memory-mgmt p50 " << latency.p50()
            << " ms\n";
}

PipelineResult evaluate(const RunConfig& c, const Loaded& l, const Runtime& rt,
                        const std::string& policy_name, std::optional<double> budget,
                        const std::string& retrieval, const std::string& prompt, bool all,
                        const PromptSet* prompts) {
  auto client = make_client(c.qa());
  const auto policy = rt.make_policy(policy_name, c, client);
  auto opts = eval_options(c, prompts);
  opts.ingest.budget = budget;
  if (retrieval == "cosine") {
    opts.answer.retrieval.lambda = 1.0;
  } else if (retrieval != "hybrid") {
    throw InvariantError("unknown retrieval variant '" + retrieval + "'");
  }
  const auto style = parse_prompt_style(prompt);
  if (!style) throw InvariantError("unknown prompt style '" + prompt + "'");
  opts.answer.style = *style;
  const auto convs = select_conversations(l, all);
  return run_pipeline(convs, *policy, *client, rt.provider, opts);
}

void write_eval_outputs(const RunConfig& c, Manifest& m, const PipelineResult& r,
                        const std::string& stem) {
  std::string log;
  for (const auto& rec : r.records) log += answer_record_json(rec) + "\n";
  const auto answers = out_path(c, stem + "_answers.jsonl");
  const auto report = out_path(c, stem + "_report.json");
  write_text(answers, log);
  write_text(report, report_json(r.report) + "\n");
  m.add_output(answers);
  m.add_output(report);
}

void cmd_sweep(const RunConfig& c, Manifest& m, const std::string& policy_name,
               const std::string& spec, bool all, const PromptSet* prompts) {
  const auto l = load_inputs(c);
  const auto rt = Runtime::from_config(c);
  const auto thresholds = parse_thresholds(spec);
  const auto policy = rt.make_policy(policy_name, c);
  const auto convs = select_conversations(l, all);

  std::vector<std::vector<PolicyScore>> scores;
  for (const auto* conv : convs) scores.push_back(policy->score(*conv));
  std::vector<std::vector<SweepPoint>> sweeps;
  for (const auto& s : scores) sweeps.push_back(threshold_sweep(s, thresholds));

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::printf("%9s %8s %8s\n", "threshold", "store%", "F1");
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    auto client = make_client(c.qa());
    auto opts = eval_options(c, prompts);
    opts.ingest.threshold = thresholds[t];
    const auto r = run_pipeline(convs, *policy, *client, rt.provider, opts);
    const double frac = r.report.total_turns ? static_cast<double>(r.report.stored_turns) /
                                                   static_cast<double>(r.report.total_turns)
                                             : 0.0;
    for (std::size_t i = 0; t > 0 && i < sweeps.size(); ++i) {
      const auto& prev = sweeps[i][t - 1].selected;
      const auto& cur = sweeps[i][t].selected;
      for (std::size_t j = 0; j < cur.size(); ++j) {
        if (cur[j] && !prev[j]) throw InvariantError("threshold sweep selections are not nested");
      }
    }
    std::printf("%9.2f %8.1f %8.1f\n", thresholds[t], 100.0 * frac, r.report.overall_f1);
    rows.push_back({{"threshold", thresholds[t]},
                    {"store_fraction", frac},
                    {"f1", r.report.overall_f1},
                    {"stored_turns", r.report.stored_turns}});
  }
  const auto path = out_path(c, "sweep.json");
  write_text(path, rows.dump(2) + "\n");
  m.add_output(path);
}

void cmd_policies(const RunConfig& c, Manifest& m, double budget, bool all,
                  const PromptSet* prompts) {
  const auto l = load_inputs(c);
  const auto rt = Runtime::from_config(c);
  std::vector<EvalReport> reports;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const std::string name :
       {"store-all", "random", "recent-k", "keyword", "mlp-only", "router"}) {
    if ((name == "router" && !rt.router) || (name == "mlp-only" && !rt.mlp)) {
      std::cerr << "skipping " << name << ": no checkpoint\n";
      continue;
    }
    const std::optional<double> b = name == "store-all" ? std::nullopt : std::optional(budget);
    auto r = evaluate(c, l, rt, name, b, "hybrid", "category", all, prompts);
    const double frac = r.report.total_turns ? static_cast<double>(r.report.stored_turns) /
                                                   static_cast<double>(r.report.total_turns)
                                             : 0.0;
    rows.push_back({{"policy", name}, {"store_fraction", frac}, {"f1", r.report.overall_f1}});
    reports.push_back(r.report);
  }
  std::cout << report_table(reports);
  const auto path = out_path(c, "policies.json");
  write_text(path, rows.dump(2) + "\n");
  m.add_output(path);
}

void cmd_grid(const RunConfig& c, Manifest& m, double budget, bool all) {
  const auto l = load_inputs(c);
  const auto rt = Runtime::from_config(c);
  const auto grid = run_grid(select_conversations(l, all), rt, c, budget);
  const auto summary = grid.summarize();
  nlohmann::ordered_json j;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& [k, v] : grid.cells) {
    cells.push_back({{"policy", k.policy}, {"retrieval", k.retrieval}, {"prompt", k.prompt},
                     {"f1", v}});
  }
  j["cells"] = cells;
  auto dump = [&](const char* title, const std::vector<Marginal>& ms) {
    std::printf("%s\n", title);
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& mg : ms) {
      std::printf("  %-12s %6.1f%s\n", mg.level.c_str(), mg.mean, mg.incomplete() ? " *" : "");
      arr.push_back({{"level", mg.level}, {"mean", mg.mean}, {"cells", mg.cells},
                     {"expected", mg.expected}});
    }
    j[title] = arr;
  };
  dump("policy", summary.policy);
  dump("separate", summary.separate);
  dump("retrieval", summary.retrieval);
  dump("prompt", summary.prompt);
  const auto path = out_path(c, "grid.json");
  write_text(path, j.dump(2) + "\n");
  m.add_output(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write-side conversational memory admission"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--seed", g.seed, "overrides every seed key");
  app.add_option("--set", g.overrides, "key=value override (repeatable)");

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus and labels");
  std::string kind = "planted", synth_out, synth_labels;
  std::size_t synth_convs = 10;
  std::uint64_t synth_seed = 1;
  synth->add_option("--kind", kind, "planted | keyword | long");
  synth->add_option("--out", synth_out)->required();
  std::string synth_split = "1:1:8";
  synth->add_option("--labels", synth_labels, "labels for train and validation conversations");
  synth->add_option("--split", synth_split, "train:validation:test ratio for the labels");
  synth->add_option("--conversations", synth_convs);
  synth->add_option("--synth-seed", synth_seed);

  auto* train = app.add_subcommand("train", "train the router on cached embeddings");
  std::optional<int> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  bool mlp_only = false;
  train->add_option("--epochs", epochs);
  train->add_option("--batch-size", batch);
  train->add_option("--lr", lr);
  train->add_flag("--mlp-only", mlp_only, "train the current-chunk baseline without a backbone");

  auto* route = app.add_subcommand("route", "print router decisions per turn");
  std::string conversation;
  route->add_option("--conversation", conversation);

  std::string policy = "router", retrieval = "hybrid", prompt = "category";
  std::optional<double> budget;
  bool all = false;
  auto* ingest = app.add_subcommand("ingest", "build memory stores with a policy");
  auto* eval = app.add_subcommand("eval", "ingest, answer and score");
  auto* bench = app.add_subcommand("bench", "latency and throughput of the matched harness");
  for (auto* sc : {ingest, eval, bench}) {
    sc->add_option("--policy", policy);
    sc->add_option("--budget", budget);
    sc->add_flag("--all", all, "use every conversation, not just the test split");
  }
  std::optional<std::size_t> resamples;
  for (auto* sc : {eval, bench}) {
    sc->add_option("--retrieval", retrieval, "hybrid | cosine");
    sc->add_option("--prompt", prompt, "category | generic");
    sc->add_option("--resamples", resamples);
  }

  auto* sweep = app.add_subcommand("sweep", "threshold sweep with downstream F1");
  std::string thresholds = "0.1:0.9:0.1";
  sweep->add_option("--policy", policy);
  sweep->add_option("--thresholds", thresholds);
  sweep->add_flag("--all", all);

  auto* grid = app.add_subcommand("grid", "factorial policy x retrieval x prompt grid");
  double grid_budget = 0.62;
  grid->add_option("--budget", grid_budget);
  grid->add_flag("--all", all);

  auto* pol = app.add_subcommand("policies", "budget-matched comparison of every policy");
  double pol_budget = 0.62;
  pol->add_option("--budget", pol_budget);
  pol->add_flag("--all", all);

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    try {
      cmd_synth(kind, synth_convs, synth_seed, synth_out, synth_labels, synth_split);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "memrouter synth: " << e.what() << "\n";
      return 1;
    }
  }
  if (train->parsed()) {
    if (epochs) g.overrides.push_back("train.epochs=" + std::to_string(*epochs));
    if (batch) g.overrides.push_back("train.batch_size=" + std::to_string(*batch));
    if (lr) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "train.lr=%.17g", *lr);
      g.overrides.push_back(buf);
    }
    return guarded(g, mlp_only ? "train-mlp" : "train",
                   [&](const RunConfig& c, Manifest& m) { cmd_train(c, m, mlp_only); });
  }
  if (route->parsed()) {
    return guarded(g, "route", [&](const RunConfig& c, Manifest& m) { cmd_route(c, m, conversation); });
  }
  if (resamples) g.overrides.push_back("eval.resamples=" + std::to_string(*resamples));
  if (ingest->parsed()) {
    return guarded(g, "ingest",
                   [&](const RunConfig& c, Manifest& m) { cmd_ingest(c, m, policy, budget, all); });
  }
  if (eval->parsed() || bench->parsed()) {
    const std::string name = eval->parsed() ? "eval" : "bench";
    return guarded(g, name, [&](const RunConfig& c, Manifest& m) {
      const auto prompts = load_prompts(c);
      const auto l = load_inputs(c);
      const auto rt = Runtime::from_config(c);
      const auto r = evaluate(c, l, rt, policy, budget, retrieval, prompt, all,
                              prompts ? &*prompts : nullptr);
      write_eval_outputs(c, m, r, name);
      if (name == "eval") {
        std::cout << report_table(std::span(&r.report, 1));
      } else {
        std::printf("memory-mgmt latency: p50 %.3f ms, p95 %.3f ms (%zu turns)\n",
                    r.report.memory_mgmt.p50_ms, r.report.memory_mgmt.p95_ms,
                    r.report.memory_mgmt.events);
        std::printf("qa latency:          p50 %.3f ms, p95 %.3f ms (%zu questions)\n",
                    r.report.qa.p50_ms, r.report.qa.p95_ms, r.report.qa.events);
        std::printf("throughput:          %.2f questions/s over %.3f s\n", r.report.throughput_qps,
                    r.report.wall_seconds);
        std::printf("generation calls:    write path %llu, read path %llu\n",
                    static_cast<unsigned long long>(r.report.write_generation_calls),
                    static_cast<unsigned long long>(r.report.read_generation_calls));
      }
    });
  }
  if (sweep->parsed()) {
    return guarded(g, "sweep", [&](const RunConfig& c, Manifest& m) {
      const auto prompts = load_prompts(c);
      cmd_sweep(c, m, policy, thresholds, all, prompts ? &*prompts : nullptr);
    });
  }
  if (grid->parsed()) {
    return guarded(g, "grid", [&](const RunConfig& c, Manifest& m) { cmd_grid(c, m, grid_budget, all); });
  }
  if (pol->parsed()) {
    return guarded(g, "policies", [&](const RunConfig& c, Manifest& m) {
      const auto prompts = load_prompts(c);
      cmd_policies(c, m, pol_budget, all, prompts ? &*prompts : nullptr);
    });
  }
  return 0;
}
