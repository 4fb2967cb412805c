#include "memrouter/config.hpp"

#include <charconv>
#include <filesystem>
#include "json.hpp"

#include "memrouter/digest.hpp"
#include "memrouter/error.hpp"
#include "memrouter/text.hpp"

#ifndef MEMROUTER_VERSION
#define MEMROUTER_VERSION "0.0.0"
#endif

namespace memrouter {

namespace {

const std::map<std::string, std::string> kDefaults = {
    {"seed", "42"},
    {"paths.corpus", ""},
    {"paths.labels", ""},
    {"paths.cache", "cache.mremb"},
    {"paths.checkpoint", "router.mrrtr"},
    {"paths.mlp_checkpoint", "mlp.mrrtr"},
    {"paths.store", "store"},
    {"paths.reports", "reports"},
    {"paths.prompts", ""},
    {"split", "1:1:8"},
    {"provider.kind", "stub"},
    {"provider.dim", "256"},
    {"provider.seed", "42"},
    {"provider.endpoint", ""},
    {"provider.model", ""},
    {"provider.timeout_ms", "30000"},
    {"contextualizer.kind", "mixer"},
    {"contextualizer.seed", "1234"},
    {"contextualizer.blocks", "2"},
    {"contextualizer.endpoint", ""},
    {"router.hidden", "64"},
    {"router.model", "64"},
    {"router.threshold", "0.5"},
    {"train.epochs", "5"},
    {"train.batch_size", "16"},
    {"train.lr", "0.001"},
    {"train.seed", "42"},
    {"retrieval.k", "60"},
    {"retrieval.lambda", "0.7"},
    {"retrieval.session_cap", "8"},
    {"retrieval.speaker_boost", "1.2"},
    {"retrieval.open_domain_speaker_boost", "1.4"},
    {"retrieval.temporal_boost", "1.2"},
    {"retrieval.bm25_k1", "1.2"},
    {"retrieval.bm25_b", "0.75"},
    {"qa.kind", "stub"},
    {"qa.endpoint", ""},
    {"qa.model", ""},
    {"qa.timeout_ms", "60000"},
    {"qa.max_inflight", "4"},
    {"policy.seed", "7"},
    {"policy.recent_k", "60"},
    {"eval.resamples", "10000"},
    {"eval.seed", "1"},
};

}  // namespace

RunConfig::RunConfig() : values_(kDefaults) {}

const std::map<std::string, std::string>& RunConfig::defaults() { return kDefaults; }

RunConfig RunConfig::parse(std::string_view text, std::string_view source) {
  RunConfig c;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ParseError(where, "expected key = value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    try {
      c.set(key, value);
    } catch (const InvariantError& e) {
      throw ParseError(where, e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  auto c = parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path);
  const auto base = std::filesystem::path(path).parent_path();
  for (auto& [k, v] : c.values_) {
    if (k.starts_with("paths.") && !v.empty() && std::filesystem::path(v).is_relative()) {
      v = (base / v).lexically_normal().string();
    }
  }
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw InvariantError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw InvariantError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ParseError(key, "expected a number, got '" + v + "'");
}

long long RunConfig::get_int(const std::string& key) const {
  const auto& v = get(key);
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParseError(key, "expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParseError(key, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::hash() const {
  std::string canon;
  for (const auto& [k, v] : values_) canon += k + "=" + v + "\n";
  return to_hex(sha256(canon));
}

void RunConfig::require_inputs(const std::vector<std::string>& keys) const {
  for (const auto& k : keys) {
    const auto& v = get(k);
    if (v.empty()) throw InvariantError("config key '" + k + "' must name an input file");
    if (!std::filesystem::exists(v)) {
      throw InvariantError("config key '" + k + "': no such file '" + v + "'");
    }
  }
}

void RunConfig::require_outputs(const std::vector<std::string>& keys) const {
  for (const auto& k : keys) {
    const auto& v = get(k);
    if (v.empty()) throw InvariantError("config key '" + k + "' must name an output path");
    const auto parent = std::filesystem::path(v).parent_path();
    if (!parent.empty() && !std::filesystem::exists(parent)) {
      std::filesystem::create_directories(parent);
    }
  }
}

ProviderConfig RunConfig::provider() const {
  ProviderConfig p;
  p.kind = get("provider.kind");
  p.dim = static_cast<std::size_t>(get_u64("provider.dim"));
  p.seed = get_u64("provider.seed");
  p.endpoint = get("provider.endpoint");
  p.model = get("provider.model");
  p.timeout_ms = static_cast<int>(get_int("provider.timeout_ms"));
  return p;
}

ContextualizerConfig RunConfig::contextualizer() const {
  ContextualizerConfig c;
  c.kind = get("contextualizer.kind");
  c.seed = get_u64("contextualizer.seed");
  c.blocks = static_cast<std::size_t>(get_u64("contextualizer.blocks"));
  c.endpoint = get("contextualizer.endpoint");
  return c;
}

RouterDims RunConfig::router_dims() const {
  return {static_cast<std::size_t>(get_u64("provider.dim")),
          static_cast<std::size_t>(get_u64("router.hidden")),
          static_cast<std::size_t>(get_u64("router.model"))};
}

TrainConfig RunConfig::training() const {
  TrainConfig t;
  t.epochs = static_cast<int>(get_int("train.epochs"));
  t.batch_size = static_cast<std::size_t>(get_u64("train.batch_size"));
  t.learning_rate = get_double("train.lr");
  t.seed = get_u64("train.seed");
  return t;
}

RetrievalConfig RunConfig::retrieval() const {
  RetrievalConfig r;
  r.k = static_cast<std::size_t>(get_u64("retrieval.k"));
  r.lambda = get_double("retrieval.lambda");
  r.session_cap = static_cast<std::size_t>(get_u64("retrieval.session_cap"));
  r.speaker_boost = get_double("retrieval.speaker_boost");
  r.open_domain_speaker_boost = get_double("retrieval.open_domain_speaker_boost");
  r.temporal_boost = get_double("retrieval.temporal_boost");
  r.bm25.k1 = get_double("retrieval.bm25_k1");
  r.bm25.b = get_double("retrieval.bm25_b");
  return r;
}

QaConfig RunConfig::qa() const {
  QaConfig q;
  q.kind = get("qa.kind");
  q.endpoint = get("qa.endpoint");
  q.model = get("qa.model");
  q.timeout_ms = static_cast<int>(get_int("qa.timeout_ms"));
  q.max_inflight = static_cast<std::size_t>(get_u64("qa.max_inflight"));
  return q;
}

SplitSpec RunConfig::split(const Corpus& corpus) const {
  const auto& s = get("split");
  int parts[3] = {0, 0, 0};
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const auto end = i < 2 ? s.find(':', start) : s.size();
    if (end == std::string::npos) throw ParseError("split", "expected train:validation:test");
    auto [p, ec] = std::from_chars(s.data() + start, s.data() + end, parts[i]);
    if (ec != std::errc() || p != s.data() + end) throw ParseError("split", "bad ratio '" + s + "'");
    start = end + 1;
  }
  return SplitSpec::by_ratio(corpus, parts[0], parts[1], parts[2]);
}

Manifest Manifest::for_run(std::string command, const RunConfig& config) {
  Manifest m;
  m.command = std::move(command);
  m.config_hash = config.hash();
  m.config = config.values();
  for (const auto* k : {"seed", "provider.seed", "contextualizer.seed", "train.seed", "policy.seed",
                        "eval.seed"}) {
    m.seeds[k] = config.get_u64(k);
  }
  return m;
}

void Manifest::add_output(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  outputs[path] = to_hex(sha256(bytes));
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = version_string();
  j["config_hash"] = config_hash;
  j["seeds"] = seeds;
  j["config"] = config;
  j["outputs"] = outputs;
  return j.dump(2);
}

void Manifest::write(const std::string& path) const {
  const auto text = to_json() + "\n";
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string version_string() { return MEMROUTER_VERSION; }

}  // namespace memrouter
