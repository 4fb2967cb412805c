#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "memrouter/contextualizer.hpp"
#include "memrouter/embedding.hpp"
#include "memrouter/memstore.hpp"
#include "memrouter/qa.hpp"
#include "memrouter/router.hpp"
#include "memrouter/training.hpp"

namespace memrouter {

/// Flat `key = value` configuration with defaults for every known key.
/// Lines starting with '#' are comments. Unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  static RunConfig load(const std::string& path);
  static RunConfig parse(std::string_view text, std::string_view source = "<memory>");

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool has_value(const std::string& key) const { return !get(key).empty(); }
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  static const std::map<std::string, std::string>& defaults();

  /// SHA-256 hex of the canonical `key=value` listing of every effective value.
  std::string hash() const;
  std::string dump() const;

  /// Throws InvariantError if any listed path key is empty or (for inputs)
  /// names a missing file.
  void require_inputs(const std::vector<std::string>& keys) const;
  void require_outputs(const std::vector<std::string>& keys) const;

  ProviderConfig provider() const;
  ContextualizerConfig contextualizer() const;
  RouterDims router_dims() const;
  TrainConfig training() const;
  RetrievalConfig retrieval() const;
  QaConfig qa() const;
  SplitSpec split(const Corpus& corpus) const;

 private:
  std::map<std::string, std::string> values_;
};

/// JSON manifest written next to every command output.
struct Manifest {
  std::string command;
  std::string config_hash;
  std::map<std::string, std::string> config;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> outputs;  // path -> sha256 hex

  static Manifest for_run(std::string command, const RunConfig& config);
  void add_output(const std::string& path);
  std::string to_json() const;
  void write(const std::string& path) const;
};

std::string version_string();

}  // namespace memrouter
