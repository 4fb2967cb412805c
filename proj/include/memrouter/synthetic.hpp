#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "memrouter/corpus.hpp"

namespace memrouter {

struct SyntheticData {
  Corpus corpus;
  LabelSet labels;
};

struct PlantedOptions {
  std::size_t conversations = 10;
  std::size_t sessions = 4;
  std::size_t turns_per_session = 25;
  /// When set, overrides turns_per_session and spreads this many turns over
  /// the sessions as evenly as possible.
  std::optional<std::size_t> total_turns;
  /// Expected share of turns that carry a plantable fact.
  double fact_rate = 0.15;
  std::uint64_t seed = 1;
  std::string id_prefix = "conv";
};

/// Two-speaker chit-chat with planted personal facts. Fact turns are labelled
/// ADD (with a content type), filler turns NOOP. Every fact gets a question
/// whose evidence is the fact turn; a few multi-fact and adversarial
/// questions are added as well.
SyntheticData planted_fact_corpus(const PlantedOptions& options);

struct KeywordOptions {
  std::size_t conversations = 8;
  std::size_t turns = 100;  // per conversation
  double add_rate = 0.3;
  std::uint64_t seed = 1;
  std::string keyword = "zephyr";
};

/// Bag-of-random-words turns; a turn is ADD exactly when it contains the
/// keyword token.
SyntheticData keyword_corpus(const KeywordOptions& options);

/// Conversations with `sessions` sessions and exactly `turns` turns each,
/// sized like the public long-conversation benchmark.
SyntheticData benchmark_shaped_corpus(std::size_t conversations = 10, std::size_t sessions = 35,
                                      std::size_t turns = 588, std::uint64_t seed = 1);

}  // namespace memrouter
