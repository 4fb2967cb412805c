#pragma once

#include <memory>
#include <string>
#include <vector>

#include "memrouter/memstore.hpp"
#include "memrouter/rng.hpp"

namespace testutil {

struct RandomStore {
  std::vector<memrouter::Session> sessions;
  std::vector<std::string> speakers{"Ana", "Bo", "Cyd"};
  std::unique_ptr<memrouter::MemoryStore> store;
};

/// Small-vocabulary store with repeated texts and shared timestamps so that
/// score ties and session caps actually occur.
inline RandomStore random_store(std::size_t n_items, std::uint64_t seed,
                                std::shared_ptr<const memrouter::EmbeddingProvider> provider) {
  static const std::vector<std::string> vocab = {
      "dog",    "cat",    "beagle",  "hiking", "paris", "march",  "pottery", "guitar",
      "sister", "moved",  "adopted", "loves",  "the",   "a",      "went",    "to",
      "camp",   "music",  "blue",    "lake",   "2023",  "friday", "cake",    "yoga",
      "books",  "garden", "painted", "sunset", "trip",  "office"};
  memrouter::Rng rng(seed);
  RandomStore out;
  out.store = std::make_unique<memrouter::MemoryStore>(provider);
  const std::size_t n_sessions = 1 + rng.index(8);
  for (std::size_t s = 0; s < n_sessions; ++s) {
    memrouter::Session session;
    session.session_id = "s" + std::to_string(s);
    session.datetime = {2023, 1 + int(s), 1 + int(rng.index(27)), int(rng.index(24)), 0};
    if (s > 0 && rng.uniform() < 0.3) session.datetime = out.sessions.back().datetime;
    out.sessions.push_back(session);
  }
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n_items; ++i) {
    std::string text;
    if (!texts.empty() && rng.uniform() < 0.15) {
      text = texts[rng.index(texts.size())];
    } else {
      const std::size_t len = 1 + rng.index(9);
      for (std::size_t w = 0; w < len; ++w) text += (w ? " " : "") + vocab[rng.index(vocab.size())];
    }
    texts.push_back(text);
    memrouter::Turn turn;
    turn.turn_id = "t" + std::to_string(rng.index(100000)) + "-" + std::to_string(i);
    turn.speaker = out.speakers[rng.index(out.speakers.size())];
    turn.text = text;
    turn.turn_index = i;
    const auto& session = out.sessions[rng.index(out.sessions.size())];
    turn.session_ref = session.session_id;
    out.store->admit(turn, session);
  }
  return out;
}

inline memrouter::Query random_query(memrouter::Rng& rng, const RandomStore& rs) {
  static const std::vector<std::string> questions = {
      "What did Ana adopt?",           "When did Bo go to Paris?",
      "What does Cyd love?",           "Which music does Ana like in March?",
      "How long was the hiking trip?", "What did someone paint?",
      "Where is the lake?",            "What happened in 2023 on a friday?",
      "dog cat dog",                   "zzz unknown words"};
  static const memrouter::Category cats[] = {
      memrouter::Category::SingleHop, memrouter::Category::MultiHop,
      memrouter::Category::Temporal, memrouter::Category::OpenDomain};
  return memrouter::Query::from_text(questions[rng.index(questions.size())], cats[rng.index(4)],
                                     rs.speakers);
}

}  // namespace testutil
