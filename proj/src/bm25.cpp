#include "memrouter/bm25.hpp"

#include <cmath>

namespace memrouter {

double CorpusStats::idf(std::string_view term) const {
  auto it = doc_freq.find(term);
  const double n = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
  const auto total = static_cast<double>(doc_count);
  return std::log((total - n + 0.5) / (n + 0.5) + 1.0);
}

TermBag TermBag::from_tokens(std::span<const std::string> tokens) {
  TermBag bag;
  for (const auto& t : tokens) ++bag.tf[t];
  bag.length = tokens.size();
  return bag;
}

double bm25(std::span<const std::string> query_tokens, const TermBag& doc,
            const CorpusStats& stats, const Bm25Params& params) {
  const double avgdl = stats.avg_length();
  const double len_norm =
      avgdl > 0.0 ? 1.0 - params.b + params.b * static_cast<double>(doc.length) / avgdl : 1.0;
  double score = 0.0;
  for (const auto& term : query_tokens) {
    auto it = doc.tf.find(term);
    if (it == doc.tf.end()) continue;
    const auto tf = static_cast<double>(it->second);
    score += stats.idf(term) * tf * (params.k1 + 1.0) / (tf + params.k1 * len_norm);
  }
  return score;
}

void Bm25Index::add(std::span<const std::string> tokens) {
  auto bag = TermBag::from_tokens(tokens);
  for (const auto& [term, _] : bag.tf) ++stats_.doc_freq[term];
  ++stats_.doc_count;
  stats_.total_length += bag.length;
  docs_.push_back(std::move(bag));
}

double Bm25Index::score(std::span<const std::string> query_tokens, std::size_t doc) const {
  return bm25(query_tokens, docs_[doc], stats_, params_);
}

std::vector<double> Bm25Index::score_all(std::span<const std::string> query_tokens) const {
  std::vector<double> out(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) out[i] = score(query_tokens, i);
  return out;
}

}  // namespace memrouter
