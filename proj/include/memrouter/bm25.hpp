#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace memrouter {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Document statistics for Okapi BM25 over one collection.
struct CorpusStats {
  std::size_t doc_count = 0;
  std::size_t total_length = 0;
  std::map<std::string, std::size_t, std::less<>> doc_freq;

  double avg_length() const noexcept {
    return doc_count ? static_cast<double>(total_length) / static_cast<double>(doc_count) : 0.0;
  }
  /// ln((N - n + 0.5) / (n + 0.5) + 1)
  double idf(std::string_view term) const;
};

/// Term frequencies of one tokenized document.
struct TermBag {
  std::map<std::string, std::size_t, std::less<>> tf;
  std::size_t length = 0;

  static TermBag from_tokens(std::span<const std::string> tokens);
};

/// Sums the per-term contribution over every query token occurrence, so a
/// repeated query term counts once per repetition.
double bm25(std::span<const std::string> query_tokens, const TermBag& doc,
            const CorpusStats& stats, const Bm25Params& params = {});

class Bm25Index {
 public:
  explicit Bm25Index(Bm25Params params = {}) : params_(params) {}

  void add(std::span<const std::string> tokens);
  std::size_t size() const noexcept { return docs_.size(); }
  const CorpusStats& stats() const noexcept { return stats_; }
  const TermBag& doc(std::size_t i) const { return docs_[i]; }

  double score(std::span<const std::string> query_tokens, std::size_t doc) const;
  std::vector<double> score_all(std::span<const std::string> query_tokens) const;

 private:
  Bm25Params params_;
  CorpusStats stats_;
  std::vector<TermBag> docs_;
};

}  // namespace memrouter
