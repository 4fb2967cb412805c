#include "memrouter/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "memrouter/error.hpp"
#include "memrouter/rng.hpp"

namespace memrouter {

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw InvariantError("percentile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::ptrdiff_t>(std::ceil(p * n - 1e-9));
  rank = std::clamp<std::ptrdiff_t>(rank, 1, static_cast<std::ptrdiff_t>(sorted.size()));
  return sorted[static_cast<std::size_t>(rank - 1)];
}

ConfidenceInterval bootstrap_ci(std::span<const double> scores, std::size_t resamples,
                                std::uint64_t seed, double level) {
  if (scores.size() < 2) throw InvariantError("bootstrap needs at least two scores");
  if (resamples < 1000) throw InvariantError("bootstrap needs at least 1000 resamples");
  const std::size_t n = scores.size();
  ConfidenceInterval ci;
  ci.point = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n);
  Rng rng(seed);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += scores[rng.index(n)];
    m = sum / static_cast<double>(n);
  }
  const double tail = (1.0 - level) / 2.0;
  ci.lower = std::min(percentile(means, tail), ci.point);
  ci.upper = std::max(percentile(means, 1.0 - tail), ci.point);
  return ci;
}

void LatencyCollector::record(double ms) {
  std::lock_guard lock(mu_);
  values_.push_back(ms);
}

std::vector<double> LatencyCollector::values() const {
  std::lock_guard lock(mu_);
  return values_;
}

std::size_t LatencyCollector::size() const {
  std::lock_guard lock(mu_);
  return values_.size();
}

double LatencyCollector::p50() const {
  const auto v = values();
  return v.empty() ? 0.0 : percentile(v, 0.50);
}

double LatencyCollector::p95() const {
  const auto v = values();
  return v.empty() ? 0.0 : percentile(v, 0.95);
}

}  // namespace memrouter
