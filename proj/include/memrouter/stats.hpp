#pragma once

#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

namespace memrouter {

/// Nearest-rank percentile: sorted[ceil(p * n) - 1], p in [0, 1].
double percentile(std::span<const double> values, double p);

struct ConfidenceInterval {
  double point = 0.0;  // sample mean
  double lower = 0.0;
  double upper = 0.0;
};

/// Percentile bootstrap of the mean: `resamples` resamples with replacement,
/// 2.5th / 97.5th nearest-rank percentiles of the resampled means. The bounds
/// are widened to include the point estimate if resampling falls short of it.
ConfidenceInterval bootstrap_ci(std::span<const double> scores, std::size_t resamples,
                                std::uint64_t seed, double level = 0.95);

/// Thread-safe sink for latency events in milliseconds.
class LatencyCollector {
 public:
  void record(double ms);
  std::vector<double> values() const;
  std::size_t size() const;
  double p50() const;
  double p95() const;

 private:
  mutable std::mutex mu_;
  std::vector<double> values_;
};

}  // namespace memrouter
