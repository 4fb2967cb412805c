#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "memrouter/qa.hpp"
#include "memrouter/stats.hpp"

namespace memrouter {

/// category_score of one record; unanswered questions score 0.
double score_record(const AnswerRecord& rec);

struct CategoryResult {
  std::size_t count = 0;
  double f1 = 0.0;  // percent
  ConfidenceInterval ci;  // percent
};

struct LatencySummary {
  std::size_t events = 0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

LatencySummary summarize(const LatencyCollector& c);

struct EvalReport {
  std::string label;
  std::size_t questions = 0;
  std::size_t unanswered = 0;
  double overall_f1 = 0.0;  // percent
  ConfidenceInterval overall_ci;
  std::map<Category, CategoryResult> per_category;
  LatencySummary memory_mgmt;
  LatencySummary qa;
  double wall_seconds = 0.0;
  double throughput_qps = 0.0;
  std::uint64_t write_generation_calls = 0;
  std::uint64_t read_generation_calls = 0;
  std::size_t total_turns = 0;
  std::size_t stored_turns = 0;
};

struct ReportOptions {
  std::size_t resamples = 10000;
  std::uint64_t seed = 42;
};

/// Per-question scores, per-category and overall F1 with bootstrap CIs.
/// Adversarial records are ignored.
EvalReport score_answers(std::span<const AnswerRecord> records, const ReportOptions& options = {});

std::string report_json(const EvalReport& report);

/// Aligned plain-text table: one row per report, columns
/// Overall / Single / Multi / Temp. / Open.
std::string report_table(std::span<const EvalReport> reports);

}  // namespace memrouter
