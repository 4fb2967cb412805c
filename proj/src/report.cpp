#include "memrouter/report.hpp"

#include <cstdio>
#include "json.hpp"
#include <numeric>

#include "memrouter/metrics.hpp"

namespace memrouter {

namespace {

ConfidenceInterval percent_ci(const std::vector<double>& scores, const ReportOptions& o) {
  ConfidenceInterval ci;
  if (scores.empty()) return ci;
  if (scores.size() < 2) {
    ci.point = ci.lower = ci.upper = scores.front();
  } else {
    ci = bootstrap_ci(scores, o.resamples, o.seed);
  }
  ci.point *= 100.0;
  ci.lower *= 100.0;
  ci.upper *= 100.0;
  return ci;
}

nlohmann::ordered_json ci_json(const ConfidenceInterval& ci) {
  return {{"lower", ci.lower}, {"upper", ci.upper}};
}

nlohmann::ordered_json latency_json(const LatencySummary& l) {
  return {{"events", l.events}, {"p50_ms", l.p50_ms}, {"p95_ms", l.p95_ms}};
}

}  // namespace

double score_record(const AnswerRecord& rec) {
  if (!rec.answered) return 0.0;
  return category_score(rec.raw_answer, rec.gold_answer, rec.category);
}

LatencySummary summarize(const LatencyCollector& c) {
  return {c.size(), c.p50(), c.p95()};
}

EvalReport score_answers(std::span<const AnswerRecord> records, const ReportOptions& options) {
  EvalReport r;
  std::vector<double> all;
  std::map<Category, std::vector<double>> by_cat;
  for (const auto& rec : records) {
    if (rec.category == Category::Adversarial) continue;
    const double s = score_record(rec);
    all.push_back(s);
    by_cat[rec.category].push_back(s);
    if (!rec.answered) ++r.unanswered;
  }
  r.questions = all.size();
  r.overall_ci = percent_ci(all, options);
  r.overall_f1 = r.overall_ci.point;
  for (auto& [cat, scores] : by_cat) {
    CategoryResult c;
    c.count = scores.size();
    c.ci = percent_ci(scores, options);
    c.f1 = c.ci.point;
    r.per_category[cat] = c;
  }
  return r;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  if (!r.label.empty()) j["label"] = r.label;
  j["questions"] = r.questions;
  j["unanswered"] = r.unanswered;
  j["overall"] = {{"f1", r.overall_f1}, {"ci95", ci_json(r.overall_ci)}};
  nlohmann::ordered_json cats = nlohmann::ordered_json::object();
  for (const auto& [cat, c] : r.per_category) {
    cats[std::string(to_string(cat))] = {{"count", c.count}, {"f1", c.f1}, {"ci95", ci_json(c.ci)}};
  }
  j["categories"] = cats;
  j["latency"] = {{"memory_mgmt", latency_json(r.memory_mgmt)}, {"qa", latency_json(r.qa)}};
  j["wall_seconds"] = r.wall_seconds;
  j["throughput_qps"] = r.throughput_qps;
  j["generation_calls"] = {{"write_path", r.write_generation_calls},
                           {"read_path", r.read_generation_calls}};
  j["storage"] = {{"total_turns", r.total_turns},
                  {"stored_turns", r.stored_turns},
                  {"fraction", r.total_turns ? static_cast<double>(r.stored_turns) /
                                                   static_cast<double>(r.total_turns)
                                             : 0.0}};
  return j.dump(2);
}

std::string report_table(std::span<const EvalReport> reports) {
  std::size_t label_width = 6;
  for (const auto& r : reports) label_width = std::max(label_width, r.label.size());
  auto cell = [](const EvalReport& r, Category c) {
    auto it = r.per_category.find(c);
    if (it == r.per_category.end()) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", it->second.f1);
    return std::string(buf);
  };
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %8s %8s %8s %8s %8s\n", static_cast<int>(label_width),
                "Policy", "Overall", "Single", "Multi", "Temp.", "Open");
  out += line;
  for (const auto& r : reports) {
    char overall[32];
    std::snprintf(overall, sizeof overall, "%.1f", r.overall_f1);
    std::snprintf(line, sizeof line, "%-*s %8s %8s %8s %8s %8s\n", static_cast<int>(label_width),
                  r.label.c_str(), overall, cell(r, Category::SingleHop).c_str(),
                  cell(r, Category::MultiHop).c_str(), cell(r, Category::Temporal).c_str(),
                  cell(r, Category::OpenDomain).c_str());
    out += line;
  }
  return out;
}

}  // namespace memrouter
