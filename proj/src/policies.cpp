#include "memrouter/policies.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>

#include "memrouter/error.hpp"
#include "memrouter/rng.hpp"
#include "memrouter/text.hpp"

namespace memrouter {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr std::array<std::string_view, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};
constexpr std::array<std::string_view, 7> kWeekdays = {
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
constexpr std::array<std::string_view, 15> kEventWords = {
    "plan",     "planning", "bought", "adopted", "moved", "started", "prefer", "favorite",
    "love",     "hate",     "birthday", "appointment", "trip", "job",   "promotion"};

template <std::size_t N>
bool in(const std::array<std::string_view, N>& words, std::string_view t) {
  return std::find(words.begin(), words.end(), t) != words.end();
}

// Shared loop: times each turn and tags every score with the policy name.
template <typename F>
std::vector<PolicyScore> score_turns(const Conversation& conv, const std::string& name,
                                     LatencyCollector* latency, F&& fn) {
  const auto turns = conv.turns();
  std::vector<PolicyScore> out;
  out.reserve(turns.size());
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto start = Clock::now();
    PolicyScore s;
    s.turn_id = turns[i].turn->turn_id;
    s.turn_index = turns[i].turn->turn_index;
    s.policy_name = name;
    fn(turns, i, s);
    if (latency) latency->record(elapsed_ms(start));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<bool> Policy::admit(std::span<const PolicyScore> scores) const {
  std::vector<bool> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i].score >= threshold();
  return out;
}

std::vector<PolicyScore> StoreAllPolicy::score(const Conversation& conv,
                                               LatencyCollector* latency) const {
  return score_turns(conv, name(), latency,
                     [](const auto&, std::size_t, PolicyScore& s) { s.score = 1.0; });
}

std::vector<PolicyScore> RandomPolicy::score(const Conversation& conv,
                                             LatencyCollector* latency) const {
  Rng rng(derive_seed(seed_, conv.conversation_id));
  return score_turns(conv, name(), latency,
                     [&](const auto&, std::size_t, PolicyScore& s) { s.score = rng.uniform(); });
}

std::vector<PolicyScore> RecentKPolicy::score(const Conversation& conv,
                                              LatencyCollector* latency) const {
  return score_turns(conv, name(), latency, [](const auto& turns, std::size_t i, PolicyScore& s) {
    s.score = static_cast<double>(turns[i].turn->turn_index);
  });
}

std::vector<bool> RecentKPolicy::admit(std::span<const PolicyScore> scores) const {
  std::vector<bool> out(scores.size(), false);
  const std::size_t keep = std::min(k_, scores.size());
  std::fill(out.end() - static_cast<std::ptrdiff_t>(keep), out.end(), true);
  return out;
}

std::size_t keyword_hits(std::string_view text) {
  std::size_t hits = 0;
  for (const auto& t : alnum_tokens(text)) {
    if (in(kMonths, t) || in(kWeekdays, t) || in(kEventWords, t) || is_all_digits(t)) ++hits;
  }
  return hits;
}

std::vector<PolicyScore> KeywordPolicy::score(const Conversation& conv,
                                              LatencyCollector* latency) const {
  return score_turns(conv, name(), latency, [](const auto& turns, std::size_t i, PolicyScore& s) {
    s.score = static_cast<double>(keyword_hits(turns[i].turn->text));
  });
}

RouterPolicy::RouterPolicy(std::shared_ptr<const RouterParams> params,
                           std::shared_ptr<const Contextualizer> contextualizer,
                           std::shared_ptr<const EmbeddingProvider> provider, double threshold)
    : params_(std::move(params)),
      f_(std::move(contextualizer)),
      provider_(std::move(provider)),
      threshold_(threshold) {
  if (!params_) throw InvariantError("router policy needs a trained checkpoint");
  if (!f_ || !provider_) throw InvariantError("router policy needs a contextualizer and provider");
}

std::vector<PolicyScore> RouterPolicy::score(const Conversation& conv,
                                             LatencyCollector* latency) const {
  std::vector<const Turn*> history;
  return score_turns(conv, name(), latency, [&](const auto& turns, std::size_t i, PolicyScore& s) {
    const auto d = route_turn(*params_, *f_, *provider_, history, *turns[i].turn, threshold_);
    s.score = d.add_score;
    if (d.op == Op::Add) s.content_type = d.content_type;
    history.push_back(turns[i].turn);
  });
}

MlpOnlyPolicy::MlpOnlyPolicy(std::shared_ptr<const RouterParams> params,
                             std::shared_ptr<const EmbeddingProvider> provider, double threshold)
    : params_(std::move(params)),
      identity_(params_ ? params_->dims.model : 0),
      provider_(std::move(provider)),
      threshold_(threshold) {
  if (!params_) throw InvariantError("mlp-only policy needs a trained checkpoint");
  if (!provider_) throw InvariantError("mlp-only policy needs a provider");
}

std::vector<PolicyScore> MlpOnlyPolicy::score(const Conversation& conv,
                                              LatencyCollector* latency) const {
  return score_turns(conv, name(), latency, [&](const auto& turns, std::size_t i, PolicyScore& s) {
    const auto d = route_turn(*params_, identity_, *provider_, {}, *turns[i].turn, threshold_);
    s.score = d.add_score;
    if (d.op == Op::Add) s.content_type = d.content_type;
  });
}

std::size_t budget_count(double target_fraction, std::size_t n) {
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
    throw InvariantError("budget target must lie in (0, 1]");
  }
  const double exact = target_fraction * static_cast<double>(n);
  const auto count = static_cast<std::size_t>(std::floor(exact + 0.5 + 1e-9));
  return std::min(count, n);
}

std::vector<bool> budget_match(std::span<const PolicyScore> scores, double target_fraction) {
  const std::size_t keep = budget_count(target_fraction, scores.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].score != scores[b].score) return scores[a].score > scores[b].score;
    return scores[a].turn_index < scores[b].turn_index;
  });
  std::vector<bool> out(scores.size(), false);
  for (std::size_t i = 0; i < keep; ++i) out[order[i]] = true;
  return out;
}

std::vector<SweepPoint> threshold_sweep(std::span<const PolicyScore> scores,
                                        std::span<const double> thresholds) {
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double t = thresholds[i];
    if (!(t > 0.0 && t < 1.0)) throw InvariantError("sweep thresholds must lie in (0, 1)");
    if (i > 0 && !(t > thresholds[i - 1])) {
      throw InvariantError("sweep thresholds must be strictly increasing");
    }
    SweepPoint p;
    p.threshold = t;
    p.selected.resize(scores.size());
    std::size_t kept = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      p.selected[j] = scores[j].score >= t;
      kept += p.selected[j];
    }
    p.store_fraction =
        scores.empty() ? 0.0 : static_cast<double>(kept) / static_cast<double>(scores.size());
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> parse_thresholds(std::string_view spec) {
  auto number = [&](std::string_view s) {
    const std::string t = trim(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != t.size()) {
      throw ParseError("thresholds", "not a number: '" + t + "'");
    }
    return v;
  };
  std::vector<double> out;
  if (spec.find(':') != std::string_view::npos) {
    const auto a = spec.find(':');
    const auto b = spec.find(':', a + 1);
    if (b == std::string_view::npos) throw ParseError("thresholds", "expected lo:hi:step");
    const double lo = number(spec.substr(0, a));
    const double hi = number(spec.substr(a + 1, b - a - 1));
    const double step = number(spec.substr(b + 1));
    if (!(step > 0.0) || hi < lo) throw ParseError("thresholds", "empty range");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) {
      out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
    }
    return out;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto pos = spec.find(',', start);
    out.push_back(number(spec.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

GridSummary FactorialGrid::summarize(const std::set<std::string>& unmatched) const {
  GridSummary summary;
  for (const auto& p : policies) {
    for (const auto& r : retrievals) {
      for (const auto& q : prompts) {
        if (!cells.contains({p, r, q})) summary.missing.push_back({p, r, q});
      }
    }
  }
  auto marginal = [&](std::string factor, const std::string& level, auto&& matches,
                      std::size_t expected) {
    Marginal m;
    m.factor = std::move(factor);
    m.level = level;
    m.expected = expected;
    double sum = 0.0;
    for (const auto& [key, value] : cells) {
      if (!matches(key)) continue;
      sum += value;
      ++m.cells;
    }
    m.mean = m.cells ? sum / static_cast<double>(m.cells) : 0.0;
    return m;
  };
  auto known_policy = [&](const std::string& p) {
    return std::find(policies.begin(), policies.end(), p) != policies.end();
  };
  const std::size_t per_policy = retrievals.size() * prompts.size();
  for (const auto& p : policies) {
    auto m = marginal("policy", p, [&](const GridCellKey& k) { return k.policy == p; },
                      per_policy);
    (unmatched.contains(p) ? summary.separate : summary.policy).push_back(std::move(m));
  }
  for (const auto& r : retrievals) {
    summary.retrieval.push_back(marginal(
        "retrieval", r,
        [&](const GridCellKey& k) { return k.retrieval == r && known_policy(k.policy); },
        policies.size() * prompts.size()));
  }
  for (const auto& q : prompts) {
    summary.prompt.push_back(marginal(
        "prompt", q, [&](const GridCellKey& k) { return k.prompt == q && known_policy(k.policy); },
        policies.size() * retrievals.size()));
  }
  return summary;
}

}  // namespace memrouter
