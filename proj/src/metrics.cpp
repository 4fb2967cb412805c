#include "memrouter/metrics.hpp"

#include <algorithm>
#include <map>

#include "memrouter/error.hpp"
#include "memrouter/porter.hpp"
#include "memrouter/text.hpp"

namespace memrouter {

namespace {
constexpr std::string_view kPunctuation = R"(!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)";

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double f1_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::map<std::string_view, int> counts;
  for (const auto& t : gold) ++counts[t];
  int same = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return 0.0;
  const double p = static_cast<double>(same) / static_cast<double>(pred.size());
  const double r = static_cast<double>(same) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}
}  // namespace

std::vector<std::string> normalize_tokens(std::string_view answer) {
  std::string s;
  s.reserve(answer.size());
  for (char c : to_lower(answer)) {
    if (kPunctuation.find(c) == std::string_view::npos) s.push_back(c);
  }
  std::vector<std::string> out;
  for (auto& t : whitespace_tokens(s)) {
    if (t == "a" || t == "an" || t == "the" || t == "and") continue;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> normalize(std::string_view answer) {
  auto toks = normalize_tokens(answer);
  for (auto& t : toks) t = porter_stem(t);
  return toks;
}

double token_f1(std::string_view prediction, std::string_view gold) {
  return f1_tokens(normalize(prediction), normalize(gold));
}

double category_score(std::string_view prediction, std::string_view gold, Category category) {
  switch (category) {
    case Category::MultiHop: {
      const auto preds = split_on(prediction, ',');
      const auto golds = split_on(gold, ',');
      double total = 0.0;
      for (const auto& g : golds) {
        double best = 0.0;
        for (const auto& p : preds) best = std::max(best, token_f1(p, g));
        total += best;
      }
      return total / static_cast<double>(golds.size());
    }
    case Category::OpenDomain:
      return token_f1(prediction, trim(gold.substr(0, gold.find(';'))));
    case Category::SingleHop:
    case Category::Temporal:
      return token_f1(prediction, gold);
    case Category::Adversarial:
      break;
  }
  throw InvariantError("adversarial questions are not scored");
}

}  // namespace memrouter
