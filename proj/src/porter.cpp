#include "memrouter/porter.hpp"

#include <array>
#include <functional>

namespace memrouter {

namespace {

bool is_consonant(std::string_view w, std::size_t i) {
  switch (w[i]) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return false;
    case 'y':
      return i == 0 || !is_consonant(w, i - 1);
    default:
      return true;
  }
}

// Number of VC sequences in [C](VC)^m[V].
int measure(std::string_view stem) {
  int m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < stem.size(); ++i) {
    const bool c = is_consonant(stem, i);
    if (c && prev_vowel) ++m;
    prev_vowel = !c;
  }
  return m;
}

bool has_vowel(std::string_view stem) {
  for (std::size_t i = 0; i < stem.size(); ++i) {
    if (!is_consonant(stem, i)) return true;
  }
  return false;
}

bool ends_double_consonant(std::string_view w) {
  const auto n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: stem ends cvc where the final c is not w, x or y.
bool ends_cvc(std::string_view w) {
  const auto n = w.size();
  if (n < 3) return false;
  if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1)) return false;
  const char last = w[n - 1];
  return last != 'w' && last != 'x' && last != 'y';
}

using Condition = std::function<bool(std::string_view)>;

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
  Condition condition;
};

bool m_gt0(std::string_view s) { return measure(s) > 0; }
bool m_gt1(std::string_view s) { return measure(s) > 1; }

// The first rule whose suffix matches decides; a failed condition leaves the
// word untouched.
template <std::size_t N>
std::string apply_rules(std::string word, const std::array<Rule, N>& rules) {
  for (const auto& r : rules) {
    if (!word.ends_with(r.suffix)) continue;
    const std::string_view stem(word.data(), word.size() - r.suffix.size());
    if (!r.condition || r.condition(stem)) return std::string(stem) + std::string(r.replacement);
    return word;
  }
  return word;
}

std::string step1a(std::string w) {
  static const std::array<Rule, 4> rules = {{
      {"sses", "ss", nullptr},
      {"ies", "i", nullptr},
      {"ss", "ss", nullptr},
      {"s", "", nullptr},
  }};
  return apply_rules(std::move(w), rules);
}

std::string step1b(std::string w) {
  if (w.ends_with("eed")) {
    const std::string_view stem(w.data(), w.size() - 3);
    if (measure(stem) > 0) return std::string(stem) + "ee";
    return w;
  }
  std::string stem;
  bool stripped = false;
  for (std::string_view suffix : {std::string_view("ed"), std::string_view("ing")}) {
    if (w.ends_with(suffix)) {
      stem = w.substr(0, w.size() - suffix.size());
      if (has_vowel(stem)) {
        stripped = true;
        break;
      }
    }
  }
  if (!stripped) return w;
  if (stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz")) return stem + "e";
  if (ends_double_consonant(stem)) {
    const char last = stem.back();
    if (last != 'l' && last != 's' && last != 'z') stem.pop_back();
    return stem;
  }
  if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
  return stem;
}

std::string step1c(std::string w) {
  static const std::array<Rule, 1> rules = {{{"y", "i", has_vowel}}};
  return apply_rules(std::move(w), rules);
}

std::string step2(std::string w) {
  static const std::array<Rule, 20> rules = {{
      {"ational", "ate", m_gt0}, {"tional", "tion", m_gt0}, {"enci", "ence", m_gt0},
      {"anci", "ance", m_gt0},   {"izer", "ize", m_gt0},    {"abli", "able", m_gt0},
      {"alli", "al", m_gt0},     {"entli", "ent", m_gt0},   {"eli", "e", m_gt0},
      {"ousli", "ous", m_gt0},   {"ization", "ize", m_gt0}, {"ation", "ate", m_gt0},
      {"ator", "ate", m_gt0},    {"alism", "al", m_gt0},    {"iveness", "ive", m_gt0},
      {"fulness", "ful", m_gt0}, {"ousness", "ous", m_gt0}, {"aliti", "al", m_gt0},
      {"iviti", "ive", m_gt0},   {"biliti", "ble", m_gt0},
  }};
  return apply_rules(std::move(w), rules);
}

std::string step3(std::string w) {
  static const std::array<Rule, 7> rules = {{
      {"icate", "ic", m_gt0}, {"ative", "", m_gt0}, {"alize", "al", m_gt0},
      {"iciti", "ic", m_gt0}, {"ical", "ic", m_gt0}, {"ful", "", m_gt0},
      {"ness", "", m_gt0},
  }};
  return apply_rules(std::move(w), rules);
}

std::string step4(std::string w) {
  static const Condition ion = [](std::string_view s) {
    return measure(s) > 1 && !s.empty() && (s.back() == 's' || s.back() == 't');
  };
  static const std::array<Rule, 19> rules = {{
      {"al", "", m_gt1},   {"ance", "", m_gt1}, {"ence", "", m_gt1}, {"er", "", m_gt1},
      {"ic", "", m_gt1},   {"able", "", m_gt1}, {"ible", "", m_gt1}, {"ant", "", m_gt1},
      {"ement", "", m_gt1}, {"ment", "", m_gt1}, {"ent", "", m_gt1}, {"ion", "", ion},
      {"ou", "", m_gt1},   {"ism", "", m_gt1},  {"ate", "", m_gt1},  {"iti", "", m_gt1},
      {"ous", "", m_gt1},  {"ive", "", m_gt1},  {"ize", "", m_gt1},
  }};
  return apply_rules(std::move(w), rules);
}

std::string step5a(std::string w) {
  if (!w.ends_with('e')) return w;
  const std::string_view stem(w.data(), w.size() - 1);
  const int m = measure(stem);
  if (m > 1 || (m == 1 && !ends_cvc(stem))) return std::string(stem);
  return w;
}

std::string step5b(std::string w) {
  if (w.ends_with("ll") && measure(std::string_view(w.data(), w.size() - 1)) > 1) w.pop_back();
  return w;
}

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w(word);
  if (w.size() <= 2) return w;
  w = step1a(std::move(w));
  w = step1b(std::move(w));
  w = step1c(std::move(w));
  w = step2(std::move(w));
  w = step3(std::move(w));
  w = step4(std::move(w));
  w = step5a(std::move(w));
  w = step5b(std::move(w));
  return w;
}

}  // namespace memrouter
