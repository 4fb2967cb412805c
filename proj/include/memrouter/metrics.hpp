#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "memrouter/corpus.hpp"

namespace memrouter {

/// Lowercase, delete ASCII punctuation, drop {a, an, the, and}, split on
/// whitespace. No stemming.
std::vector<std::string> normalize_tokens(std::string_view answer);

/// normalize_tokens followed by Porter stemming of each token.
std::vector<std::string> normalize(std::string_view answer);

/// Multiset-overlap F1 of normalized token sequences. Both empty scores 1,
/// exactly one empty scores 0.
double token_f1(std::string_view prediction, std::string_view gold);

/// multi_hop: split both sides on raw commas, best prediction part per gold
/// part, averaged over gold parts. open_domain: gold cut at the first ';'.
/// Throws InvariantError for adversarial questions.
double category_score(std::string_view prediction, std::string_view gold, Category category);

}  // namespace memrouter
