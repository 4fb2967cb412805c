#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memrouter {

std::string to_lower(std::string_view s);

/// Lowercased, whitespace-delimited tokens. Punctuation stays attached.
std::vector<std::string> whitespace_tokens(std::string_view s);

/// Lowercased maximal runs of ASCII alphanumerics; everything else separates.
std::vector<std::string> alnum_tokens(std::string_view s);

/// Case-insensitive whole-word search; `phrase` may contain spaces.
bool contains_word(std::string_view text, std::string_view phrase);
/// Offset of the first whole-word match, or npos.
std::size_t find_word(std::string_view text, std::string_view phrase);

bool is_all_digits(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string trim(std::string_view s);

}  // namespace memrouter
