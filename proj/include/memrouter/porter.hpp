#pragma once

#include <string>
#include <string_view>

namespace memrouter {

/// Porter's original 1980 suffix-stripping algorithm (not Porter2). Input is
/// expected lowercase; words of one or two letters are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace memrouter
