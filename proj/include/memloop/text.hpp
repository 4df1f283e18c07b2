#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memloop {

// Trims ASCII whitespace from both ends.
std::string_view trim_view(std::string_view s);
std::string trim(std::string_view s);

std::string to_lower(std::string_view s);

// Splits on runs of ASCII whitespace; empty tokens are never produced.
std::vector<std::string> split_words(std::string_view s);

bool is_blank(std::string_view s);

}  // namespace memloop
