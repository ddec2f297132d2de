#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memvqa::text {

std::string trim(std::string_view s);

/// Trims and collapses every run of whitespace into a single space.
std::string collapse_whitespace(std::string_view s);

std::string to_lower_ascii(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Orders strings so that embedded digit runs compare numerically ("frame2" < "frame10").
bool natural_less(std::string_view a, std::string_view b);

/// 64-bit FNV-1a. Stable across platforms; used for prompt hashes and chaos decisions.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

std::string base64_encode(std::string_view bytes);

}  // namespace memvqa::text
