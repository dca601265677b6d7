#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace collapsar {

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Strict parsers: the whole (trimmed) text must be consumed. Throw InputError.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
bool parse_bool(std::string_view text);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace collapsar
