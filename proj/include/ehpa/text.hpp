#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ehpa::text {

/// Shortest round-trippable decimal form ("%.17g").
std::string format_double(double v);
/// Compact form ("%.10g") for labels.
std::string format_short(double v);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Strict parses; throw ConfigError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what);
long parse_long(std::string_view s, std::string_view what);
std::vector<double> parse_double_list(std::string_view s, std::string_view what);

}  // namespace ehpa::text
