#include "ehpa/text.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "ehpa/errors.hpp"

namespace ehpa::text {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s, std::string_view what) {
    const std::string tmp(trim(s));
    if (tmp.empty()) throw ConfigError("empty value for " + std::string(what));
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ConfigError("invalid number '" + tmp + "' for " + std::string(what));
    }
    return v;
}

long parse_long(std::string_view s, std::string_view what) {
    const std::string tmp(trim(s));
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(tmp.c_str(), &end, 10);
    if (tmp.empty() || end != tmp.c_str() + tmp.size() || errno == ERANGE) {
        throw ConfigError("invalid integer '" + tmp + "' for " + std::string(what));
    }
    return v;
}

std::vector<double> parse_double_list(std::string_view s, std::string_view what) {
    std::vector<double> out;
    for (const auto& item : split(s, ',')) out.push_back(parse_double(item, what));
    return out;
}

}  // namespace ehpa::text
