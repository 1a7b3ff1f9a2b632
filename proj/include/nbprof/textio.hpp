#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "nbprof/error.hpp"

namespace nbprof {

/// Formats a double with 17 significant digits, enough to round-trip
/// any IEEE-754 double through text exactly.
inline std::string format_cost(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Shortest decimal form that still round-trips; used for report tables.
inline std::string format_value(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return format_cost(v);
    return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n';
    };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

inline double parse_double(std::string_view s, std::string_view what) {
    const std::string tmp(trim(s));
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || tmp.empty())
        throw data_error("failed to parse number for " + std::string(what) +
                         ": '" + tmp + "'");
    return v;
}

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
    s = trim(s);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw data_error("failed to parse integer for " + std::string(what) +
                         ": '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::string_view what) {
    s = trim(s);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw data_error("failed to parse count for " + std::string(what) +
                         ": '" + std::string(s) + "'");
    return v;
}

/// FNV-1a over a string; used to stamp outputs with a config fingerprint.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace nbprof
