#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "nbprof/error.hpp"
#include "nbprof/textio.hpp"

namespace nbprof {

/// Sectioned key-value configuration: `[section]` headers, `key = value`
/// lines, `#`/`;` comments. Lookups are by "section.key".
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::istream& is,
                                const std::string& origin = "<stream>") {
        KeyValueConfig cfg;
        std::string line, section;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            std::string_view t = trim(line);
            if (t.empty() || t.front() == '#' || t.front() == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw data_error(origin + ":" + std::to_string(line_no) +
                                     ": malformed section header");
                section = std::string(trim(t.substr(1, t.size() - 2)));
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string_view::npos)
                throw data_error(origin + ":" + std::to_string(line_no) +
                                 ": expected key = value");
            const std::string key(trim(t.substr(0, eq)));
            const std::string value(trim(t.substr(eq + 1)));
            if (key.empty())
                throw data_error(origin + ":" + std::to_string(line_no) +
                                 ": empty key");
            cfg.values_[section.empty() ? key : section + "." + key] = value;
        }
        return cfg;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw data_error("config: cannot open '" + path + "'");
        return parse(is, path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) {
        values_[key] = value;
    }

    std::string get_string(const std::string& key,
                           const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw data_error("config: missing required key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : parse_double(it->second, key);
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : parse_int(it->second, key);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw data_error("config: key '" + key + "' is not a boolean: '" + v +
                         "'");
    }

    std::vector<std::string> get_list(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return {};
        auto parts = split(it->second, ',');
        std::erase_if(parts, [](const std::string& s) { return s.empty(); });
        return parts;
    }

    /// Canonical "key = value" dump (sorted); its hash stamps every output.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) {
            out += k;
            out += " = ";
            out += v;
            out += '\n';
        }
        return out;
    }

    std::string fingerprint() const { return to_hex(fnv1a(canonical())); }

private:
    std::map<std::string, std::string> values_;
};

} // namespace nbprof
