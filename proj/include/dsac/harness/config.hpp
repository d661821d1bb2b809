#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "dsac/errors.hpp"

// Run configuration: flat sectioned key = value text.
//
//   # comment
//   [env]
//   kind = explore_grid
//   width = 5
//
// Section and key order is preserved. Values are raw strings; the typed
// accessors parse them on demand.

namespace dsac::harness {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace detail

/// Locale-independent shortest round-trip text for a double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& what) {
    text = detail::trim(text);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ConfigError(what + ": expected a number, got '" + std::string(text) + "'");
    return v;
}

inline std::uint64_t parse_u64(std::string_view text, const std::string& what) {
    text = detail::trim(text);
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ConfigError(what + ": expected a non-negative integer, got '" + std::string(text) + "'");
    return v;
}

inline bool parse_bool(std::string_view text, const std::string& what) {
    text = detail::trim(text);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(what + ": expected true or false, got '" + std::string(text) + "'");
}

/// Splits on `sep`, trimming each piece; empty input gives no pieces.
inline std::vector<std::string> split_list(std::string_view text, char sep) {
    std::vector<std::string> out;
    text = detail::trim(text);
    if (text.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.emplace_back(detail::trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

class ConfigSection {
public:
    explicit ConfigSection(std::string name = {}) : name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }
    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    bool has(const std::string& key) const { return find(key) != nullptr; }

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return &v;
        return nullptr;
    }

    void set(const std::string& key, std::string value) {
        for (auto& [k, v] : entries_)
            if (k == key) { v = std::move(value); return; }
        entries_.emplace_back(key, std::move(value));
    }

    std::string label(const std::string& key) const { return "[" + name_ + "] " + key; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto* v = find(key);
        return v ? *v : fallback;
    }
    double get_double(const std::string& key, double fallback) const {
        const auto* v = find(key);
        return v ? parse_double(*v, label(key)) : fallback;
    }
    std::size_t get_size(const std::string& key, std::size_t fallback) const {
        const auto* v = find(key);
        return v ? static_cast<std::size_t>(parse_u64(*v, label(key))) : fallback;
    }
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const auto* v = find(key);
        return v ? parse_u64(*v, label(key)) : fallback;
    }
    bool get_bool(const std::string& key, bool fallback) const {
        const auto* v = find(key);
        return v ? parse_bool(*v, label(key)) : fallback;
    }

    bool operator==(const ConfigSection&) const = default;

private:
    std::string name_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

class RunConfig {
public:
    static RunConfig parse(std::istream& in, const std::string& origin = "<config>") {
        RunConfig cfg;
        std::string line;
        std::size_t lineno = 0;
        ConfigSection* current = nullptr;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            std::string_view text = detail::trim(std::string_view(line).substr(0, hash));
            if (text.empty()) continue;
            const std::string where = origin + ":" + std::to_string(lineno);
            if (text.front() == '[') {
                if (text.back() != ']') throw ConfigError(where + ": unterminated section header");
                const std::string name(detail::trim(text.substr(1, text.size() - 2)));
                if (name.empty()) throw ConfigError(where + ": empty section name");
                if (cfg.find(name)) throw ConfigError(where + ": duplicate section [" + name + "]");
                current = &cfg.section(name);
                continue;
            }
            const auto eq = text.find('=');
            if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
            if (!current) throw ConfigError(where + ": key outside any section");
            const std::string key(detail::trim(text.substr(0, eq)));
            if (key.empty()) throw ConfigError(where + ": empty key");
            if (current->has(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
            current->set(key, std::string(detail::trim(text.substr(eq + 1))));
        }
        return cfg;
    }

    static RunConfig parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config '" + path + "'");
        return parse(in, path);
    }

    std::string serialize() const {
        std::ostringstream out;
        bool first = true;
        for (const auto& s : sections_) {
            if (!first) out << '\n';
            first = false;
            out << '[' << s.name() << "]\n";
            for (const auto& [k, v] : s.entries()) out << k << " = " << v << '\n';
        }
        return out.str();
    }

    const ConfigSection* find(const std::string& name) const {
        for (const auto& s : sections_)
            if (s.name() == name) return &s;
        return nullptr;
    }

    /// Existing section, or a new empty one appended at the end.
    ConfigSection& section(const std::string& name) {
        for (auto& s : sections_)
            if (s.name() == name) return s;
        sections_.emplace_back(name);
        return sections_.back();
    }

    /// Read-only view; a missing section reads as empty.
    ConfigSection get(const std::string& name) const {
        const auto* s = find(name);
        return s ? *s : ConfigSection(name);
    }

    const std::vector<ConfigSection>& sections() const noexcept { return sections_; }

    bool operator==(const RunConfig&) const = default;

private:
    std::vector<ConfigSection> sections_;
};

} // namespace dsac::harness
