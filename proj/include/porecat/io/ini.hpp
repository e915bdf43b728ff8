#pragma once

// Minimal INI reader that remembers the line of every key, so schema
// errors can point at the offending line.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "porecat/errors.hpp"

namespace porecat {

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

} // namespace detail

class IniDocument {
public:
    struct Entry {
        std::string value;
        int line = 0;  ///< 0 for command-line overrides
        mutable bool used = false;
    };

    IniDocument() = default;

    static IniDocument parse(const std::string& text, std::string source) {
        IniDocument doc;
        doc.source_ = std::move(source);
        std::istringstream in(text);
        std::string raw, section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            std::string s = raw;
            if (auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
            s = detail::trim(s);
            if (!s.empty() && s.front() == ';') continue;
            if (s.empty()) continue;
            if (s.front() == '[') {
                PORECAT_REQUIRE(s.back() == ']', ConfigError, doc.where(line) + "unterminated section header");
                section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
                PORECAT_REQUIRE(!section.empty(), ConfigError, doc.where(line) + "empty section name");
                doc.sections_[section];
                doc.section_lines_.emplace(section, line);
                continue;
            }
            const auto eq = s.find('=');
            PORECAT_REQUIRE(eq != std::string::npos, ConfigError, doc.where(line) + "expected 'key = value'");
            const std::string key = detail::trim(std::string_view(s).substr(0, eq));
            const std::string value = detail::trim(std::string_view(s).substr(eq + 1));
            PORECAT_REQUIRE(!key.empty(), ConfigError, doc.where(line) + "empty key");
            auto& sec = doc.sections_[section];
            PORECAT_REQUIRE(!sec.contains(key), ConfigError,
                            doc.where(line) + "duplicate key '" + key + "' (first set on line " +
                                std::to_string(sec.at(key).line) + ")");
            sec[key] = Entry{value, line};
        }
        return doc;
    }

    static IniDocument load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), path);
    }

    /// Applies `section.key=value`; the key is the part after the last dot.
    void apply_override(const std::string& spec) {
        const auto eq = spec.find('=');
        PORECAT_REQUIRE(eq != std::string::npos, ConfigError, "override '" + spec + "': expected section.key=value");
        const std::string lhs = detail::trim(std::string_view(spec).substr(0, eq));
        const auto dot = lhs.rfind('.');
        PORECAT_REQUIRE(dot != std::string::npos && dot > 0 && dot + 1 < lhs.size(), ConfigError,
                        "override '" + spec + "': expected section.key=value");
        sections_[lhs.substr(0, dot)][lhs.substr(dot + 1)] = Entry{detail::trim(std::string_view(spec).substr(eq + 1)), 0};
    }

    const std::string& source() const { return source_; }

    bool has_section(const std::string& s) const { return sections_.contains(s); }

    std::vector<std::string> sections() const {
        std::vector<std::string> v;
        for (const auto& [k, _] : sections_) v.push_back(k);
        return v;
    }

    std::vector<std::string> keys(const std::string& section) const {
        std::vector<std::string> v;
        if (auto it = sections_.find(section); it != sections_.end())
            for (const auto& [k, _] : it->second) v.push_back(k);
        return v;
    }

    const Entry* find(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        if (it == sections_.end()) return nullptr;
        auto e = it->second.find(key);
        if (e == it->second.end()) return nullptr;
        e->second.used = true;
        return &e->second;
    }

    /// "file:line: " prefix for messages about a key.
    std::string where(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        if (it != sections_.end())
            if (auto e = it->second.find(key); e != it->second.end()) return where(e->second.line);
        if (auto s = section_lines_.find(section); s != section_lines_.end()) return where(s->second);
        return source_ + ": ";
    }

    std::string where(int line) const {
        if (line == 0) return source_ + ": override: ";
        return source_ + ":" + std::to_string(line) + ": ";
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
        throw ConfigError(where(section, key) + "[" + section + "] " + key + ": " + msg);
    }

    std::optional<std::string> get_string(const std::string& section, const std::string& key) const {
        if (const Entry* e = find(section, key)) return e->value;
        return std::nullopt;
    }

    std::string require_string(const std::string& section, const std::string& key) const {
        if (auto v = get_string(section, key)) return *v;
        throw ConfigError(where(section, key) + "missing required key '" + key + "' in [" + section + "]");
    }

    std::optional<double> get_double(const std::string& section, const std::string& key) const {
        const Entry* e = find(section, key);
        if (!e) return std::nullopt;
        return to_double(section, key, e->value);
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        return get_double(section, key).value_or(fallback);
    }

    double require_double(const std::string& section, const std::string& key) const {
        if (auto v = get_double(section, key)) return *v;
        throw ConfigError(where(section, key) + "missing required key '" + key + "' in [" + section + "]");
    }

    int get_int(const std::string& section, const std::string& key, int fallback) const {
        const Entry* e = find(section, key);
        if (!e) return fallback;
        int v = 0;
        const auto* b = e->value.data();
        const auto [p, ec] = std::from_chars(b, b + e->value.size(), v);
        if (ec != std::errc() || p != b + e->value.size()) fail(section, key, "expected an integer, got '" + e->value + "'");
        return v;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        const Entry* e = find(section, key);
        if (!e) return fallback;
        if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
        if (e->value == "false" || e->value == "no" || e->value == "0") return false;
        fail(section, key, "expected true or false, got '" + e->value + "'");
    }

    std::vector<double> get_doubles(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        const Entry* e = find(section, key);
        if (!e) return out;
        for (const auto& part : detail::split(e->value, ',')) out.push_back(to_double(section, key, part));
        return out;
    }

    std::vector<std::string> get_strings(const std::string& section, const std::string& key) const {
        const Entry* e = find(section, key);
        if (!e) return {};
        auto parts = detail::split(e->value, ',');
        for (const auto& p : parts)
            if (p.empty()) fail(section, key, "empty list entry");
        return parts;
    }

    /// Throws on the first key that no schema lookup consumed.
    void check_all_used() const {
        for (const auto& [sec, entries] : sections_)
            for (const auto& [key, e] : entries)
                if (!e.used) throw ConfigError(where(e.line) + "unknown key '" + key + "' in [" + sec + "]");
    }

private:
    double to_double(const std::string& section, const std::string& key, const std::string& text) const {
        const std::string t = detail::trim(text);
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (t.empty() || end != t.c_str() + t.size()) fail(section, key, "expected a number, got '" + t + "'");
        return v;
    }

    std::string source_ = "<config>";
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::map<std::string, int> section_lines_;
};

} // namespace porecat
