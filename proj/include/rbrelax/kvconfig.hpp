#pragma once

// Small key-value configuration format used by run configs and the atomic
// constants file:
//
//   # comment
//   [section]            (nested sections as [a.b])
//   key_hz = 6.8e9       (unit convention lives in the key suffix:
//   list   = [1, 2, 3]    _hz _s _gauss _cm3 _torr _k _mw _mm)
//   name   = "text"
//
// Parsing keeps line/column positions so validation errors point at the
// offending entry. Strict mode rejects keys nobody consumed; lenient mode
// turns them into warnings.

#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbrelax {

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line, int col)
        : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    int line;
    int col;
};

class KeyValueConfig {
public:
    struct Entry {
        std::string raw;
        int line = 0;
        int col = 0;
    };

    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text) {
        KeyValueConfig cfg;
        std::string section;
        int lineno = 0;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip_comment(line);
            std::size_t b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            std::size_t e = s.find_last_not_of(" \t\r");
            s = s.substr(b, e - b + 1);
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ConfigError("unterminated section header", lineno, static_cast<int>(b) + 1);
                section = s.substr(1, s.size() - 2);
                if (section.empty() || !valid_key(section))
                    throw ConfigError("invalid section name '" + section + "'", lineno, static_cast<int>(b) + 2);
                continue;
            }
            std::size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected 'key = value'", lineno, static_cast<int>(b) + 1);
            std::string key = trim(s.substr(0, eq));
            std::string val = trim(s.substr(eq + 1));
            if (key.empty() || !valid_key(key))
                throw ConfigError("invalid key '" + key + "'", lineno, static_cast<int>(b) + 1);
            if (val.empty())
                throw ConfigError("missing value for '" + key + "'", lineno, static_cast<int>(b + eq) + 2);
            std::string full = section.empty() ? key : section + "." + key;
            if (cfg.entries_.count(full))
                throw ConfigError("duplicate key '" + full + "'", lineno, static_cast<int>(b) + 1);
            cfg.entries_[full] = Entry{val, lineno, static_cast<int>(b) + 1};
        }
        return cfg;
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    double get_double(const std::string& key) const {
        const Entry& e = require(key);
        return parse_double(e.raw, key, e);
    }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }
    int get_int(const std::string& key) const {
        double v = get_double(key);
        if (std::abs(v - std::llround(v)) > 1e-9) {
            const Entry& e = require(key);
            throw ConfigError("expected integer for '" + key + "'", e.line, e.col);
        }
        return static_cast<int>(std::llround(v));
    }
    int get_int(const std::string& key, int fallback) const {
        return has(key) ? get_int(key) : fallback;
    }
    bool get_bool(const std::string& key) const {
        const Entry& e = require(key);
        if (e.raw == "true" || e.raw == "on" || e.raw == "yes") return true;
        if (e.raw == "false" || e.raw == "off" || e.raw == "no") return false;
        throw ConfigError("expected boolean for '" + key + "'", e.line, e.col);
    }
    bool get_bool(const std::string& key, bool fallback) const {
        return has(key) ? get_bool(key) : fallback;
    }
    std::string get_string(const std::string& key) const {
        const Entry& e = require(key);
        std::string v = e.raw;
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
        return v;
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? get_string(key) : fallback;
    }
    std::vector<double> get_double_list(const std::string& key) const {
        const Entry& e = require(key);
        if (e.raw.front() != '[' || e.raw.back() != ']')
            throw ConfigError("expected list [..] for '" + key + "'", e.line, e.col);
        std::vector<double> out;
        std::string body = e.raw.substr(1, e.raw.size() - 2);
        std::size_t pos = 0;
        while (pos < body.size()) {
            std::size_t comma = body.find(',', pos);
            std::string item = trim(body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
            if (!item.empty()) out.push_back(parse_double(item, key, e));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return out;
    }

    /// Keys present in the file but never read. Used for strict-mode checks.
    std::vector<std::string> unconsumed() const {
        std::vector<std::string> out;
        for (const auto& [k, e] : entries_)
            if (!consumed_.count(k)) out.push_back(k + " (line " + std::to_string(e.line) + ")");
        return out;
    }

    const Entry* entry(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

private:
    const Entry& require(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'", 0, 0);
        consumed_.insert(key);
        return it->second;
    }
    static double parse_double(const std::string& s, const std::string& key, const Entry& e) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("expected number for '" + key + "', got '" + s + "'", e.line, e.col);
        }
    }
    static std::string strip_comment(const std::string& line) {
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) return line.substr(0, i);
        }
        return line;
    }
    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }
    static bool valid_key(const std::string& k) {
        for (char c : k)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') return false;
        return true;
    }

    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> consumed_;
};

} // namespace rbrelax
