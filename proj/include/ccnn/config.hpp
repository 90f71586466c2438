#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace ccnn {

// Raised for malformed config files, unknown keys, or bad values; the CLI
// maps it to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Flat key=value experiment configuration. Lines are `key = value`; blank
// lines and `#` comments are ignored. Later assignments (including --set
// overrides) win.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        Config c;
        std::string line;
        int64_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected key = value, got '" + trimmed + "'");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string val = trim(trimmed.substr(eq + 1));
            if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
            c.kv_[key] = val;
        }
        return c;
    }

    // "key=value" as passed to --set.
    void set_pair(const std::string& pair) {
        const size_t eq = pair.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--set expects key=value, got '" + pair + "'");
        kv_[trim(pair.substr(0, eq))] = trim(pair.substr(eq + 1));
    }

    void set(const std::string& key, const std::string& val) { kv_[key] = val; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_str(const std::string& key, const std::string& fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }
    std::string require_str(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError("missing required config key '" + key + "'");
        return it->second;
    }

    int64_t get_i64(const std::string& key, int64_t fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : parse_i64(key, it->second);
    }
    double get_f64(const std::string& key, double fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : parse_f64(key, it->second);
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("config key '" + key + "' expects a boolean, got '" + v + "'");
    }

    // Typo protection: every present key must be in the allowed set.
    void validate_keys(const std::set<std::string>& allowed) const {
        for (const auto& [k, v] : kv_) {
            if (!allowed.count(k)) {
                std::string msg = "unknown config key '" + k + "'";
                throw ConfigError(msg);
            }
        }
    }

    // Sorted "key=value" lines; basis for the config hash and for storing
    // the config inside checkpoints.
    std::string canonical() const {
        std::ostringstream os;
        for (const auto& [k, v] : kv_) os << k << "=" << v << "\n";
        return os.str();
    }
    std::string hash() const {
        char buf[19];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(hash_str(canonical())));
        return buf;
    }

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }
    static int64_t parse_i64(const std::string& key, const std::string& v) {
        try {
            size_t used = 0;
            int64_t r = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
        }
    }
    static double parse_f64(const std::string& key, const std::string& v) {
        try {
            size_t used = 0;
            double r = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
        }
    }

    std::map<std::string, std::string> kv_;
};

}  // namespace ccnn
