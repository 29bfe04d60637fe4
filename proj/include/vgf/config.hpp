// ----------------------------------------------------------------------------
// Copyright 2026 The vgf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#ifndef VGF_CONFIG_HPP
#define VGF_CONFIG_HPP

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vgf/errors.hpp"

namespace vgf {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat `key = value` configuration, one pair per line, `#` comments.
/// Reads materialize their defaults so a snapshot written after setup holds
/// every key a rerun needs; keys nobody consumed are typos and fail the run.
class Config {
public:
    Config() = default;

    static Config parse(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            std::string key = trim(trimmed.substr(0, eq));
            std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            cfg.kv_[key] = value;
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open config file " + path);
        std::stringstream ss;
        ss << is.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) {
        kv_[key] = value;
        consumed_.insert(key);
    }

    /// Accept a key that this code path does not read (another command's
    /// section of a shared file). Typos still fail: only exact known names
    /// should ever be passed here.
    void mark_consumed(const std::string& key) {
        if (kv_.count(key)) consumed_.insert(key);
    }

    std::string get_str(const std::string& key, const std::string& fallback) {
        consumed_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) {
            kv_[key] = fallback;
            return fallback;
        }
        return it->second;
    }

    std::string require_str(const std::string& key) {
        consumed_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError("missing required config key '" + key + "'");
        return it->second;
    }

    long long get_int(const std::string& key, long long fallback) {
        return parse_int(key, get_str(key, std::to_string(fallback)));
    }

    long long require_int(const std::string& key) { return parse_int(key, require_str(key)); }

    double get_double(const std::string& key, double fallback) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", fallback);
        return parse_double(key, get_str(key, buf));
    }

    bool get_bool(const std::string& key, bool fallback) {
        std::string v = get_str(key, fallback ? "true" : "false");
        if (v == "true" || v == "1" || v == "on") return true;
        if (v == "false" || v == "0" || v == "off") return false;
        throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
    }

    /// Unknown keys are errors, not silently ignored typos.
    void ensure_all_consumed() const {
        std::string unknown;
        for (const auto& [k, v] : kv_)
            if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
        if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
    }

    /// Sorted key=value snapshot with all materialized defaults.
    void write(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw IoError("cannot write config snapshot to " + path);
        for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
    }

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }

    long long parse_int(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            long long r = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
        }
    }

    double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            double r = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
        }
    }

    std::map<std::string, std::string> kv_;
    std::set<std::string> consumed_;
};

}  // namespace vgf

#endif  // VGF_CONFIG_HPP
