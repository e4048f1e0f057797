#pragma once

// Flat key=value configuration files, PricingSpec loading, and the CSV row
// format for prices.

#include <kolmo/errors.hpp>
#include <kolmo/payoff.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace kolmo {

struct ConfigEntry {
    std::string value;
    std::string source;  // "file:line" or "flag"
};

using ConfigMap = std::map<std::string, ConfigEntry>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// '#' starts a comment; blank lines are ignored; duplicate keys are errors.
inline ConfigMap parse_config(std::istream& in, const std::string& source = "config") {
    ConfigMap out;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(no);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (out.count(key)) throw ConfigError(where + ": key '" + key + "' set twice");
        out[key] = {value, where};
    }
    return out;
}

inline ConfigMap load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

inline double get_double(const ConfigMap& m, const std::string& key, double fallback) {
    const auto it = m.find(key);
    if (it == m.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second.value, &used);
        if (used != it->second.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(it->second.source + ": key '" + key + "' is not a number: '" + it->second.value + "'");
    }
}

inline std::string get_string(const ConfigMap& m, const std::string& key, const std::string& fallback) {
    const auto it = m.find(key);
    return it == m.end() ? fallback : it->second.value;
}

inline const std::vector<std::string>& pricing_keys() {
    static const std::vector<std::string> keys{"kind",  "payoff", "strike",   "maturity", "sigma",
                                               "mu",    "r",      "growth_M", "growth_C", "growth_alpha"};
    return keys;
}

// Unknown keys are rejected so that typos do not fall back to defaults.
inline PricingSpec pricing_spec_from_config(const ConfigMap& m) {
    for (const auto& [key, entry] : m) {
        bool known = false;
        for (const auto& k : pricing_keys()) known = known || k == key;
        if (!known) throw ConfigError(entry.source + ": unknown key '" + key + "'");
    }
    PricingSpec s;
    const std::string kind = get_string(m, "kind", "geometric");
    if (kind == "geometric") {
        s.kind = Averaging::geometric;
    } else if (kind == "arithmetic") {
        s.kind = Averaging::arithmetic;
    } else {
        throw ConfigError(m.at("kind").source + ": key 'kind' must be geometric or arithmetic, got '" + kind + "'");
    }
    s.payoff_name = get_string(m, "payoff", "call");
    s.strike = get_double(m, "strike", 1.0);
    s.maturity = get_double(m, "maturity", 1.0);
    s.sigma = get_double(m, "sigma", 0.4);
    s.mu = get_double(m, "mu", 0.0);
    s.r = get_double(m, "r", 0.0);
    s.growth.M = get_double(m, "growth_M", 1.0);
    s.growth.C = get_double(m, "growth_C", s.kind == Averaging::geometric ? 1.0 / s.maturity : 1.0);
    s.growth.alpha = get_double(m, "growth_alpha", 1.0);
    if (!(s.strike > 0.0)) throw ConfigError("key 'strike' must be positive");
    if (!(s.maturity > 0.0)) throw ConfigError("key 'maturity' must be positive");
    if (!(s.sigma > 0.0)) throw ConfigError("key 'sigma' must be positive");
    if (s.kind == Averaging::geometric && !(s.growth.alpha < 2.0))
        throw ConfigError("key 'growth_alpha' must be < 2 for geometric averaging");
    try {
        attach_payoff(s);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("key 'payoff': ") + e.what());
    }
    return s;
}

// Canonical text of a spec; the hash below is taken over it.
inline std::string canonical_string(const PricingSpec& s) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "kind=%s;payoff=%s;strike=%.17g;maturity=%.17g;sigma=%.17g;mu=%.17g;r=%.17g;"
                                   "M=%.17g;C=%.17g;alpha=%.17g",
                  to_string(s.kind).c_str(), s.payoff_name.c_str(), s.strike, s.maturity, s.sigma, s.mu, s.r,
                  s.growth.M, s.growth.C, s.growth.alpha);
    return buf;
}

// 64-bit FNV-1a of canonical_string, as 16 hex digits.
inline std::string spec_hash(const PricingSpec& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : canonical_string(s)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string price_csv_header() { return "spec_hash,price,error,method"; }

inline std::string price_csv_row(const PricingSpec& s, double price, double error, const std::string& method) {
    char buf[128];
    std::snprintf(buf, sizeof buf, ",%.12g,%.6g,", price, error);
    return spec_hash(s) + buf + method;
}

}  // namespace kolmo
