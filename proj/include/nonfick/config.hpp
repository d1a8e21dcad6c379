#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nonfick/errors.hpp"

namespace nonfick {

/// One parsed config value: a number, a bare word, a boolean, a numeric
/// list [a, b, ...] or a preset call name(a, b, ...).
struct ConfigValue {
    enum class Kind { Number, Word, Bool, List, Call };
    Kind kind = Kind::Word;
    double number = 0.0;
    bool boolean = false;
    std::string word;                 // bare words and call names
    std::vector<double> list;         // list entries or call arguments

    double as_number(const std::string& where) const {
        if (kind != Kind::Number)
            throw ConfigError(where + ": expected a number");
        return number;
    }
    bool as_bool(const std::string& where) const {
        if (kind != Kind::Bool) throw ConfigError(where + ": expected true/false");
        return boolean;
    }
    const std::string& as_word(const std::string& where) const {
        if (kind != Kind::Word) throw ConfigError(where + ": expected a word");
        return word;
    }
    const std::vector<double>& as_list(const std::string& where) const {
        if (kind != Kind::List) throw ConfigError(where + ": expected a list");
        return list;
    }
};

using ConfigSection = std::map<std::string, ConfigValue>;
using ConfigTree = std::map<std::string, ConfigSection>;

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool parse_number(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

inline std::vector<double> parse_number_seq(const std::string& body,
                                            const std::string& where) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(body);
    while (std::getline(ss, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        double v;
        if (!parse_number(token, v))
            throw ConfigError(where + ": bad numeric entry '" + token + "'");
        out.push_back(v);
    }
    return out;
}

inline ConfigValue parse_value(const std::string& raw, const std::string& where) {
    ConfigValue v;
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError(where + ": empty value");
    if (s == "true" || s == "false") {
        v.kind = ConfigValue::Kind::Bool;
        v.boolean = s == "true";
        return v;
    }
    if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError(where + ": unterminated list");
        v.kind = ConfigValue::Kind::List;
        v.list = parse_number_seq(s.substr(1, s.size() - 2), where);
        return v;
    }
    if (double num; parse_number(s, num)) {
        v.kind = ConfigValue::Kind::Number;
        v.number = num;
        return v;
    }
    const std::size_t open = s.find('(');
    if (open != std::string::npos) {
        if (s.back() != ')') throw ConfigError(where + ": unterminated call");
        v.kind = ConfigValue::Kind::Call;
        v.word = trim(s.substr(0, open));
        v.list = parse_number_seq(s.substr(open + 1, s.size() - open - 2), where);
        if (v.word.empty()) throw ConfigError(where + ": call without a name");
        return v;
    }
    v.kind = ConfigValue::Kind::Word;
    v.word = s;
    return v;
}

} // namespace detail

/// Parses the flat sectioned key-value format: [section] headers,
/// key = value lines, comments with '#'. Duplicate keys are rejected.
inline ConfigTree parse_config_text(const std::string& text) {
    ConfigTree tree;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where + ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            tree[section]; // sections may be empty
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value'");
        if (section.empty())
            throw ConfigError(where + ": key outside of any section");
        const std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (tree[section].count(key))
            throw ConfigError(where + ": duplicate key '" + key + "'");
        tree[section][key] =
            detail::parse_value(line.substr(eq + 1), where + " (" + key + ")");
    }
    return tree;
}

/// Applies a command-line override of the form section.key=value.
inline void apply_override(ConfigTree& tree, const std::string& entry) {
    const std::size_t eq = entry.find('=');
    const std::size_t dot = entry.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("override must look like section.key=value: " + entry);
    const std::string section = detail::trim(entry.substr(0, dot));
    const std::string key = detail::trim(entry.substr(dot + 1, eq - dot - 1));
    tree[section][key] =
        detail::parse_value(entry.substr(eq + 1), "override " + entry);
}

/// Typed scenario description.
struct ScenarioConfig {
    // grid
    int dimension = 1;
    std::vector<double> lengths{1.0};
    std::vector<int> cells{100};

    // coefficient model calls (materialized by the scenario builder)
    ConfigValue D0, E0, beta0, M0, mu0, nu0;
    std::optional<ConfigValue> beta0_time; // multiplicative time modulation
    std::optional<ConfigValue> D0_time;

    // data
    ConfigValue phi, u0, varsigma0;

    // solver
    std::string mode = "simulate";
    double T = 0.1;
    double dt = 1e-3;
    double tol = 1e-8;
    int max_iter = 200;
    double relaxation = 1.0;
    int picard_passes = 1;
    std::array<double, 2> v_box{-1.0, 1.0};
    std::array<double, 2> tau_box{-1.0, 1.0};
    int samples = 2000;
    std::uint64_t seed = 1;
    int starts = 1;
    std::array<double, 2> guess_range{0.2, 0.8};
    std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
    std::vector<double> lambdas{0.0, 0.5, 1.0};
    bool continuation = false;
    std::string reference = "none";
    double reference_tol = 1e-3;
    bool enforce_monitors = true;

    // output
    std::string directory = "out";
    int frame_stride = 0; // 0: final frame only
    bool monitors = true;
};

namespace detail {

inline ConfigValue call_value(const std::string& name,
                              std::vector<double> args = {}) {
    ConfigValue v;
    v.kind = ConfigValue::Kind::Call;
    v.word = name;
    v.list = std::move(args);
    return v;
}

inline void reject_unknown(const ConfigTree& tree,
                           const std::map<std::string, std::set<std::string>>& schema) {
    for (const auto& [section, kv] : tree) {
        auto it = schema.find(section);
        if (it == schema.end())
            throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, value] : kv)
            if (!it->second.count(key))
                throw ConfigError("unknown key '" + key + "' in section [" +
                                  section + "]");
    }
}

} // namespace detail

/// Validates the tree against the strict schema and materializes the typed
/// scenario. Unknown sections or keys are errors, never silent defaults.
inline ScenarioConfig make_scenario_config(const ConfigTree& tree) {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"grid", {"dimension", "lengths", "cells"}},
        {"coefficients",
         {"D0", "E0", "beta0", "M0", "mu0", "nu0", "f", "beta0_time", "D0_time"}},
        {"data", {"phi", "u0", "varsigma0"}},
        {"solver",
         {"mode", "T", "dt", "tol", "max_iter", "relaxation", "picard_passes",
          "v_box", "tau_box", "samples", "seed", "starts", "guess_range",
          "epsilons", "lambdas", "continuation", "reference", "reference_tol",
          "enforce_monitors"}},
        {"output", {"directory", "frame_stride", "monitors"}},
    };
    detail::reject_unknown(tree, schema);

    ScenarioConfig cfg;
    cfg.D0 = detail::call_value("constant", {1.0});
    cfg.E0 = detail::call_value("zero");
    cfg.beta0 = detail::call_value("constant", {1.0});
    cfg.M0 = detail::call_value("zero");
    cfg.mu0 = detail::call_value("constant", {0.0});
    cfg.nu0 = detail::call_value("constant", {0.0});
    cfg.phi = detail::call_value("zero");
    cfg.u0 = detail::call_value("zero");
    cfg.varsigma0 = detail::call_value("zero");

    auto section = [&](const std::string& name) -> const ConfigSection* {
        auto it = tree.find(name);
        return it == tree.end() ? nullptr : &it->second;
    };
    auto get = [&](const ConfigSection* s, const std::string& key) -> const ConfigValue* {
        if (!s) return nullptr;
        auto it = s->find(key);
        return it == s->end() ? nullptr : &it->second;
    };

    if (const ConfigSection* s = section("grid")) {
        if (const ConfigValue* v = get(s, "dimension"))
            cfg.dimension = static_cast<int>(v->as_number("grid.dimension"));
        if (const ConfigValue* v = get(s, "lengths"))
            cfg.lengths = v->as_list("grid.lengths");
        if (const ConfigValue* v = get(s, "cells")) {
            cfg.cells.clear();
            for (double c : v->as_list("grid.cells"))
                cfg.cells.push_back(static_cast<int>(c));
        }
    }

    // bare words act as zero-argument preset calls (e.g. "E0 = zero")
    auto as_call = [](const ConfigValue& v, const std::string& where) {
        if (v.kind == ConfigValue::Kind::Call) return v;
        if (v.kind == ConfigValue::Kind::Word)
            return detail::call_value(v.word);
        throw ConfigError(where + ": expected a preset call");
    };

    if (const ConfigSection* s = section("coefficients")) {
        auto coeff = [&](const char* key, ConfigValue& dst) {
            if (const ConfigValue* v = get(s, key))
                dst = as_call(*v, std::string("coefficients.") + key);
        };
        coeff("D0", cfg.D0);
        coeff("E0", cfg.E0);
        coeff("beta0", cfg.beta0);
        coeff("M0", cfg.M0);
        coeff("mu0", cfg.mu0);
        coeff("nu0", cfg.nu0);
        if (const ConfigValue* v = get(s, "f")) {
            if (get(s, "mu0") || get(s, "nu0"))
                throw ConfigError(
                    "coefficients: give either f = f_split(...) or mu0/nu0, not both");
            if (v->kind != ConfigValue::Kind::Call || v->word != "f_split" ||
                v->list.size() != 2)
                throw ConfigError("coefficients.f: expected f_split(mu, nu)");
            cfg.mu0 = detail::call_value("constant", {v->list[0]});
            cfg.nu0 = detail::call_value("constant", {v->list[1]});
        }
        if (const ConfigValue* v = get(s, "beta0_time")) cfg.beta0_time = *v;
        if (const ConfigValue* v = get(s, "D0_time")) cfg.D0_time = *v;
    }

    if (const ConfigSection* s = section("data")) {
        auto datum = [&](const char* key, ConfigValue& dst) {
            if (const ConfigValue* v = get(s, key))
                dst = as_call(*v, std::string("data.") + key);
        };
        datum("phi", cfg.phi);
        datum("u0", cfg.u0);
        datum("varsigma0", cfg.varsigma0);
    }

    if (const ConfigSection* s = section("solver")) {
        if (const ConfigValue* v = get(s, "mode")) cfg.mode = v->as_word("solver.mode");
        if (const ConfigValue* v = get(s, "T")) cfg.T = v->as_number("solver.T");
        if (const ConfigValue* v = get(s, "dt")) cfg.dt = v->as_number("solver.dt");
        if (const ConfigValue* v = get(s, "tol")) cfg.tol = v->as_number("solver.tol");
        if (const ConfigValue* v = get(s, "max_iter"))
            cfg.max_iter = static_cast<int>(v->as_number("solver.max_iter"));
        if (const ConfigValue* v = get(s, "relaxation"))
            cfg.relaxation = v->as_number("solver.relaxation");
        if (const ConfigValue* v = get(s, "picard_passes"))
            cfg.picard_passes = static_cast<int>(v->as_number("solver.picard_passes"));
        auto pair = [&](const char* key, std::array<double, 2>& dst) {
            if (const ConfigValue* v = get(s, key)) {
                const auto& l = v->as_list(std::string("solver.") + key);
                if (l.size() != 2)
                    throw ConfigError(std::string("solver.") + key +
                                      ": expected [lo, hi]");
                dst = {l[0], l[1]};
            }
        };
        pair("v_box", cfg.v_box);
        pair("tau_box", cfg.tau_box);
        pair("guess_range", cfg.guess_range);
        if (const ConfigValue* v = get(s, "samples"))
            cfg.samples = static_cast<int>(v->as_number("solver.samples"));
        if (const ConfigValue* v = get(s, "seed"))
            cfg.seed = static_cast<std::uint64_t>(v->as_number("solver.seed"));
        if (const ConfigValue* v = get(s, "starts"))
            cfg.starts = static_cast<int>(v->as_number("solver.starts"));
        if (const ConfigValue* v = get(s, "epsilons"))
            cfg.epsilons = v->as_list("solver.epsilons");
        if (const ConfigValue* v = get(s, "lambdas"))
            cfg.lambdas = v->as_list("solver.lambdas");
        if (const ConfigValue* v = get(s, "continuation"))
            cfg.continuation = v->as_bool("solver.continuation");
        if (const ConfigValue* v = get(s, "reference"))
            cfg.reference = v->as_word("solver.reference");
        if (const ConfigValue* v = get(s, "reference_tol"))
            cfg.reference_tol = v->as_number("solver.reference_tol");
        if (const ConfigValue* v = get(s, "enforce_monitors"))
            cfg.enforce_monitors = v->as_bool("solver.enforce_monitors");
    }

    if (const ConfigSection* s = section("output")) {
        if (const ConfigValue* v = get(s, "directory"))
            cfg.directory = v->as_word("output.directory");
        if (const ConfigValue* v = get(s, "frame_stride"))
            cfg.frame_stride = static_cast<int>(v->as_number("output.frame_stride"));
        if (const ConfigValue* v = get(s, "monitors"))
            cfg.monitors = v->as_bool("output.monitors");
    }

    if (cfg.mode != "simulate" && cfg.mode != "reproductive" &&
        cfg.mode != "periodic")
        throw ConfigError("solver.mode must be simulate, reproductive or periodic");
    if (cfg.reference != "none" && cfg.reference != "fick_mode")
        throw ConfigError("solver.reference must be none or fick_mode");
    return cfg;
}

} // namespace nonfick
