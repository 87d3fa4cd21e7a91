#pragma once

// Run configuration: flat `section.key = value` lines, `#` starts a comment,
// values may be double-quoted. Every key must be known.

#include "thickjunction/analysis.hpp"
#include "thickjunction/error.hpp"
#include "thickjunction/geometry.hpp"
#include "thickjunction/problem_data.hpp"
#include "thickjunction/vi_solver.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace tj {

struct RunConfig {
    JunctionConfig geometry;
    std::string f = "0", g = "0", d = "0";
    GMode g_mode = GMode::Standard;

    SolverMethod method = SolverMethod::Pdas;
    SolverOptions solver;

    std::vector<int> N_list;
    std::string output_dir = ".";
    int limit_refine = 4;
    std::vector<std::string> identity_v{"1"};
    double identity_threshold = 1e-10;
    int identity_quadrature = 2;
    DerivativeMode identity_derivative = DerivativeMode::Exact;
    int oracle_m = 4096;
    double oracle_threshold = -1.0;  // < 0: 5 (mesh size)² (1 + max|u|)
    std::vector<TestFunction> test_functions;  // empty: default battery

    ProblemData data() const { return ProblemData::parse(f, g, d, g_mode); }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    TJ_THROW_IF(ec != std::errc{} || p != v.data() + v.size(), ConfigError, key + ": not a number: '" + v + "'");
    return x;
}

inline int to_int(const std::string& key, const std::string& v) {
    int x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    TJ_THROW_IF(ec != std::errc{} || p != v.data() + v.size(), ConfigError, key + ": not an integer: '" + v + "'");
    return x;
}

}  // namespace detail

inline void set_key(RunConfig& c, const std::string& key, const std::string& raw) {
    using namespace detail;
    const std::string v = unquote(raw);
    auto& G = c.geometry;
    if (key == "geometry.a") G.a = to_double(key, v);
    else if (key == "geometry.l") G.l = to_double(key, v);
    else if (key == "geometry.h") G.h = to_double(key, v);
    else if (key == "geometry.N") G.N = to_int(key, v);
    else if (key == "geometry.gamma") G.gamma = Expression::parse(v);
    else if (key == "geometry.nx_rod") G.nx_rod = to_int(key, v);
    else if (key == "geometry.ny_rod") G.ny_rod = to_int(key, v);
    else if (key == "geometry.ny_body") G.ny_body = to_int(key, v);
    else if (key == "data.f") {
        (void)Expression::parse(v);
        c.f = v;
    } else if (key == "data.g") {
        (void)Expression::parse(v);
        c.g = v;
    } else if (key == "data.d") {
        (void)Expression::parse(v);
        c.d = v;
    } else if (key == "data.g_mode") {
        if (v == "standard") c.g_mode = GMode::Standard;
        else if (v == "unconstrained") c.g_mode = GMode::Unconstrained;
        else throw ConfigError("data.g_mode: expected standard or unconstrained, got '" + v + "'");
    } else if (key == "solver.method") {
        if (v == "psor") c.method = SolverMethod::Psor;
        else if (v == "pdas") c.method = SolverMethod::Pdas;
        else throw ConfigError("solver.method: expected psor or pdas, got '" + v + "'");
    } else if (key == "solver.omega") c.solver.omega = to_double(key, v);
    else if (key == "solver.tol") c.solver.tol = to_double(key, v);
    else if (key == "solver.max_iter") c.solver.max_iter = to_int(key, v);
    else if (key == "run.N_list") {
        std::string list = v;
        if (!list.empty() && list.front() == '(' && list.back() == ')') list = list.substr(1, list.size() - 2);
        c.N_list.clear();
        for (const auto& item : split(list, ',')) c.N_list.push_back(to_int(key, item));
    } else if (key == "run.output_dir") c.output_dir = v;
    else if (key == "run.limit_refine") c.limit_refine = to_int(key, v);
    else if (key == "run.identity_v") c.identity_v = split(v, ';');
    else if (key == "run.identity_threshold") c.identity_threshold = to_double(key, v);
    else if (key == "run.identity_quadrature") c.identity_quadrature = to_int(key, v);
    else if (key == "run.identity_derivative") {
        if (v == "exact") c.identity_derivative = DerivativeMode::Exact;
        else if (v == "central") c.identity_derivative = DerivativeMode::CentralDifference;
        else throw ConfigError("run.identity_derivative: expected exact or central, got '" + v + "'");
    } else if (key == "run.oracle_m") c.oracle_m = to_int(key, v);
    else if (key == "run.oracle_threshold") c.oracle_threshold = to_double(key, v);
    else if (key == "run.test_functions") {
        // name:expr entries separated by ';'
        c.test_functions.clear();
        for (const auto& item : split(v, ';')) {
            const auto colon = item.find(':');
            TJ_THROW_IF(colon == std::string::npos, ConfigError, "run.test_functions: expected name:expr, got '" + item + "'");
            c.test_functions.push_back({trim(item.substr(0, colon)), Expression::parse(trim(item.substr(colon + 1)))});
        }
    } else throw ConfigError("unknown key '" + key + "'");
}

inline void check(const RunConfig& c) {
    c.geometry.validate();
    for (std::size_t k = 0; k < c.N_list.size(); ++k)
        TJ_THROW_IF(c.N_list[k] < 1 || (k > 0 && c.N_list[k] <= c.N_list[k - 1]), ConfigError,
                    "run.N_list must be strictly increasing positive integers");
    TJ_THROW_IF(c.limit_refine < 1, ConfigError, "run.limit_refine must be positive");
    TJ_THROW_IF(c.oracle_m < 1, ConfigError, "run.oracle_m must be positive");
    TJ_THROW_IF(c.identity_quadrature < 1 || c.identity_quadrature > 3, ConfigError,
                "run.identity_quadrature must be 1, 2 or 3");
    TJ_THROW_IF(!(c.solver.omega > 0.0 && c.solver.omega < 2.0), ConfigError, "solver.omega must lie in (0, 2)");
    TJ_THROW_IF(!(c.solver.tol > 0.0), ConfigError, "solver.tol must be positive");
}

inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // '#' inside a quoted value is kept
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        TJ_THROW_IF(eq == std::string::npos, ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        try {
            set_key(c, key, detail::trim(t.substr(eq + 1)));
        } catch (const ParseError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ", " + key + ": " + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    check(c);
    return c;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    TJ_THROW_IF(!in, ConfigError, "cannot read config file " + path);
    return parse_config(in);
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

}  // namespace tj
