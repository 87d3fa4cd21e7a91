#pragma once

// Batch commands behind the tjlab executable. Exit codes: 0 success,
// 1 configuration error (nothing written), 2 non-convergence or threshold
// failure, 3 a convergence-study row failed.

#include "thickjunction/analysis.hpp"
#include "thickjunction/config.hpp"
#include "thickjunction/io.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace tj::cli {

namespace fs = std::filesystem;

enum ExitCode : int { Ok = 0, BadConfig = 1, Failed = 2, RowFailed = 3 };

namespace detail {

inline ProblemData checked_data(const RunConfig& c, const JunctionConfig& g) {
    ProblemData data = c.data();
    const auto violations = validate(data, g);
    if (!violations.empty()) {
        const auto& v = violations.front();
        throw ConfigError("data: " + v.condition + " (x1=" + io::fmt(v.x1) + ", x2=" + io::fmt(v.x2) +
                          ", value=" + io::fmt(v.value) + ")");
    }
    return data;
}

inline JunctionConfig single_n(const RunConfig& c) {
    TJ_THROW_IF(c.N_list.size() > 1, ConfigError, "this command takes a single N; use geometry.N");
    JunctionConfig g = c.geometry;
    if (c.N_list.size() == 1) g.N = c.N_list.front();
    return g;
}

inline void print_kkt(std::ostream& os, const KktResidual& k) {
    os << "feasibility," << io::fmt(k.feasibility) << '\n'
       << "sign," << io::fmt(k.sign) << '\n'
       << "complementarity," << io::fmt(k.complementarity) << '\n'
       << "stationarity," << io::fmt(k.stationarity) << '\n';
}

/// Per-node (mu, constrained) from a reduced-space result.
inline std::vector<std::optional<double>> node_multipliers(const DiscreteVI& vi, const SolveResult& r) {
    std::vector<std::optional<double>> mu(vi.system.full_size());
    for (int j = 0; j < vi.constraint_count(); ++j) mu[vi.system.free_to_node[vi.constrained[j]]] = r.mu[j];
    return mu;
}

}  // namespace detail

inline int solve_eps(const RunConfig& c, const fs::path& out_dir, std::ostream& out) {
    const JunctionConfig g = detail::single_n(c);
    const ProblemData data = detail::checked_data(c, g);
    const EpsProblem ep = assemble_eps(g, data);
    const SolveResult r = solve(ep.vi, c.method, c.solver);
    const Vector u = ep.vi.system.expand(r.u);
    const auto mu = detail::node_multipliers(ep.vi, r);

    fs::create_directories(out_dir);
    io::write_mesh(ep.mesh, out_dir);
    {
        auto f = io::open(out_dir / "solution.csv");
        f << "id,x1,x2,u,mu,active\n";
        for (int n = 0; n < ep.mesh.node_count(); ++n) {
            f << n << ',' << io::fmt(ep.mesh.nodes[n][0]) << ',' << io::fmt(ep.mesh.nodes[n][1]) << ','
              << io::fmt(u[n]) << ',';
            if (mu[n]) {
                const int j = ep.vi.system.node_to_free[n];
                const bool active = u[n] >= ep.vi.upper()[j] - 1e-9;
                f << io::fmt(*mu[n]) << ',' << (active ? 1 : 0);
            } else {
                f << ",0";
            }
            f << '\n';
        }
    }
    std::ostringstream rep;
    rep << "quantity,value\n"
        << "method," << r.method << '\n'
        << "converged," << (r.converged ? 1 : 0) << '\n'
        << "iterations," << r.iterations << '\n'
        << "active," << r.active_set.size() << '\n';
    detail::print_kkt(rep, r.kkt);
    rep << "E_eps," << io::fmt(energy_eps(u, ep.A_full)) << '\n';
    io::open(out_dir / "kkt.csv") << rep.str();
    out << rep.str();
    return r.converged ? Ok : Failed;
}

inline int solve_limit_cmd(const RunConfig& c, const fs::path& out_dir, std::ostream& out) {
    const JunctionConfig g = detail::single_n(c);
    const ProblemData data = detail::checked_data(c, g);
    const LimitProblem lp = assemble_limit(build_limit_mesh(g), data);
    const LimitSolution s = solve_limit(lp, c.method, c.solver);
    const auto& r = s.result;
    const auto mu = detail::node_multipliers(lp.vi, r);

    fs::create_directories(out_dir);
    io::write_mesh(lp.mesh, out_dir);
    {
        auto f = io::open(out_dir / "limit_solution.csv");
        f << "node,region,u,active\n";
        for (int n = 0; n < lp.mesh.node_count(); ++n) {
            const double x2 = lp.mesh.nodes[n][1];
            const char* region = x2 > 0.0 ? "Body" : (x2 < 0.0 ? "D0" : "I0");
            bool active = false;
            if (mu[n]) active = s.u[n] >= lp.vi.upper()[lp.vi.system.node_to_free[n]] - 1e-9;
            f << n << ',' << region << ',' << io::fmt(s.u[n]) << ',' << (active ? 1 : 0) << '\n';
        }
    }
    out << "quantity,value\n"
        << "method," << r.method << '\n'
        << "converged," << (r.converged ? 1 : 0) << '\n'
        << "iterations," << r.iterations << '\n';
    detail::print_kkt(out, r.kkt);
    out << "E_0," << io::fmt(energy_limit(s, lp)) << '\n'
        << "flux_jump," << io::fmt(interface_flux_jump(lp.mesh, s.u)) << '\n'
        << "interface_mismatch," << io::fmt(s.interface_mismatch) << '\n'
        << "max_interface_reaction," << io::fmt(s.interface_reaction.size() ? s.interface_reaction.cwiseAbs().maxCoeff() : 0.0)
        << '\n';
    return r.converged ? Ok : Failed;
}

inline int converge(const RunConfig& c, const fs::path& out_dir, std::ostream& out) {
    TJ_THROW_IF(c.N_list.size() < 2, ConfigError, "converge: run.N_list needs at least two entries");
    JunctionConfig finest = c.geometry;
    finest.N = c.N_list.back();
    const ProblemData data = detail::checked_data(c, finest);
    for (int n : c.N_list) {
        JunctionConfig g = c.geometry;
        g.N = n;
        g.validate();
    }
    ConvergenceOptions opt;
    opt.test_functions = c.test_functions;
    opt.limit_refine = c.limit_refine;
    opt.method = c.method;
    opt.solver = c.solver;
    const ConvergenceReport rep = run_convergence(c.geometry, c.N_list, data, opt);

    fs::create_directories(out_dir);
    write_report_csv(rep, out_dir / "report.csv");
    out << "N,eps,E_eps,E_0,energy_gap,status\n";
    for (const auto& r : rep.rows) {
        out << r.N << ',' << io::fmt(r.eps) << ',' << io::fmt(r.E_eps) << ',' << io::fmt(r.E_0) << ','
            << io::fmt(r.energy_gap) << ',' << (r.failed ? "failed: " + r.failure : std::string("ok")) << '\n';
    }
    return rep.any_failed() ? RowFailed : Ok;
}

inline int identity(const RunConfig& c, std::ostream& out) {
    const JunctionConfig g = detail::single_n(c);
    std::vector<Expression> vs;
    for (const auto& text : c.identity_v) vs.push_back(Expression::parse(text));
    const Mesh mesh = build_junction_mesh(g);
    bool ok = true;
    out << "v,lhs,rhs,discrepancy\n";
    for (std::size_t k = 0; k < vs.size(); ++k) {
        const auto r = identity_check(mesh, vs[k], c.identity_derivative, c.identity_quadrature);
        ok = ok && r.discrepancy <= c.identity_threshold;
        out << '"' << c.identity_v[k] << "\"," << io::fmt(r.lhs) << ',' << io::fmt(r.rhs) << ','
            << io::fmt(r.discrepancy) << '\n';
    }
    return ok ? Ok : Failed;
}

inline int oracle_compare(const RunConfig& c, const fs::path& out_dir, std::ostream& out) {
    const JunctionConfig g = detail::single_n(c);
    const ProblemData data = detail::checked_data(c, g);
    TJ_THROW_IF(!data.x1_independent(), ConfigError, "oracle-compare: data must not depend on x1");
    TJ_THROW_IF(!g.gamma.is_constant(), ConfigError, "oracle-compare: gamma must be constant");
    const double body = g.gamma(0.0, 0.0);

    const LimitProblem lp = assemble_limit(build_limit_mesh(g), data);
    const LimitSolution s = solve_limit(lp, c.method, c.solver);
    const OracleProfile prof = oracle_1d(body, g.l, g.h, data, c.oracle_m);

    double deviation = 0.0;
    for (int n = 0; n < lp.mesh.node_count(); ++n)
        deviation = std::max(deviation, std::abs(s.u[n] - prof.at(lp.mesh.nodes[n][1])));
    double threshold = c.oracle_threshold;
    if (threshold < 0.0) {
        const double hmax = std::max({g.l / g.ny_rod, body / g.ny_body, g.a / (g.N * g.nx_rod)});
        const double scale = 1.0 + (s.u.size() ? s.u.cwiseAbs().maxCoeff() : 0.0);
        threshold = 5.0 * hmax * hmax * scale;
    }

    fs::create_directories(out_dir);
    {
        auto f = io::open(out_dir / "oracle.csv");
        f << "x2,u\n";
        for (std::size_t k = 0; k < prof.x2.size(); ++k) f << io::fmt(prof.x2[k]) << ',' << io::fmt(prof.u[k]) << '\n';
    }
    out << "quantity,value\n"
        << "limit_converged," << (s.result.converged ? 1 : 0) << '\n'
        << "oracle_converged," << (prof.converged ? 1 : 0) << '\n'
        << "E_0," << io::fmt(energy_limit(s, lp)) << '\n'
        << "E_oracle," << io::fmt(prof.energy * g.a) << '\n'
        << "deviation," << io::fmt(deviation) << '\n'
        << "threshold," << io::fmt(threshold) << '\n';
    const bool ok = s.result.converged && prof.converged && deviation <= threshold;
    return ok ? Ok : Failed;
}

/// Parses the config, runs `command`, maps errors onto exit codes.
inline int run(std::string_view command, const std::string& config_path, const std::optional<std::string>& out_dir,
               std::ostream& out, std::ostream& err) {
    RunConfig c;
    try {
        c = parse_config_file(config_path);
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return BadConfig;
    }
    const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(c.output_dir);
    try {
        if (command == "solve-eps") return solve_eps(c, dir, out);
        if (command == "solve-limit") return solve_limit_cmd(c, dir, out);
        if (command == "converge") return converge(c, dir, out);
        if (command == "identity-check") return identity(c, out);
        if (command == "oracle-compare") return oracle_compare(c, dir, out);
        err << "unknown command " << command << '\n';
        return BadConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return BadConfig;
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << '\n';
        return BadConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return Failed;
    }
}

}  // namespace tj::cli
