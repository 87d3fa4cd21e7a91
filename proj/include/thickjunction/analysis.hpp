#pragma once

/*
 * Functionals behind the ε → 0 convergence study: energies, the rod
 * integral identity, weak-convergence gaps between the junction solution and
 * the homogenized one, and the Friedrichs constant of Ω_ε.
 */

#include "thickjunction/assembly.hpp"
#include "thickjunction/eps_problem.hpp"
#include "thickjunction/geometry.hpp"
#include "thickjunction/io.hpp"
#include "thickjunction/limit_problem.hpp"
#include "thickjunction/problem_data.hpp"
#include "thickjunction/vi_solver.hpp"

#include <Eigen/SparseCholesky>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace tj {

/// E_ε(u) = ∫_{Ω_ε} |∇u|², with the assembly quadrature.
inline double energy_eps(const Vector& u_nodal, const SparseMatrix& A_full) { return u_nodal.dot(A_full * u_nodal); }

inline double energy_eps(const Vector& u_nodal, const Mesh& mesh) {
    return energy_eps(u_nodal, assemble_stiffness(mesh, StiffnessForm::full()));
}

/// E₀(u₀) = ∫_{Ω₀} |∇u⁺|² + h ∫_{D₀} |∂₂u⁻|².
inline double energy_limit(const LimitSolution& s, const LimitProblem& p) { return s.u.dot(p.A_full * s.u); }

// ---------------------------------------------------------------------------
// Rod integral identity
//   (εh/2) ∫_{S_ε} v dx2 = ∫_{G_ε} v dx − ε ∫_{G_ε} Y(x1/ε) ∂₁v dx,
//   Y(ξ) = −ξ + [ξ] + 1/2.

enum class DerivativeMode { Exact, CentralDifference };

struct IdentityResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double volume = 0.0;       // ∫_{G_ε} v
    double oscillation = 0.0;  // ε ∫_{G_ε} Y ∂₁v
    double discrepancy = 0.0;
};

inline double sawtooth_y(double xi) { return -xi + std::floor(xi) + 0.5; }

inline IdentityResult identity_check(const Mesh& mesh, const Expression& v,
                                     DerivativeMode mode = DerivativeMode::Exact, int points = 2) {
    TJ_THROW_IF(mesh.kind != MeshKind::Junction, ConfigError, "identity_check: needs a junction mesh");
    const double e = mesh.config.eps();
    const double h = mesh.config.h;
    const auto g = quad::gauss(points);
    IdentityResult r;

    double side = 0.0;
    for (const auto& te : mesh.edges_with(BoundaryTag::S_eps)) {
        const auto [p, q] = mesh.edge_nodes(te);
        const auto& P = mesh.nodes[p];
        const auto& Q = mesh.nodes[q];
        const double half = 0.5 * std::abs(Q[1] - P[1]);
        for (const auto& gp : g) {
            const double t = 0.5 * (1.0 + gp.x);
            side += gp.w * half * v((1.0 - t) * P[0] + t * Q[0], (1.0 - t) * P[1] + t * Q[1]);
        }
    }
    r.lhs = 0.5 * e * h * side;

    for (int el = 0; el < mesh.element_count(); ++el) {
        if (mesh.regions[el] != Region::Rod) continue;
        const auto vert = mesh.vertices(el);
        for (const auto& p : g)
            for (const auto& q : g) {
                const auto m = quad::map_point(vert, p.x, q.x);
                const double w = p.w * q.w * m.det_j;
                const double x1 = m.x[0], x2 = m.x[1];
                double value, d1;
                if (mode == DerivativeMode::Exact) {
                    const Dual dv = v.gradient(x1, x2);
                    value = dv.v;
                    d1 = dv.d1;
                } else {
                    value = v(x1, x2);
                    d1 = v.d_dx1_central(x1, x2);
                }
                r.volume += w * value;
                r.oscillation += w * sawtooth_y(x1 / e) * d1;
            }
    }
    r.oscillation *= e;
    r.rhs = r.volume - r.oscillation;
    r.discrepancy = std::abs(r.lhs - r.rhs);
    return r;
}

// ---------------------------------------------------------------------------
// Weak-convergence gaps

struct TestFunction {
    std::string name;  // CSV-safe label
    Expression psi;
};

inline std::string number_text(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

/// {1, x1, x2, x1·x2, sin(πx1/a), cos(πx2/(2l))}.
inline std::vector<TestFunction> default_test_functions(double a, double l) {
    return {
        {"1", Expression::parse("1")},
        {"x1", Expression::parse("x1")},
        {"x2", Expression::parse("x2")},
        {"x1x2", Expression::parse("x1*x2")},
        {"sin_pix1_a", Expression::parse("sin(pi*x1/" + number_text(a) + ")")},
        {"cos_pix2_2l", Expression::parse("cos(pi*x2/(2*" + number_text(l) + "))")},
    };
}

struct GapTable {
    double body_l2 = 0.0;  // ‖u_ε − u₀⁺‖ in L²(Ω₀)
    double trace = 0.0;    // ‖u_ε(·,0) − u₀⁺(·,0)‖ in L²(0,a)
    std::vector<double> rod_integral;    // ∫_{G_ε} u_ε ψ
    std::vector<double> limit_integral;  // h ∫_{D₀} u₀⁻ ψ
    std::vector<double> weak;            // |difference of the two above|
    std::vector<double> deriv;           // |∫_{G_ε} ∂₁u_ε ψ|
};

inline void require_same_geometry(const JunctionConfig& a, const JunctionConfig& b) {
    bool same = a.a == b.a && a.l == b.l && a.h == b.h;
    for (int k = 0; same && k <= 100; ++k) {
        const double x = a.a * k / 100.0;
        same = a.gamma(x, 0.0) == b.gamma(x, 0.0);
    }
    TJ_THROW_IF(!same, ConfigError, "weak_gaps: junction and limit meshes come from different geometries");
}

inline GapTable weak_gaps(const Mesh& eps_mesh, const Vector& u_eps, const Mesh& limit_mesh, const Vector& u0,
                          const std::vector<TestFunction>& tests) {
    TJ_THROW_IF(eps_mesh.kind != MeshKind::Junction || limit_mesh.kind != MeshKind::Limit, ConfigError,
                "weak_gaps: expects a junction mesh and a limit mesh");
    TJ_THROW_IF(u_eps.size() != eps_mesh.node_count() || u0.size() != limit_mesh.node_count(), ConfigError,
                "weak_gaps: field sizes do not match meshes");
    require_same_geometry(eps_mesh.config, limit_mesh.config);

    const auto g3 = quad::gauss(3);
    const std::span<const double> u0s(u0.data(), static_cast<std::size_t>(u0.size()));
    auto u0_at = [&](double x1, double x2) {
        const auto v = interpolate(limit_mesh, u0s, x1, x2);
        TJ_THROW_IF(!v, Error, "weak_gaps: point outside the limit mesh");
        return *v;
    };

    GapTable t;
    const std::size_t nt = tests.size();
    t.rod_integral.assign(nt, 0.0);
    t.limit_integral.assign(nt, 0.0);
    t.deriv.assign(nt, 0.0);

    double body = 0.0;
    for (int e = 0; e < eps_mesh.element_count(); ++e) {
        const auto vert = eps_mesh.vertices(e);
        const auto& el = eps_mesh.elements[e];
        const bool rod = eps_mesh.regions[e] == Region::Rod;
        for (const auto& p : g3)
            for (const auto& q : g3) {
                const auto m = quad::map_point(vert, p.x, q.x);
                const double w = p.w * q.w * m.det_j;
                double u = 0.0, d1 = 0.0;
                for (int a = 0; a < 4; ++a) {
                    u += m.n[a] * u_eps[el[a]];
                    d1 += m.grad[a][0] * u_eps[el[a]];
                }
                if (rod) {
                    for (std::size_t k = 0; k < nt; ++k) {
                        const double psi = tests[k].psi(m.x[0], m.x[1]);
                        t.rod_integral[k] += w * u * psi;
                        t.deriv[k] += w * d1 * psi;
                    }
                } else {
                    const double diff = u - u0_at(m.x[0], m.x[1]);
                    body += w * diff * diff;
                }
            }
    }
    t.body_l2 = std::sqrt(body);

    const auto& L = eps_mesh.layout;
    double trace = 0.0;
    for (int c = 0; c < L.n_cells(); ++c) {
        const int p = L.node(c, L.n_lower()), q = L.node(c + 1, L.n_lower());
        const double x0 = eps_mesh.nodes[p][0], x1 = eps_mesh.nodes[q][0];
        for (const auto& gp : g3) {
            const double s = 0.5 * (1.0 + gp.x);
            const double x = (1.0 - s) * x0 + s * x1;
            const double diff = (1.0 - s) * u_eps[p] + s * u_eps[q] - u0_at(x, 0.0);
            trace += gp.w * 0.5 * (x1 - x0) * diff * diff;
        }
    }
    t.trace = std::sqrt(trace);

    const double h = limit_mesh.config.h;
    for (int e = 0; e < limit_mesh.element_count(); ++e) {
        if (limit_mesh.regions[e] != Region::D0) continue;
        const auto vert = limit_mesh.vertices(e);
        const auto& el = limit_mesh.elements[e];
        for (const auto& p : g3)
            for (const auto& q : g3) {
                const auto m = quad::map_point(vert, p.x, q.x);
                const double w = p.w * q.w * m.det_j;
                double u = 0.0;
                for (int a = 0; a < 4; ++a) u += m.n[a] * u0[el[a]];
                for (std::size_t k = 0; k < nt; ++k) t.limit_integral[k] += h * w * u * tests[k].psi(m.x[0], m.x[1]);
            }
    }
    t.weak.resize(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        t.weak[k] = std::abs(t.rod_integral[k] - t.limit_integral[k]);
        t.deriv[k] = std::abs(t.deriv[k]);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Friedrichs constant ‖u‖ ≤ C₂ ‖∇u‖ for u vanishing on the Dirichlet tags.

struct FriedrichEstimate {
    double lambda_min = 0.0;
    double constant = 0.0;  // 1 / sqrt(lambda_min)
    int iterations = 0;
    bool converged = false;
};

/// Smallest eigenvalue of K x = λ M x by shifted inverse iteration.
inline FriedrichEstimate friedrich_constant(const Mesh& mesh, const std::vector<BoundaryTag>& dirichlet,
                                            double shift = 0.0, double tol = 1e-8, int max_iter = 2000) {
    const Vector zero = Vector::Zero(mesh.node_count());
    const auto K = apply_dirichlet(assemble_stiffness(mesh), zero, mesh, dirichlet).A;
    const auto M = apply_dirichlet(assemble_mass(mesh), zero, mesh, dirichlet).A;
    Eigen::SparseMatrix<double> S = Eigen::SparseMatrix<double>(K) - shift * Eigen::SparseMatrix<double>(M);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(S);
    TJ_THROW_IF(solver.info() != Eigen::Success, Error, "friedrich_constant: factorisation failed");

    FriedrichEstimate est;
    Vector x = Vector::Ones(K.rows());
    x /= std::sqrt(x.dot(M * x));
    double lambda = x.dot(K * x);
    for (int it = 1; it <= max_iter; ++it) {
        Vector y = solver.solve(M * x);
        x = y / std::sqrt(y.dot(M * y));
        const double next = x.dot(K * x);
        est.iterations = it;
        const bool done = std::abs(next - lambda) <= tol * std::abs(next);
        lambda = next;
        if (done) {
            est.converged = true;
            break;
        }
    }
    est.lambda_min = lambda;
    est.constant = 1.0 / std::sqrt(lambda);
    return est;
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceOptions {
    std::vector<TestFunction> test_functions;  // empty: default battery
    int limit_refine = 4;                      // limit mesh resolution factor over the finest junction mesh
    SolverMethod method = SolverMethod::Pdas;
    SolverOptions solver;
};

struct ConvergenceRow {
    int N = 0;
    double eps = 0.0;
    double E_eps = 0.0;
    double E_0 = 0.0;
    double energy_gap = 0.0;
    double body_l2_gap = 0.0;
    double trace_gap = 0.0;
    std::vector<double> weak_gaps;
    std::vector<double> deriv_gaps;
    KktResidual kkt;
    EquivalenceReport equivalence;
    int iterations = 0;
    bool failed = false;
    std::string failure;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;  // decreasing ε
    std::vector<TestFunction> test_functions;
    JunctionConfig config;
    JunctionConfig limit_config;
    double E_0 = 0.0;
    bool limit_converged = false;

    bool any_failed() const {
        for (const auto& r : rows)
            if (r.failed) return true;
        return false;
    }
};

inline JunctionConfig limit_config_for(const JunctionConfig& tmpl, int n_max, int refine) {
    JunctionConfig c = tmpl;
    c.N = n_max;
    c.nx_rod *= refine;
    c.ny_rod *= refine;
    c.ny_body *= refine;
    return c;
}

inline ConvergenceReport run_convergence(const JunctionConfig& tmpl, const std::vector<int>& n_list,
                                         const ProblemData& data, const ConvergenceOptions& opt = {}) {
    TJ_THROW_IF(n_list.empty(), ConfigError, "run_convergence: empty N list");
    for (std::size_t k = 0; k < n_list.size(); ++k)
        TJ_THROW_IF(n_list[k] < 1 || (k > 0 && n_list[k] <= n_list[k - 1]), ConfigError,
                    "run_convergence: N list must be strictly increasing positive integers");

    ConvergenceReport rep;
    rep.config = tmpl;
    rep.test_functions = opt.test_functions.empty() ? default_test_functions(tmpl.a, tmpl.l) : opt.test_functions;
    rep.limit_config = limit_config_for(tmpl, n_list.back(), opt.limit_refine);

    const Mesh limit_mesh = build_limit_mesh(rep.limit_config);
    const LimitProblem lp = assemble_limit(limit_mesh, data);
    const LimitSolution ls = solve_limit(lp, opt.method, opt.solver);
    rep.limit_converged = ls.result.converged;
    rep.E_0 = energy_limit(ls, lp);

    for (int n : n_list) {
        ConvergenceRow row;
        row.N = n;
        JunctionConfig cfg = tmpl;
        cfg.N = n;
        row.eps = cfg.eps();
        try {
            TJ_THROW_IF(!rep.limit_converged, Error, "limit problem did not converge");
            const EpsProblem ep = assemble_eps(cfg, data);
            const SolveResult sr = solve(ep.vi, opt.method, opt.solver);
            row.iterations = sr.iterations;
            row.kkt = sr.kkt;
            TJ_THROW_IF(!sr.converged, Error, "junction problem did not converge");
            row.equivalence = check_definitions_equivalence(ep.vi, sr);
            const Vector u = ep.vi.system.expand(sr.u);
            row.E_eps = energy_eps(u, ep.A_full);
            row.E_0 = rep.E_0;
            row.energy_gap = std::abs(row.E_eps - row.E_0);
            const GapTable gaps = weak_gaps(ep.mesh, u, limit_mesh, ls.u, rep.test_functions);
            row.body_l2_gap = gaps.body_l2;
            row.trace_gap = gaps.trace;
            row.weak_gaps = gaps.weak;
            row.deriv_gaps = gaps.deriv;
        } catch (const std::exception& ex) {
            row.failed = true;
            row.failure = ex.what();
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

/// report.csv: N, eps, E_eps, E_0, energy_gap, body_l2_gap, trace_gap,
/// weak_gap_<ψ>..., deriv_gap_<ψ>...; failed rows carry nan.
inline void write_report_csv(const ConvergenceReport& rep, const std::filesystem::path& path) {
    auto out = io::open(path);
    out << "N,eps,E_eps,E_0,energy_gap,body_l2_gap,trace_gap";
    for (const auto& t : rep.test_functions) out << ",weak_gap_" << t.name;
    for (const auto& t : rep.test_functions) out << ",deriv_gap_" << t.name;
    out << '\n';
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rep.rows) {
        out << r.N << ',' << io::fmt(r.eps);
        for (double v : {r.E_eps, r.E_0, r.energy_gap, r.body_l2_gap, r.trace_gap}) out << ',' << io::fmt(r.failed ? nan : v);
        for (std::size_t k = 0; k < rep.test_functions.size(); ++k)
            out << ',' << io::fmt(r.failed ? nan : r.weak_gaps[k]);
        for (std::size_t k = 0; k < rep.test_functions.size(); ++k)
            out << ',' << io::fmt(r.failed ? nan : r.deriv_gaps[k]);
        out << '\n';
    }
}

}  // namespace tj
