#pragma once

/*
 * Homogenized problem on Ω₁ = Ω₀ ∪ D₀: Poisson in the body, the
 * x2-anisotropic obstacle problem with coefficient h in D₀, continuity and
 * the flux condition ∂₂u⁺ = h ∂₂u⁻ across I₀. Continuity comes from shared
 * interface nodes; the flux condition is natural in the weak form.
 */

#include "thickjunction/assembly.hpp"
#include "thickjunction/geometry.hpp"
#include "thickjunction/problem_data.hpp"
#include "thickjunction/vi_solver.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace tj {

struct LimitProblem {
    Mesh mesh;
    ProblemData data;
    SparseMatrix A_full;  // node-indexed anisotropic form
    Vector b_full;
    DiscreteVI vi;
};

/// Dirichlet on I_l; u ≤ g on every node of D̄₀ except I_l (the I₀ nodes included).
inline LimitProblem assemble_limit(const Mesh& mesh, const ProblemData& data) {
    TJ_THROW_IF(mesh.kind != MeshKind::Limit, ConfigError, "assemble_limit: needs a limit mesh");
    const double h = mesh.config.h;
    LimitProblem p{mesh, data, {}, {}, {}};
    p.A_full = assemble_stiffness(mesh, StiffnessForm::limit(h));
    p.b_full = assemble_load(mesh, data, LoadForm::limit_problem(h));
    p.vi.system = apply_dirichlet(p.A_full, p.b_full, mesh, {BoundaryTag::I_l});
    p.vi.label = ProblemLabel::LimitProblem;
    if (data.g_mode == GMode::Standard) {
        for (int node = 0; node < mesh.node_count(); ++node) {
            const int r = p.vi.system.node_to_free[node];
            if (r < 0 || mesh.nodes[node][1] > 0.0) continue;
            p.vi.constrained.push_back(r);
            p.vi.bound.push_back(data.g(mesh.nodes[node][0], mesh.nodes[node][1]));
        }
    }
    p.vi.validate();
    return p;
}

struct LimitSolution {
    SolveResult result;
    Vector u;                           // node-indexed, zero on I_l
    std::vector<int> body_nodes;        // x2 >= 0
    std::vector<int> d0_nodes;          // x2 <= 0
    Vector u_plus;                      // aligned with body_nodes
    Vector u_minus;                     // aligned with d0_nodes
    std::vector<int> interface_nodes;   // x2 == 0
    Vector interface_values;
    Vector interface_reaction;          // mu on I₀ nodes (0 where unconstrained)
    double interface_mismatch = 0.0;    // max |u⁺ − u⁻| on I₀
    double equality_residual = 0.0;     // relative residual of the ĝ-equality
    bool equality_ok = false;
};

inline LimitSolution solve_limit(const LimitProblem& p, SolverMethod method = SolverMethod::Pdas,
                                 const SolverOptions& opt = {}) {
    LimitSolution s;
    s.result = solve(p.vi, method, opt);
    s.u = p.vi.system.expand(s.result.u);
    const auto& mesh = p.mesh;
    std::vector<double> up, um;
    for (int n = 0; n < mesh.node_count(); ++n) {
        const double x2 = mesh.nodes[n][1];
        if (x2 >= 0.0) {
            s.body_nodes.push_back(n);
            up.push_back(s.u[n]);
        }
        if (x2 <= 0.0) {
            s.d0_nodes.push_back(n);
            um.push_back(s.u[n]);
        }
    }
    s.u_plus = Eigen::Map<Vector>(up.data(), static_cast<Eigen::Index>(up.size()));
    s.u_minus = Eigen::Map<Vector>(um.data(), static_cast<Eigen::Index>(um.size()));

    // Reaction per reduced index.
    Vector reaction = Vector::Zero(p.vi.size());
    for (int j = 0; j < p.vi.constraint_count(); ++j) reaction[p.vi.constrained[j]] = s.result.mu[j];

    const auto& L = mesh.layout;
    const int row0 = L.n_lower();
    s.interface_values.resize(L.n_lines());
    s.interface_reaction.resize(L.n_lines());
    for (int i = 0; i < L.n_lines(); ++i) {
        const int n = L.node(i, row0);
        s.interface_nodes.push_back(n);
        // u⁺ and u⁻ share this node; compare the one-sided element traces.
        const int eb = L.element(std::min(i, L.n_cells() - 1), row0);
        const int ed = L.element(std::min(i, L.n_cells() - 1), row0 - 1);
        const int local_b = i < L.n_cells() ? 0 : 1;
        const int local_d = i < L.n_cells() ? 3 : 2;
        s.interface_mismatch = std::max(
            s.interface_mismatch, std::abs(s.u[mesh.elements[eb][local_b]] - s.u[mesh.elements[ed][local_d]]));
        s.interface_values[i] = s.u[n];
        const int r = p.vi.system.node_to_free[n];
        s.interface_reaction[i] = r >= 0 ? reaction[r] : 0.0;
    }

    const auto eq = check_definitions_equivalence(p.vi, s.result, 0);
    s.equality_residual = eq.equality_rel;
    s.equality_ok = eq.equality_rel <= 1e-8;
    return s;
}

/// Largest |∂₂u⁺ − h ∂₂u⁻| over I₀ edge midpoints, from the two adjacent elements.
inline double interface_flux_jump(const Mesh& mesh, const Vector& u_nodal) {
    const auto& L = mesh.layout;
    const double h = mesh.config.h;
    const int row0 = L.n_lower();
    double worst = 0.0;
    auto d2 = [&](int e, double eta) {
        const auto m = quad::map_point(mesh.vertices(e), 0.0, eta);
        double g = 0.0;
        for (int a = 0; a < 4; ++a) g += m.grad[a][1] * u_nodal[mesh.elements[e][a]];
        return g;
    };
    for (int c = 0; c < L.n_cells(); ++c) {
        const double above = d2(L.element(c, row0), -1.0);
        const double below = d2(L.element(c, row0 - 1), 1.0);
        worst = std::max(worst, std::abs(above - h * below));
    }
    return worst;
}

/// Profile of the x1-independent reduction: nodes on [−l, b], energy per unit width.
struct OracleProfile {
    std::vector<double> x2;
    std::vector<double> u;
    std::vector<char> active;  // constraint active (rod-side nodes only)
    double energy = 0.0;
    long sweeps = 0;
    bool converged = false;

    /// Piecewise-linear interpolation of the profile.
    double at(double y) const {
        auto it = std::upper_bound(x2.begin(), x2.end(), y);
        if (it == x2.begin()) return u.front();
        if (it == x2.end()) return u.back();
        const auto k = static_cast<std::size_t>(it - x2.begin());
        const double t = (y - x2[k - 1]) / (x2[k] - x2[k - 1]);
        return (1.0 - t) * u[k - 1] + t * u[k];
    }
};

namespace detail {

/// Tridiagonal 1D system on nodes 1..2m (node 0 at x2 = −l is Dirichlet).
struct Tridiag1D {
    std::vector<double> x2;     // 2m + 1 nodes
    std::vector<double> lower;  // coupling to node k−1 (index k)
    std::vector<double> diag;
    std::vector<double> upper;  // coupling to node k+1
    std::vector<double> load;
    std::vector<double> bound;  // +inf where unconstrained
};

inline Tridiag1D oracle_system(double body, double l, double h, const ProblemData& data, int m) {
    Tridiag1D t;
    const int n = 2 * m + 1;
    t.x2.resize(n);
    for (int k = 0; k <= m; ++k) t.x2[k] = -l + l * k / m;
    t.x2[m] = 0.0;
    for (int k = 1; k <= m; ++k) t.x2[m + k] = body * k / m;
    t.lower.assign(n, 0.0);
    t.diag.assign(n, 0.0);
    t.upper.assign(n, 0.0);
    t.load.assign(n, 0.0);
    t.bound.assign(n, std::numeric_limits<double>::infinity());
    const auto g2 = quad::gauss(2);
    for (int e = 0; e + 1 < n; ++e) {
        const double y0 = t.x2[e], y1 = t.x2[e + 1], len = y1 - y0;
        const bool rod = e < m;
        const double k = (rod ? h : 1.0) / len;
        t.diag[e] += k;
        t.diag[e + 1] += k;
        t.upper[e] -= k;
        t.lower[e + 1] -= k;
        for (const auto& gp : g2) {
            const double n0 = 0.5 * (1.0 - gp.x), n1 = 0.5 * (1.0 + gp.x);
            const double y = n0 * y0 + n1 * y1;
            const double src = rod ? h * data.f(0.0, y) + 2.0 * data.d(0.0, y) : data.f(0.0, y);
            t.load[e] += gp.w * 0.5 * len * src * n0;
            t.load[e + 1] += gp.w * 0.5 * len * src * n1;
        }
    }
    if (data.g_mode == GMode::Standard)
        for (int k = 1; k <= m; ++k) t.bound[k] = data.g(0.0, t.x2[k]);
    return t;
}

/// SOR factor 2 / (1 + sqrt(1 − ρ²)) from the Jacobi spectral radius ρ of the
/// free block (optimal for tridiagonal matrices).
inline double optimal_omega(const Tridiag1D& t) {
    const int n = static_cast<int>(t.x2.size()) - 1;
    if (n < 2) return 1.0;
    std::vector<double> off2(n - 1);
    for (int k = 1; k < n; ++k) off2[k - 1] = t.upper[k] * t.upper[k] / (t.diag[k] * t.diag[k + 1]);
    // Sturm count of eigenvalues below x for the zero-diagonal scaled matrix.
    auto below = [&](double x) {
        int count = 0;
        double q = -x;
        for (int k = 0; k < n; ++k) {
            if (k > 0) q = -x - off2[k - 1] / q;
            if (q == 0.0) q = -1e-300;
            if (q < 0.0) ++count;
        }
        return count;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (below(mid) == n ? hi : lo) = mid;
    }
    const double rho = hi;
    return 2.0 / (1.0 + std::sqrt(std::max(0.0, 1.0 - rho * rho)));
}

}  // namespace detail

/// Same 1D system as a DiscreteVI (reduced index k−1 for node k), for cross-checks.
inline DiscreteVI oracle_1d_system(double body, double l, double h, const ProblemData& data, int m) {
    const auto t = detail::oracle_system(body, l, h, data, m);
    const int n = 2 * m;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Vector b(n);
    std::vector<int> idx;
    std::vector<double> c;
    for (int k = 1; k <= n; ++k) {
        A(k - 1, k - 1) = t.diag[k];
        if (k > 1) A(k - 1, k - 2) = t.lower[k];
        if (k < n) A(k - 1, k) = t.upper[k];
        b[k - 1] = t.load[k];
        if (std::isfinite(t.bound[k])) {
            idx.push_back(k - 1);
            c.push_back(t.bound[k]);
        }
    }
    return DiscreteVI::from_dense(A, b, idx, c);
}

/// Solves the x1-independent reduction of the limit problem by cascadic
/// projected SOR on successively doubled grids ending at resolution m.
inline OracleProfile oracle_1d(double body, double l, double h, const ProblemData& data, int m,
                               double tol = 1e-12, long max_sweeps = 2'000'000) {
    TJ_THROW_IF(!data.x1_independent(), ConfigError, "oracle_1d: data must not depend on x1");
    TJ_THROW_IF(m < 2 || !(body > 0.0) || !(l > 0.0) || !(h > 0.0), ConfigError, "oracle_1d: invalid arguments");

    int level = m;
    while (level > 16 && level % 2 == 0) level /= 2;
    std::vector<double> prev_x, prev_u;
    OracleProfile out;
    for (;; level *= 2) {
        const auto t = detail::oracle_system(body, l, h, data, level);
        const int n = static_cast<int>(t.x2.size());
        std::vector<double> u(n, 0.0);
        if (!prev_x.empty()) {
            OracleProfile coarse{prev_x, prev_u, {}, 0.0, 0, false};
            for (int k = 1; k < n; ++k) u[k] = coarse.at(t.x2[k]);
        }
        for (int k = 1; k < n; ++k) u[k] = std::min(u[k], t.bound[k]);
        const double omega = detail::optimal_omega(t);
        bool done = false;
        long sweeps = 0;
        while (!done && sweeps < max_sweeps) {
            double max_update = 0.0, max_u = 0.0;
            for (int k = 1; k < n; ++k) {
                double s = t.load[k] - t.lower[k] * u[k - 1];
                if (k + 1 < n) s -= t.upper[k] * u[k + 1];
                const double v = std::min((1.0 - omega) * u[k] + omega * s / t.diag[k], t.bound[k]);
                max_update = std::max(max_update, std::abs(v - u[k]));
                u[k] = v;
                max_u = std::max(max_u, std::abs(v));
            }
            ++sweeps;
            done = max_update <= tol * (1.0 + max_u);
        }
        out.sweeps += sweeps;
        out.converged = done;
        prev_x = t.x2;
        prev_u = u;
        if (level >= m) {
            out.x2 = t.x2;
            out.u = u;
            out.active.assign(n, 0);
            for (int k = 1; k < n; ++k) out.active[k] = std::isfinite(t.bound[k]) && u[k] >= t.bound[k] - 1e-9;
            double e = 0.0;
            for (int k = 0; k + 1 < n; ++k) {
                const double coef = k < level ? h : 1.0;
                const double du = u[k + 1] - u[k];
                e += coef * du * du / (t.x2[k + 1] - t.x2[k]);
            }
            out.energy = e;
            return out;
        }
    }
}

}  // namespace tj
