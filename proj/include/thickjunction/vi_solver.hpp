#pragma once

/*
 * Discrete variational inequality
 *
 *     min ½ uᵀAu − bᵀu   subject to   u_i ≤ c_i  for i in the constraint set,
 *
 * with A symmetric positive definite. At the solution the multiplier
 * mu = b − Au is nonnegative on the constraint set, vanishes off the active
 * set and the residual vanishes on unconstrained indices.
 */

#include "thickjunction/assembly.hpp"
#include "thickjunction/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace tj {

enum class ProblemLabel { EpsProblem, LimitProblem, Custom };

struct DiscreteVI {
    SparseSystem system;
    std::vector<int> constrained;  // strictly increasing reduced indices
    std::vector<double> bound;     // upper bound per constrained index
    ProblemLabel label = ProblemLabel::Custom;

    int size() const { return system.size(); }
    int constraint_count() const { return static_cast<int>(constrained.size()); }

    /// Upper bound per reduced index, +inf where unconstrained.
    Vector upper() const {
        Vector c = Vector::Constant(size(), std::numeric_limits<double>::infinity());
        for (int k = 0; k < constraint_count(); ++k) c[constrained[k]] = bound[k];
        return c;
    }

    void validate() const {
        TJ_THROW_IF(constrained.size() != bound.size(), ConfigError, "DiscreteVI: bound/index size mismatch");
        for (std::size_t k = 0; k < constrained.size(); ++k) {
            TJ_THROW_IF(constrained[k] < 0 || constrained[k] >= size(), ConfigError, "DiscreteVI: invalid index");
            TJ_THROW_IF(k > 0 && constrained[k] <= constrained[k - 1], ConfigError,
                        "DiscreteVI: constraint indices must be strictly increasing");
            TJ_THROW_IF(!std::isfinite(bound[k]), ConfigError, "DiscreteVI: bounds must be finite");
        }
    }

    /// Small systems given densely, used by tests and the oracle solver.
    static DiscreteVI from_dense(const Eigen::MatrixXd& A, const Vector& b, std::vector<int> idx,
                                 std::vector<double> c) {
        DiscreteVI vi;
        const int n = static_cast<int>(b.size());
        vi.system.A = A.sparseView();
        vi.system.A.makeCompressed();
        vi.system.b = b;
        vi.system.free_to_node.resize(n);
        vi.system.node_to_free.resize(n);
        for (int i = 0; i < n; ++i) vi.system.free_to_node[i] = vi.system.node_to_free[i] = i;
        vi.constrained = std::move(idx);
        vi.bound = std::move(c);
        vi.validate();
        return vi;
    }
};

struct KktResidual {
    double feasibility = 0.0;      // max(u_i − c_i, 0)
    double sign = 0.0;             // max(−mu_i, 0)
    double complementarity = 0.0;  // max |mu_i (c_i − u_i)|
    double stationarity = 0.0;     // max |(b − Au)_i| off the constraint set

    double max() const { return std::max({feasibility, sign, complementarity, stationarity}); }
};

struct SolveResult {
    Vector u;                     // reduced solution
    Vector mu;                    // b − Au on the constraint set (aligned with DiscreteVI::constrained)
    std::vector<int> active_set;  // reduced indices with u_i >= c_i − 1e-9
    int iterations = 0;
    std::vector<double> history;  // PSOR: max nodal update per sweep; PDAS: active-set changes per step
    std::vector<double> energy;   // PSOR: ½uᵀAu − bᵀu after each sweep
    bool converged = false;
    KktResidual kkt;
    std::string method;
    int kkt_points = 0;  // brute force only: number of KKT-consistent active sets found
};

struct SolverOptions {
    double omega = 1.5;
    double tol = 1e-10;
    double tol_kkt = -1.0;  // < 0: 1e-8 (1 + |b|_inf)
    int max_iter = -1;      // < 0: 200·n sweeps (PSOR), 50 steps (PDAS)
    std::optional<Vector> initial;                 // PSOR start (projected onto the feasible set)
    std::optional<std::vector<char>> initial_active;  // PDAS start, one flag per constraint
};

inline double default_tol_kkt(const DiscreteVI& vi) {
    return 1e-8 * (1.0 + (vi.system.b.size() ? vi.system.b.cwiseAbs().maxCoeff() : 0.0));
}

inline double energy(const DiscreteVI& vi, const Vector& u) {
    return 0.5 * u.dot(vi.system.A * u) - vi.system.b.dot(u);
}

inline KktResidual kkt_residual(const DiscreteVI& vi, const Vector& u) {
    TJ_THROW_IF(u.size() != vi.size(), ConfigError, "kkt_residual: dimension mismatch");
    const Vector r = vi.system.b - vi.system.A * u;
    KktResidual k;
    std::vector<char> is_c(vi.size(), 0);
    for (int j = 0; j < vi.constraint_count(); ++j) {
        const int i = vi.constrained[j];
        is_c[i] = 1;
        const double gap = vi.bound[j] - u[i];
        k.feasibility = std::max(k.feasibility, -gap);
        k.sign = std::max(k.sign, -r[i]);
        k.complementarity = std::max(k.complementarity, std::abs(r[i] * gap));
    }
    for (int i = 0; i < vi.size(); ++i)
        if (!is_c[i]) k.stationarity = std::max(k.stationarity, std::abs(r[i]));
    return k;
}

namespace detail {

inline void finish(const DiscreteVI& vi, SolveResult& res) {
    const Vector r = vi.system.b - vi.system.A * res.u;
    res.mu.resize(vi.constraint_count());
    res.active_set.clear();
    for (int j = 0; j < vi.constraint_count(); ++j) {
        const int i = vi.constrained[j];
        res.mu[j] = r[i];
        if (res.u[i] >= vi.bound[j] - 1e-9) res.active_set.push_back(i);
    }
    res.kkt = kkt_residual(vi, res.u);
}

}  // namespace detail

/// Projected successive over-relaxation with a fixed increasing sweep order.
inline SolveResult solve_psor(const DiscreteVI& vi, const SolverOptions& opt = {}) {
    vi.validate();
    TJ_THROW_IF(!(opt.omega > 0.0 && opt.omega < 2.0), ConfigError, "solve_psor: omega must lie in (0, 2)");
    const int n = vi.size();
    const auto& A = vi.system.A;
    const auto& b = vi.system.b;
    const Vector c = vi.upper();
    const double tol_kkt = opt.tol_kkt < 0 ? default_tol_kkt(vi) : opt.tol_kkt;
    const long max_iter = opt.max_iter < 0 ? 200L * std::max(n, 1) : opt.max_iter;

    Vector diag(n);
    for (int i = 0; i < n; ++i) diag[i] = A.coeff(i, i);

    SolveResult res;
    res.method = "psor";
    res.u = opt.initial ? *opt.initial : Vector::Zero(n);
    TJ_THROW_IF(res.u.size() != n, ConfigError, "solve_psor: initial guess has wrong size");
    res.u = res.u.cwiseMin(c);

    for (long it = 1; it <= max_iter; ++it) {
        double max_update = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = b[i];
            for (SparseMatrix::InnerIterator e(A, i); e; ++e)
                if (e.col() != i) s -= e.value() * res.u[e.col()];
            double ui = (1.0 - opt.omega) * res.u[i] + opt.omega * s / diag[i];
            ui = std::min(ui, c[i]);
            max_update = std::max(max_update, std::abs(ui - res.u[i]));
            res.u[i] = ui;
        }
        res.iterations = static_cast<int>(it);
        res.history.push_back(max_update);
        res.energy.push_back(energy(vi, res.u));
        const double scale = 1.0 + (n ? res.u.cwiseAbs().maxCoeff() : 0.0);
        if (max_update < opt.tol * scale && kkt_residual(vi, res.u).max() < tol_kkt) {
            res.converged = true;
            break;
        }
    }
    detail::finish(vi, res);
    return res;
}

namespace detail {

/// Solves the system with u_i = c_i fixed on active constraints.
inline Vector solve_with_active(const DiscreteVI& vi, const std::vector<char>& active) {
    const int n = vi.size();
    const auto& A = vi.system.A;
    Vector u = Vector::Zero(n);
    std::vector<int> to_free(n, -1);
    for (int j = 0; j < vi.constraint_count(); ++j)
        if (active[j]) u[vi.constrained[j]] = vi.bound[j];
    std::vector<char> fixed(n, 0);
    for (int j = 0; j < vi.constraint_count(); ++j)
        if (active[j]) fixed[vi.constrained[j]] = 1;
    std::vector<int> free;
    for (int i = 0; i < n; ++i)
        if (!fixed[i]) {
            to_free[i] = static_cast<int>(free.size());
            free.push_back(i);
        }
    const int m = static_cast<int>(free.size());
    if (m == 0) return u;
    std::vector<Eigen::Triplet<double>> trip;
    Vector rhs(m);
    for (int r = 0; r < m; ++r) {
        const int i = free[r];
        double s = vi.system.b[i];
        for (SparseMatrix::InnerIterator e(A, i); e; ++e) {
            const int cidx = to_free[e.col()];
            if (cidx >= 0) trip.emplace_back(r, cidx, e.value());
            else s -= e.value() * u[e.col()];
        }
        rhs[r] = s;
    }
    Eigen::SparseMatrix<double> Aff(m, m);
    Aff.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Aff);
    TJ_THROW_IF(ldlt.info() != Eigen::Success, Error, "PDAS: factorisation failed (system not SPD?)");
    const Vector x = ldlt.solve(rhs);
    for (int r = 0; r < m; ++r) u[free[r]] = x[r];
    return u;
}

}  // namespace detail

/// Primal-dual active set iteration (σ = 1); stops when the active set repeats.
inline SolveResult solve_pdas(const DiscreteVI& vi, const SolverOptions& opt = {}) {
    vi.validate();
    const int k = vi.constraint_count();
    const int max_iter = opt.max_iter < 0 ? 50 : opt.max_iter;
    constexpr double sigma = 1.0;

    SolveResult res;
    res.method = "pdas";
    std::vector<char> active = opt.initial_active ? *opt.initial_active : std::vector<char>(k, 0);
    TJ_THROW_IF(static_cast<int>(active.size()) != k, ConfigError, "solve_pdas: initial active set has wrong size");
    std::set<std::vector<char>> seen{active};

    for (int it = 1; it <= max_iter; ++it) {
        res.u = detail::solve_with_active(vi, active);
        res.iterations = it;
        const Vector r = vi.system.b - vi.system.A * res.u;
        std::vector<char> next(k, 0);
        int changes = 0;
        for (int j = 0; j < k; ++j) {
            const int i = vi.constrained[j];
            const double mu = active[j] ? r[i] : 0.0;
            next[j] = mu + sigma * (res.u[i] - vi.bound[j]) > 0.0 ? 1 : 0;
            changes += next[j] != active[j];
        }
        res.history.push_back(changes);
        if (changes == 0) {
            res.converged = true;
            break;
        }
        if (!seen.insert(next).second) break;  // cycle
        active = std::move(next);
    }
    detail::finish(vi, res);
    return res;
}

/// Exhaustive search over all 2^k active sets; k ≤ 20.
inline SolveResult solve_bruteforce(const DiscreteVI& vi) {
    vi.validate();
    const int k = vi.constraint_count();
    TJ_THROW_IF(k > 20, ConfigError, "solve_bruteforce: refuses more than 20 constraints");
    const int n = vi.size();
    const Eigen::MatrixXd A = Eigen::MatrixXd(vi.system.A);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const Eigen::MatrixXd Ainv = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
    const Vector u0 = ldlt.solve(vi.system.b);
    const double scale = 1.0 + u0.cwiseAbs().maxCoeff() + vi.system.b.cwiseAbs().maxCoeff();
    const double check_tol = 1e-11 * scale;

    SolveResult res;
    res.method = "bruteforce";
    bool found = false;
    std::vector<int> S;
    for (unsigned long mask = 0; mask < (1UL << k); ++mask) {
        S.clear();
        for (int j = 0; j < k; ++j)
            if (mask & (1UL << j)) S.push_back(j);
        const int s = static_cast<int>(S.size());
        Vector lambda = Vector::Zero(s);
        if (s > 0) {
            Eigen::MatrixXd M(s, s);
            Vector rhs(s);
            for (int p = 0; p < s; ++p) {
                const int ip = vi.constrained[S[p]];
                rhs[p] = u0[ip] - vi.bound[S[p]];
                for (int q = 0; q < s; ++q) M(p, q) = Ainv(ip, vi.constrained[S[q]]);
            }
            lambda = M.ldlt().solve(rhs);
        }
        if (s > 0 && lambda.minCoeff() < -check_tol) continue;
        Vector u = u0;
        for (int p = 0; p < s; ++p) u -= lambda[p] * Ainv.col(vi.constrained[S[p]]);
        bool feasible = true;
        for (int j = 0; j < k && feasible; ++j) feasible = u[vi.constrained[j]] <= vi.bound[j] + check_tol;
        if (!feasible) continue;
        ++res.kkt_points;
        if (!found) {
            for (int p = 0; p < s; ++p) u[vi.constrained[S[p]]] = vi.bound[S[p]];
            res.u = u;
            found = true;
        }
    }
    TJ_THROW_IF(!found, Error, "solve_bruteforce: no KKT point (system not SPD?)");
    res.iterations = 1;
    res.converged = true;
    detail::finish(vi, res);
    return res;
}

enum class SolverMethod { Psor, Pdas };

inline SolveResult solve(const DiscreteVI& vi, SolverMethod method, const SolverOptions& opt = {}) {
    return method == SolverMethod::Psor ? solve_psor(vi, opt) : solve_pdas(vi, opt);
}

/// Discrete forms of the two weak-solution definitions at a computed solution.
struct EquivalenceReport {
    double equality_abs = 0.0;        // |uᵀA(u − ĝ) − bᵀ(u − ĝ)|
    double equality_rel = 0.0;        // divided by 1 + |uᵀA(u − ĝ)| + |bᵀ(u − ĝ)|
    double worst_inequality = 0.0;    // largest relative violation over all trial functions
    int trials = 0;
    std::optional<Vector> witness;    // trial function attaining a violation above tol
    bool passed = true;
};

/// ĝ: the bound on constrained indices, zero elsewhere.
inline Vector obstacle_vector(const DiscreteVI& vi) {
    Vector g = Vector::Zero(vi.size());
    for (int j = 0; j < vi.constraint_count(); ++j) g[vi.constrained[j]] = vi.bound[j];
    return g;
}

/// Random trial functions below the obstacle, deterministic in `seed`.
inline std::vector<Vector> feasible_trials(const DiscreteVI& vi, const Vector& u, int count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double scale = 1.0 + (u.size() ? u.cwiseAbs().maxCoeff() : 0.0);
    const Vector c = vi.upper();
    std::vector<Vector> out;
    for (int t = 0; t < count; ++t) {
        Vector phi(vi.size());
        for (int i = 0; i < vi.size(); ++i) phi[i] = u[i] + scale * U(rng);
        out.push_back(phi.cwiseMin(c));
    }
    return out;
}

/// Checks ĝ-equality and both variational inequalities for `trial_count`
/// random feasible φ plus the two substitutions φ = ĝ and φ = 2u − ĝ.
inline EquivalenceReport check_definitions_equivalence(const DiscreteVI& vi, const SolveResult& result,
                                                       int trial_count = 50, double tol = 1e-8,
                                                       unsigned seed = 2024) {
    const auto& A = vi.system.A;
    const auto& b = vi.system.b;
    const Vector& u = result.u;
    const Vector g = obstacle_vector(vi);
    const Vector Au = A * u;

    EquivalenceReport rep;
    const Vector ug = u - g;
    const double lhs = Au.dot(ug);
    const double rhs = b.dot(ug);
    rep.equality_abs = std::abs(lhs - rhs);
    rep.equality_rel = rep.equality_abs / (1.0 + std::abs(lhs) + std::abs(rhs));

    std::vector<Vector> trials{g, 2.0 * u - g};
    for (auto& phi : feasible_trials(vi, u, trial_count, seed)) trials.push_back(std::move(phi));
    const Vector residual = Au - b;
    for (const auto& phi : trials) {
        // (Au − b)ᵀ(φ − u) ≥ 0 and (Au − b)ᵀ(φ − ĝ) ≥ 0
        for (const Vector& dir : {Vector(phi - u), Vector(phi - g)}) {
            const double value = residual.dot(dir);
            const double rel = std::max(0.0, -value) / (1.0 + std::abs(Au.dot(dir)) + std::abs(b.dot(dir)));
            if (rel > rep.worst_inequality) {
                rep.worst_inequality = rel;
                if (rel > tol) rep.witness = phi;
            }
        }
        ++rep.trials;
    }
    rep.passed = rep.equality_rel <= tol && rep.worst_inequality <= tol;
    return rep;
}

/// Minty form: (Aφ − b)ᵀ(φ − u) ≥ 0 for feasible φ. Returns the largest relative violation.
inline double minty_violation(const DiscreteVI& vi, const Vector& u, int trial_count = 50, unsigned seed = 7) {
    double worst = 0.0;
    for (const auto& phi : feasible_trials(vi, u, trial_count, seed)) {
        const Vector Aphi = vi.system.A * phi;
        const Vector dir = phi - u;
        const double value = (Aphi - vi.system.b).dot(dir);
        worst = std::max(worst, std::max(0.0, -value) / (1.0 + std::abs(Aphi.dot(dir)) + std::abs(vi.system.b.dot(dir))));
    }
    return worst;
}

}  // namespace tj
