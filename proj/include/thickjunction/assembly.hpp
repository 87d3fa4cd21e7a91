#pragma once

/*
 * Bilinear forms and load vectors on structured Q1 meshes.
 *
 * Volume integrals use 2×2 Gauss points, edge integrals 2 Gauss points.
 * The Neumann condition on the remaining boundary is natural and needs no
 * assembly action.
 */

#include "thickjunction/error.hpp"
#include "thickjunction/geometry.hpp"
#include "thickjunction/problem_data.hpp"
#include "thickjunction/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <vector>

namespace tj {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using ElementMatrix = std::array<std::array<double, 4>, 4>;

/// Which gradient form to assemble.
struct StiffnessForm {
    bool anisotropic = false;
    double h = 1.0;

    /// ∫ ∇u·∇v on every element.
    static StiffnessForm full() { return {}; }
    /// ∫_{Ω₀} ∇u·∇v + h ∫_{D₀} ∂₂u ∂₂v.
    static StiffnessForm limit(double h) { return {true, h}; }
};

/// Which right-hand side to assemble.
struct LoadForm {
    bool limit = false;
    double param = 0.0;  // ε for the junction problem, h for the limit problem

    /// ∫_{Ω_ε} f v + ε ∫_{S_ε} d v.
    static LoadForm eps(double e) { return {false, e}; }
    /// ∫_{Ω₀} f v + ∫_{D₀} (h f + 2 d) v.
    static LoadForm limit_problem(double h) { return {true, h}; }
};

inline ElementMatrix element_stiffness(const quad::Quad& v, double cx1, double cx2) {
    ElementMatrix k{};
    const auto g = quad::gauss(2);
    for (const auto& p : g)
        for (const auto& q : g) {
            const auto m = quad::map_point(v, p.x, q.x);
            const double w = p.w * q.w * m.det_j;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    k[a][b] += w * (cx1 * m.grad[a][0] * m.grad[b][0] + cx2 * m.grad[a][1] * m.grad[b][1]);
        }
    return k;
}

inline ElementMatrix element_mass(const quad::Quad& v) {
    ElementMatrix k{};
    const auto g = quad::gauss(2);
    for (const auto& p : g)
        for (const auto& q : g) {
            const auto m = quad::map_point(v, p.x, q.x);
            const double w = p.w * q.w * m.det_j;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) k[a][b] += w * m.n[a] * m.n[b];
        }
    return k;
}

namespace detail {

template <class ElementFn>
SparseMatrix assemble_matrix(const Mesh& mesh, ElementFn&& element_fn) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(16 * mesh.elements.size());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const ElementMatrix k = element_fn(e);
        const auto& el = mesh.elements[e];
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) trip.emplace_back(el[a], el[b], k[a][b]);
    }
    SparseMatrix A(mesh.node_count(), mesh.node_count());
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

}  // namespace detail

inline SparseMatrix assemble_stiffness(const Mesh& mesh, StiffnessForm form = StiffnessForm::full()) {
    TJ_THROW_IF(mesh.regions.size() != mesh.elements.size(), ConfigError, "assemble_stiffness: mesh lacks region flags");
    if (form.anisotropic) {
        TJ_THROW_IF(std::any_of(mesh.regions.begin(), mesh.regions.end(), [](Region r) { return r == Region::Rod; }),
                    ConfigError, "assemble_stiffness: anisotropic form needs Body/D0 region flags, found Rod");
    }
    return detail::assemble_matrix(mesh, [&](int e) {
        if (form.anisotropic && mesh.regions[e] == Region::D0) return element_stiffness(mesh.vertices(e), 0.0, form.h);
        return element_stiffness(mesh.vertices(e), 1.0, 1.0);
    });
}

inline SparseMatrix assemble_mass(const Mesh& mesh) {
    return detail::assemble_matrix(mesh, [&](int e) { return element_mass(mesh.vertices(e)); });
}

/// Adds ∫_edge w(x) v ds for every edge in `edges`, 2-point Gauss.
template <class Weight>
void add_edge_load(const Mesh& mesh, const std::vector<TaggedEdge>& edges, Weight&& weight, Vector& b) {
    const auto g = quad::gauss(2);
    for (const auto& te : edges) {
        const auto [p, q] = mesh.edge_nodes(te);
        const auto& P = mesh.nodes[p];
        const auto& Q = mesh.nodes[q];
        const double half = 0.5 * std::hypot(Q[0] - P[0], Q[1] - P[1]);
        for (const auto& gp : g) {
            const double np = 0.5 * (1.0 - gp.x);
            const double nq = 0.5 * (1.0 + gp.x);
            const double x1 = np * P[0] + nq * Q[0];
            const double x2 = np * P[1] + nq * Q[1];
            const double w = gp.w * half * weight(x1, x2);
            b[p] += w * np;
            b[q] += w * nq;
        }
    }
}

inline Vector assemble_load(const Mesh& mesh, const ProblemData& data, LoadForm form) {
    Vector b = Vector::Zero(mesh.node_count());
    const auto g = quad::gauss(2);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto v = mesh.vertices(e);
        const bool d0 = form.limit && mesh.regions[e] == Region::D0;
        const auto& el = mesh.elements[e];
        for (const auto& p : g)
            for (const auto& q : g) {
                const auto m = quad::map_point(v, p.x, q.x);
                double src = data.f(m.x[0], m.x[1]);
                if (d0) src = form.param * src + 2.0 * data.d(m.x[0], m.x[1]);
                TJ_THROW_IF(!std::isfinite(src), ConfigError, "assemble_load: data not finite at a quadrature point");
                const double w = p.w * q.w * m.det_j * src;
                for (int a = 0; a < 4; ++a) b[el[a]] += w * m.n[a];
            }
    }
    if (!form.limit && mesh.has_tag(BoundaryTag::S_eps)) {
        const double e = form.param;
        add_edge_load(mesh, mesh.edges_with(BoundaryTag::S_eps),
                      [&](double x1, double x2) { return e * data.d(x1, x2); }, b);
    }
    return b;
}

/// Reduced system after eliminating homogeneous Dirichlet nodes.
struct SparseSystem {
    SparseMatrix A;                 // reduced, symmetric positive definite
    Vector b;                       // reduced
    std::vector<int> dirichlet;     // node ids (prescribed value 0)
    std::vector<int> free_to_node;  // reduced index -> node id
    std::vector<int> node_to_free;  // node id -> reduced index, -1 for Dirichlet nodes

    int size() const { return static_cast<int>(free_to_node.size()); }
    int full_size() const { return static_cast<int>(node_to_free.size()); }

    /// Node-indexed field with zeros on Dirichlet nodes.
    Vector expand(const Vector& reduced) const {
        Vector full = Vector::Zero(full_size());
        for (int i = 0; i < size(); ++i) full[free_to_node[i]] = reduced[i];
        return full;
    }

    Vector restrict_to_free(const Vector& full) const {
        Vector r(size());
        for (int i = 0; i < size(); ++i) r[i] = full[free_to_node[i]];
        return r;
    }
};

/// Removes rows and columns of nodes carrying any of `tags`.
inline SparseSystem apply_dirichlet(const SparseMatrix& A, const Vector& b, const Mesh& mesh,
                                    const std::vector<BoundaryTag>& tags) {
    const int n = static_cast<int>(b.size());
    TJ_THROW_IF(A.rows() != n || A.cols() != n, ConfigError, "apply_dirichlet: size mismatch");
    std::vector<char> fixed(n, 0);
    for (auto t : tags) {
        TJ_THROW_IF(!mesh.has_tag(t) || mesh.node_set(t).empty(), ConfigError,
                    "apply_dirichlet: tag " + std::string(to_string(t)) + " matches no nodes");
        for (int node : mesh.node_set(t)) fixed[node] = 1;
    }
    SparseSystem sys;
    sys.node_to_free.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        if (fixed[i]) {
            sys.dirichlet.push_back(i);
        } else {
            sys.node_to_free[i] = static_cast<int>(sys.free_to_node.size());
            sys.free_to_node.push_back(i);
        }
    }
    const int m = sys.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nonZeros());
    sys.b.resize(m);
    for (int r = 0; r < m; ++r) {
        const int row = sys.free_to_node[r];
        sys.b[r] = b[row];
        for (SparseMatrix::InnerIterator it(A, row); it; ++it) {
            const int c = sys.node_to_free[it.col()];
            if (c >= 0) trip.emplace_back(r, c, it.value());
        }
    }
    sys.A.resize(m, m);
    sys.A.setFromTriplets(trip.begin(), trip.end());
    sys.A.makeCompressed();
    return sys;
}

/// Largest relative asymmetry max|A_ij − A_ji| / max|A_ij|.
inline double asymmetry(const SparseMatrix& A) {
    if (A.nonZeros() == 0) return 0.0;
    const SparseMatrix diff = A - SparseMatrix(A.transpose());
    const double scale = A.coeffs().cwiseAbs().maxCoeff();
    return diff.nonZeros() == 0 ? 0.0 : diff.coeffs().cwiseAbs().maxCoeff() / scale;
}

/// Extreme Ritz values (min, max) of symmetric A after `iters` Lanczos steps
/// from a fixed pseudo-random start vector.
inline std::pair<double, double> lanczos_ritz_extremes(const SparseMatrix& A, int iters = 50) {
    const int n = static_cast<int>(A.rows());
    iters = std::min(iters, n);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vector q(n);
    for (int i = 0; i < n; ++i) q[i] = U(rng);
    q.normalize();
    std::vector<Vector> basis{q};
    std::vector<double> alpha, beta;
    Vector q_prev = Vector::Zero(n);
    double b_prev = 0.0;
    for (int k = 0; k < iters; ++k) {
        Vector w = A * basis.back() - b_prev * q_prev;
        const double a = basis.back().dot(w);
        w -= a * basis.back();
        for (const auto& v : basis) w -= v.dot(w) * v;  // full reorthogonalisation
        alpha.push_back(a);
        const double b = w.norm();
        if (k + 1 == iters || b < 1e-14) break;
        beta.push_back(b);
        q_prev = basis.back();
        b_prev = b;
        basis.push_back(w / b);
    }
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(m - 1)};
}

/// Matrix Market coordinate dump (1-based, general).
inline void write_matrix_market(const SparseMatrix& A, const std::string& path) {
    std::ofstream out(path);
    TJ_THROW_IF(!out, Error, "cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
    out.precision(17);
    for (int r = 0; r < A.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(A, r); it; ++it) out << r + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace tj
