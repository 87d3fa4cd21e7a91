#include "thickjunction/eps_problem.hpp"
#include "thickjunction/vi_solver.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace tj;

namespace {

DiscreteVI two_by_two(std::vector<int> idx, std::vector<double> c) {
    Eigen::MatrixXd A(2, 2);
    A << 2, -1, -1, 2;
    return DiscreteVI::from_dense(A, Vector::Ones(2), std::move(idx), std::move(c));
}

// SPD instance with k constraints at random positions.
DiscreteVI random_vi(std::mt19937_64& rng, int n, int k) {
    std::normal_distribution<double> N01;
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = N01(rng);
    const Eigen::MatrixXd A = B * B.transpose() / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Vector b(n);
    for (int i = 0; i < n; ++i) b[i] = N01(rng);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> idx(perm.begin(), perm.begin() + k);
    std::sort(idx.begin(), idx.end());
    std::vector<double> c(k);
    for (auto& v : c) v = 0.3 * N01(rng);
    return DiscreteVI::from_dense(A, b, idx, c);
}

SolverOptions tight() {
    SolverOptions o;
    o.tol = 1e-14;
    return o;
}

EpsProblem small_eps() {
    JunctionConfig c;
    c.N = 2;
    return assemble_eps(c, ProblemData::parse("1", "x2*(x2+1)", "0.25*(x2+1)"));
}

}  // namespace

TEST(ViSolver, UnconstrainedTwoByTwo) {
    const auto vi = two_by_two({}, {});
    for (const auto& r : {solve_psor(vi, tight()), solve_pdas(vi), solve_bruteforce(vi)}) {
        EXPECT_TRUE(r.converged) << r.method;
        EXPECT_NEAR(r.u[0], 1.0, 1e-10) << r.method;
        EXPECT_NEAR(r.u[1], 1.0, 1e-10) << r.method;
        EXPECT_TRUE(r.active_set.empty());
    }
}

TEST(ViSolver, ActiveBoundTwoByTwo) {
    const auto vi = two_by_two({0}, {0.0});
    for (const auto& r : {solve_psor(vi, tight()), solve_pdas(vi), solve_bruteforce(vi)}) {
        EXPECT_TRUE(r.converged) << r.method;
        EXPECT_NEAR(r.u[0], 0.0, 1e-10) << r.method;
        EXPECT_NEAR(r.u[1], 0.5, 1e-10) << r.method;
        ASSERT_EQ(r.mu.size(), 1);
        EXPECT_NEAR(r.mu[0], 1.5, 1e-10) << r.method;
        EXPECT_EQ(r.active_set, std::vector<int>{0});
    }
    EXPECT_EQ(solve_bruteforce(vi).kkt_points, 1);
}

TEST(ViSolver, InactiveBoundTwoByTwo) {
    const auto vi = two_by_two({0}, {10.0});
    for (const auto& r : {solve_psor(vi, tight()), solve_pdas(vi), solve_bruteforce(vi)}) {
        EXPECT_NEAR(r.u[0], 1.0, 1e-10) << r.method;
        EXPECT_NEAR(r.u[1], 1.0, 1e-10) << r.method;
        EXPECT_TRUE(r.active_set.empty()) << r.method;
    }
}

TEST(ViSolver, ZeroLoadPdasOneStep) {
    std::mt19937_64 rng(1);
    auto vi = random_vi(rng, 20, 8);
    vi.system.b.setZero();
    for (auto& c : vi.bound) c = std::abs(c);
    const auto r = solve_pdas(vi);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_EQ(r.u.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(r.active_set.empty());
}

TEST(ViSolver, PdasStartIndependence) {
    std::mt19937_64 rng(2);
    const auto vi = random_vi(rng, 100, 40);
    SolverOptions all;
    all.initial_active = std::vector<char>(40, 1);
    const auto a = solve_pdas(vi);
    const auto b = solve_pdas(vi, all);
    ASSERT_TRUE(a.converged);
    ASSERT_TRUE(b.converged);
    EXPECT_EQ(a.active_set, b.active_set);
    EXPECT_LE((a.u - b.u).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ViSolver, BruteForceRefusesLargeK) {
    std::mt19937_64 rng(3);
    EXPECT_THROW(solve_bruteforce(random_vi(rng, 30, 21)), ConfigError);
}

TEST(ViSolver, BruteForceWithoutConstraintsIsLinearSolve) {
    std::mt19937_64 rng(4);
    const auto vi = random_vi(rng, 12, 0);
    const auto r = solve_bruteforce(vi);
    const Vector exact = Eigen::MatrixXd(vi.system.A).ldlt().solve(vi.system.b);
    EXPECT_LE((r.u - exact).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ViSolver, UniqueKktPointOnRandomInstances) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
        const auto r = solve_bruteforce(random_vi(rng, 8 + static_cast<int>(rng() % 20), 8));
        EXPECT_EQ(r.kkt_points, 1) << t;
    }
}

TEST(ViSolver, KktResidualOfOracleIsTiny) {
    std::mt19937_64 rng(6);
    const auto vi = random_vi(rng, 25, 10);
    EXPECT_LE(kkt_residual(vi, solve_bruteforce(vi).u).max(), 1e-10);
}

TEST(ViSolver, KktResidualAtObstacleWithZeroLoad) {
    // All constraints: u = c, b = 0. Sign violation = max(−mu) with mu = −A c.
    Eigen::MatrixXd A(3, 3);
    A << 2, -1, 0, -1, 2, -1, 0, -1, 2;
    const Vector c(Eigen::Vector3d(1.0, 0.5, -0.25));
    const auto vi = DiscreteVI::from_dense(A, Vector::Zero(3), {0, 1, 2}, {c[0], c[1], c[2]});
    const auto k = kkt_residual(vi, c);
    const Vector mu = -A * c;
    EXPECT_EQ(k.feasibility, 0.0);
    EXPECT_NEAR(k.sign, std::max(0.0, -mu.minCoeff()), 1e-15);
    EXPECT_EQ(k.complementarity, 0.0);
    EXPECT_EQ(k.stationarity, 0.0);

    // Partially constrained: stationarity on the free index equals |(A c)_2|.
    const auto vi2 = DiscreteVI::from_dense(A, Vector::Zero(3), {0, 1}, {c[0], c[1]});
    EXPECT_NEAR(kkt_residual(vi2, c).stationarity, std::abs((A * c)[2]), 1e-15);
}

TEST(ViSolver, InteriorPointIsFeasible) {
    const auto vi = two_by_two({0, 1}, {1.0, 1.0});
    const auto k = kkt_residual(vi, Vector::Constant(2, -3.0));
    EXPECT_EQ(k.feasibility, 0.0);
    EXPECT_GT(k.complementarity, 0.0);
}

TEST(ViSolver, PsorEnergyMonotone) {
    const auto ep = small_eps();
    const auto r = solve_psor(ep.vi);
    ASSERT_TRUE(r.converged);
    for (std::size_t k = 1; k < r.energy.size(); ++k) EXPECT_LE(r.energy[k], r.energy[k - 1] + 1e-14) << k;
}

TEST(ViSolver, PsorNonConvergenceFlagged) {
    const auto ep = small_eps();
    SolverOptions o;
    o.max_iter = 3;
    const auto r = solve_psor(ep.vi, o);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 3);
    EXPECT_EQ(r.history.size(), 3u);
}

TEST(ViSolver, PsorRejectsBadOmega) {
    SolverOptions o;
    o.omega = 2.0;
    EXPECT_THROW(solve_psor(two_by_two({}, {}), o), ConfigError);
}

TEST(ViSolver, JunctionProblemSolversAgree) {
    const auto ep = small_eps();
    const auto p = solve_psor(ep.vi, tight());
    const auto q = solve_pdas(ep.vi);
    ASSERT_TRUE(p.converged);
    ASSERT_TRUE(q.converged);
    const double scale = 1.0 + q.u.cwiseAbs().maxCoeff();
    EXPECT_LE((p.u - q.u).cwiseAbs().maxCoeff(), 1e-8 * scale);
    EXPECT_LE(q.kkt.max(), default_tol_kkt(ep.vi));
}

TEST(ViSolver, JunctionConstraintSet) {
    const auto ep = small_eps();
    const auto& s = ep.mesh.node_set(BoundaryTag::S_eps);
    EXPECT_EQ(ep.vi.constraint_count(), static_cast<int>(s.size()));
    for (int j = 0; j < ep.vi.constraint_count(); ++j) {
        const int node = ep.vi.system.free_to_node[ep.vi.constrained[j]];
        const auto& x = ep.mesh.nodes[node];
        EXPECT_DOUBLE_EQ(ep.vi.bound[j], x[1] * (x[1] + 1.0));
    }
}

TEST(ViSolverProperty, ScalingCovariance) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        auto vi = random_vi(rng, 15, 6);
        const auto r = solve_pdas(vi);
        const double lambda = 0.1 + 5.0 * (rng() % 1000) / 1000.0;
        vi.system.b *= lambda;
        for (auto& c : vi.bound) c *= lambda;
        const auto s = solve_pdas(vi);
        EXPECT_LE((s.u - lambda * r.u).cwiseAbs().maxCoeff(), 1e-10 * (1 + lambda));
        EXPECT_EQ(s.active_set, r.active_set);
    }
}

TEST(ViSolverProperty, UniquenessFromDistinctStarts) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const auto vi = random_vi(rng, 20, 10);
        SolverOptions a = tight(), b = tight();
        a.initial = Vector::Constant(20, -5.0);
        b.initial = Vector::Constant(20, 5.0);
        const auto ra = solve_psor(vi, a), rb = solve_psor(vi, b);
        ASSERT_TRUE(ra.converged && rb.converged);
        EXPECT_LE((ra.u - rb.u).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Equivalence, ExactSolutionPasses) {
    const auto vi = two_by_two({0}, {0.0});
    const auto r = solve_bruteforce(vi);
    const auto rep = check_definitions_equivalence(vi, r);
    EXPECT_LE(rep.equality_abs, 1e-10);
    EXPECT_FALSE(rep.witness.has_value());
    EXPECT_TRUE(rep.passed);
    EXPECT_EQ(rep.trials, 52);
}

TEST(Equivalence, PerturbationDetected) {
    const auto vi = two_by_two({0}, {0.0});
    auto r = solve_bruteforce(vi);
    r.u[1] += 1e-3;  // inactive node
    const auto rep = check_definitions_equivalence(vi, r);
    EXPECT_GT(rep.equality_abs, 1e-8);
    EXPECT_FALSE(rep.passed);
}

TEST(Equivalence, ZeroProblem) {
    Eigen::MatrixXd A(2, 2);
    A << 2, -1, -1, 2;
    const auto vi = DiscreteVI::from_dense(A, Vector::Zero(2), {0, 1}, {0.0, 0.0});
    const auto r = solve_pdas(vi);
    const auto rep = check_definitions_equivalence(vi, r);
    EXPECT_EQ(rep.equality_abs, 0.0);
    EXPECT_EQ(rep.worst_inequality, 0.0);
}

TEST(Equivalence, WrongSolutionHasWitness) {
    // u not optimal: the gradient points into the feasible set somewhere.
    const auto vi = two_by_two({0}, {0.0});
    SolveResult fake;
    fake.u = Vector::Zero(2);
    const auto rep = check_definitions_equivalence(vi, fake);
    EXPECT_TRUE(rep.witness.has_value());
    EXPECT_FALSE(rep.passed);
}

TEST(Equivalence, JunctionSolution) {
    const auto ep = small_eps();
    const auto r = solve_pdas(ep.vi);
    const auto rep = check_definitions_equivalence(ep.vi, r);
    EXPECT_LE(rep.equality_rel, 1e-8);
    EXPECT_LE(rep.worst_inequality, 1e-8);
    EXPECT_LE(minty_violation(ep.vi, r.u), 1e-8);
}

TEST(DiscreteVI, Validation) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_THROW(DiscreteVI::from_dense(A, Vector::Zero(3), {2, 1}, {0, 0}), ConfigError);
    EXPECT_THROW(DiscreteVI::from_dense(A, Vector::Zero(3), {3}, {0}), ConfigError);
    EXPECT_THROW(DiscreteVI::from_dense(A, Vector::Zero(3), {0}, {0, 1}), ConfigError);
}
