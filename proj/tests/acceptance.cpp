// Runs the seven acceptance criteria and prints one PASS/FAIL line each.
#include "thickjunction/analysis.hpp"
#include "thickjunction/limit_problem.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace tj;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

const ProblemData reference = ProblemData::parse("1", "x2*(x2+1)", "0.25*(x2+1)");

JunctionConfig reference_config() {
    JunctionConfig c;
    c.a = 1;
    c.l = 1;
    c.h = 0.5;
    c.nx_rod = 4;
    c.ny_rod = 32;
    c.ny_body = 32;
    return c;
}

const std::vector<int> reference_n{4, 8, 16, 32};

ConvergenceReport reference_run() {
    ConvergenceOptions opt;
    opt.limit_refine = 4;
    return run_convergence(reference_config(), reference_n, reference, opt);
}

Outcome identity_criterion() {
    Outcome o;
    for (int N : {2, 8}) {
        JunctionConfig c;
        c.N = N;
        const Mesh m = build_junction_mesh(c);
        for (const char* v : {"1", "x1", "x1*x2", "x1^2"}) {
            const double d = identity_check(m, Expression::parse(v)).discrepancy;
            o.require(d <= 1e-10, std::string("v=") + v + " N=" + std::to_string(N) + " discrepancy " + num(d));
        }
    }
    std::vector<double> d;
    for (int k : {8, 16, 32, 64}) {
        JunctionConfig c;
        c.N = 2;
        c.ny_rod = k;
        c.nx_rod = k / 4;
        d.push_back(identity_check(build_junction_mesh(c), Expression::parse("sin(pi*x1)*(x2+1)")).discrepancy);
    }
    double worst = 1e300;
    for (std::size_t k = 1; k < d.size(); ++k) worst = std::min(worst, std::log2(d[k - 1] / d[k]));
    o.require(worst >= 2.0, "observed order " + num(worst));
    if (o.pass) o.detail = "smooth-case order " + num(worst) + ", final discrepancy " + num(d.back());
    return o;
}

Outcome solver_criterion() {
    Outcome o;
    std::mt19937_64 rng(424242);
    std::uniform_int_distribution<int> dim(2, 60);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst_diff = 0.0, worst_kkt = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = dim(rng);
        const int k = std::uniform_int_distribution<int>(0, std::min(15, n))(rng);
        Eigen::MatrixXd B(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) B(i, j) = U(rng);
        const Eigen::MatrixXd A = B.transpose() * B / n + 0.5 * Eigen::MatrixXd::Identity(n, n);
        Vector b(n);
        for (int i = 0; i < n; ++i) b[i] = U(rng);
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        std::vector<double> c;
        for (int j = 0; j < k; ++j) c.push_back(0.2 * U(rng));
        const DiscreteVI vi = DiscreteVI::from_dense(A, b, idx, c);

        SolverOptions po;
        po.tol = 1e-14;
        po.max_iter = 200000;
        const auto ps = solve_psor(vi, po);
        const auto pd = solve_pdas(vi);
        const auto bf = solve_bruteforce(vi);
        if (!ps.converged || !pd.converged || !bf.converged) {
            o.require(false, "instance " + std::to_string(t) + " did not converge");
            continue;
        }
        worst_diff = std::max({worst_diff, (ps.u - bf.u).cwiseAbs().maxCoeff(), (pd.u - bf.u).cwiseAbs().maxCoeff()});
        worst_kkt = std::max({worst_kkt, ps.kkt.max(), pd.kkt.max(), bf.kkt.max()});
    }
    o.require(worst_diff <= 1e-8, "max |du| " + num(worst_diff));
    o.require(worst_kkt <= 1e-8, "max KKT residual " + num(worst_kkt));
    if (o.pass) o.detail = "max |du| " + num(worst_diff) + ", max KKT " + num(worst_kkt);
    return o;
}

Outcome equivalence_criterion(const ConvergenceReport& rep) {
    Outcome o;
    int checked = 0;
    double worst_eq = 0.0, worst_ineq = 0.0;
    auto record = [&](const EquivalenceReport& e, const std::string& label) {
        ++checked;
        worst_eq = std::max(worst_eq, e.equality_rel);
        worst_ineq = std::max(worst_ineq, e.worst_inequality);
        o.require(e.equality_rel <= 1e-8 && e.worst_inequality <= 1e-8 && e.trials >= 50, label);
    };
    for (const auto& r : rep.rows)
        if (!r.failed) record(r.equivalence, "reference N=" + std::to_string(r.N));

    struct Case {
        std::string name;
        JunctionConfig cfg;
        ProblemData data;
        SolverMethod method;
    };
    std::vector<Case> corpus;
    JunctionConfig base;
    base.N = 4;
    corpus.push_back({"zero obstacle", base, ProblemData::parse("1", "0", "0"), SolverMethod::Pdas});
    corpus.push_back({"zero data", base, ProblemData::parse("0", "0", "0"), SolverMethod::Pdas});
    corpus.push_back({"reference psor", base, reference, SolverMethod::Psor});
    JunctionConfig curved = base;
    curved.gamma = Expression::parse("1 + 0.1*sin(2*pi*x1)");
    curved.N = 6;
    corpus.push_back({"curved body", curved, reference, SolverMethod::Pdas});
    corpus.push_back({"x1-dependent data", base,
                      ProblemData::parse("1 + x1", "x2*(x2+1) + 0.05*x1", "0.5*(x2+1)*x1"), SolverMethod::Pdas});
    for (const auto& c : corpus) {
        const EpsProblem ep = assemble_eps(c.cfg, c.data);
        SolverOptions opt;
        if (c.method == SolverMethod::Psor) opt.tol = 1e-13;
        const SolveResult sr = solve(ep.vi, c.method, opt);
        if (!sr.converged) {
            o.require(false, c.name + " did not converge");
            continue;
        }
        record(check_definitions_equivalence(ep.vi, sr, 50), c.name);
    }
    if (o.pass)
        o.detail = std::to_string(checked) + " solves, equality " + num(worst_eq) + ", inequality " + num(worst_ineq);
    return o;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Outcome limit_criterion() {
    Outcome o;
    JunctionConfig c;
    c.N = 4;
    c.nx_rod = 2;
    c.ny_rod = 64;
    c.ny_body = 64;
    const Mesh mesh = build_limit_mesh(c);

    const ProblemData free_data = ProblemData::parse("1", "0", "0", GMode::Unconstrained);
    const auto lu = assemble_limit(mesh, free_data);
    const auto su = solve_limit(lu);
    const double eu = energy_limit(su, lu);
    o.require(su.result.converged, "unconstrained solve did not converge");
    o.require(rel(eu, 3.5) <= 1e-3, "unconstrained E_0 " + num(eu));
    for (double v : su.interface_values) o.require(rel(v, 2.5) <= 1e-3, "interface value " + num(v));

    const ProblemData zero_obstacle = ProblemData::parse("1", "0", "0");
    const auto lz = assemble_limit(mesh, zero_obstacle);
    const auto sz = solve_limit(lz);
    const double ez = energy_limit(sz, lz);
    o.require(sz.result.converged, "obstacle solve did not converge");
    o.require(rel(ez, 1.0 / 3.0) <= 1e-3, "obstacle E_0 " + num(ez));
    const double umax = sz.u_minus.size() ? sz.u_minus.cwiseAbs().maxCoeff() : 0.0;
    o.require(umax <= 1e-3, "max |u-| " + num(umax));

    const auto ou = oracle_1d(1.0, 1.0, 0.5, free_data, 4096);
    const auto oz = oracle_1d(1.0, 1.0, 0.5, zero_obstacle, 4096);
    o.require(ou.converged && oz.converged, "1D oracle did not converge");
    o.require(rel(ou.energy, 3.5) <= 1e-3 && rel(ou.at(0.0), 2.5) <= 1e-3, "1D unconstrained oracle off");
    o.require(rel(oz.energy, 1.0 / 3.0) <= 1e-3, "1D obstacle oracle energy " + num(oz.energy));
    double dev = 0.0;
    for (int n = 0; n < mesh.node_count(); ++n) dev = std::max(dev, std::abs(sz.u[n] - oz.at(mesh.nodes[n][1])));
    o.require(dev <= 1e-3, "2D vs 1D obstacle deviation " + num(dev));
    if (o.pass)
        o.detail = "E_0 " + num(eu) + " / " + num(ez) + ", max|u-| " + num(umax) + ", oracle deviation " + num(dev);
    return o;
}

// Final value at most half the initial one. Values already at roundoff level
// (below 1e-12 throughout) carry no trend and count as settled.
bool halves(const std::vector<double>& v) {
    if (v.front() <= 1e-12 && v.back() <= 1e-12) return true;
    return v.back() <= 0.5 * v.front();
}

Outcome convergence_criterion(const ConvergenceReport& rep) {
    Outcome o;
    for (const auto& r : rep.rows) o.require(!r.failed, "row N=" + std::to_string(r.N) + ": " + r.failure);
    if (!o.pass) return o;
    auto column = [&](const std::function<double(const ConvergenceRow&)>& get) {
        std::vector<double> v;
        for (const auto& r : rep.rows) v.push_back(get(r));
        return v;
    };
    const auto gap = column([](const ConvergenceRow& r) { return r.energy_gap; });
    for (std::size_t k = 1; k < gap.size(); ++k)
        o.require(gap[k] < gap[k - 1], "energy gap not decreasing at N=" + std::to_string(rep.rows[k].N));
    o.require(gap.back() <= 0.5 * gap.front(), "energy gap " + num(gap.front()) + " -> " + num(gap.back()));
    o.require(halves(column([](const ConvergenceRow& r) { return r.body_l2_gap; })), "body_l2_gap");
    o.require(halves(column([](const ConvergenceRow& r) { return r.trace_gap; })), "trace_gap");
    for (std::size_t t = 0; t < rep.test_functions.size(); ++t) {
        const auto& name = rep.test_functions[t].name;
        o.require(halves(column([t](const ConvergenceRow& r) { return r.weak_gaps[t]; })), "weak_gap_" + name);
        o.require(halves(column([t](const ConvergenceRow& r) { return r.deriv_gaps[t]; })), "deriv_gap_" + name);
    }
    if (o.pass) o.detail = "energy gap " + num(gap.front()) + " -> " + num(gap.back());
    return o;
}

Outcome friedrich_criterion() {
    Outcome o;
    double lo = 1e300, hi = 0.0;
    for (int N : reference_n) {
        JunctionConfig c = reference_config();
        c.N = N;
        const auto f = friedrich_constant(build_junction_mesh(c), {BoundaryTag::Gamma_eps});
        o.require(f.converged, "N=" + std::to_string(N) + " did not converge");
        lo = std::min(lo, f.constant);
        hi = std::max(hi, f.constant);
    }
    o.require(hi / lo < 1.5, "ratio " + num(hi / lo));
    const auto r = friedrich_constant(build_rectangle_mesh(0, 1, -1, 0, 64, 64), {BoundaryTag::RectBottom});
    const double exact = std::pow(std::numbers::pi / 2, 2);
    o.require(rel(r.lambda_min, exact) <= 1e-3, "rectangle eigenvalue " + num(r.lambda_min));
    if (o.pass) o.detail = "ratio " + num(hi / lo) + ", rectangle eigenvalue " + num(r.lambda_min);
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism_criterion(const ConvergenceReport& first) {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / "tj_acceptance";
    fs::create_directories(dir);
    write_report_csv(first, dir / "report_a.csv");
    write_report_csv(reference_run(), dir / "report_b.csv");
    const std::string a = slurp(dir / "report_a.csv");
    o.require(!a.empty() && a == slurp(dir / "report_b.csv"), "report.csv differs between runs");
    if (o.pass) o.detail = std::to_string(a.size()) + " identical bytes";
    fs::remove_all(dir);
    return o;
}

template <class F>
bool report(int id, F&& criterion) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = criterion();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1f s) %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    return o.pass;
}

}  // namespace

int main() {
    bool ok = true;
    ok &= report(1, identity_criterion);
    ok &= report(2, solver_criterion);
    ConvergenceReport rep;
    bool have_rep = true;
    try {
        rep = reference_run();
    } catch (const std::exception& e) {
        have_rep = false;
        std::printf("reference run failed: %s\n", e.what());
    }
    ok &= report(3, [&] { return have_rep ? equivalence_criterion(rep) : Outcome{false, "no reference run"}; });
    ok &= report(4, limit_criterion);
    ok &= report(5, [&] { return have_rep ? convergence_criterion(rep) : Outcome{false, "no reference run"}; });
    ok &= report(6, friedrich_criterion);
    ok &= report(7, [&] { return have_rep ? determinism_criterion(rep) : Outcome{false, "no reference run"}; });
    return ok ? 0 : 1;
}
