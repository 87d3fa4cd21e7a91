#pragma once

#include "thickjunction/expression.hpp"
#include "thickjunction/geometry.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace tj {

enum class GMode {
    Standard,       // u <= g is imposed; g must vanish on x2 = 0 and x2 = -l
    Unconstrained,  // obstacle switched off (validation runs outside the admissible data class)
};

/// Source f on Ω₁, obstacle g and boundary flux d on D₀.
struct ProblemData {
    Expression f = Expression::constant(0.0);
    Expression g = Expression::constant(0.0);
    Expression d = Expression::constant(0.0);
    GMode g_mode = GMode::Standard;

    static ProblemData parse(std::string_view f, std::string_view g, std::string_view d,
                             GMode mode = GMode::Standard) {
        return {Expression::parse(f), Expression::parse(g), Expression::parse(d), mode};
    }

    bool x1_independent() const { return !f.depends_on_x1() && !g.depends_on_x1() && !d.depends_on_x1(); }
};

struct Violation {
    std::string condition;
    double x1;
    double x2;
    double value;
};

/// Checks the data against the junction described by `cfg`. An empty result
/// means the data are admissible.
inline std::vector<Violation> validate(const ProblemData& data, const JunctionConfig& cfg) {
    std::vector<Violation> out;
    constexpr double trace_tol = 1e-12;
    constexpr int samples = 1000;

    if (data.g_mode == GMode::Standard) {
        for (const double x2 : {0.0, -cfg.l}) {
            for (int k = 0; k < samples; ++k) {
                const double x1 = cfg.a * (k + 0.5) / samples;
                const double v = data.g(x1, x2);
                if (!(std::abs(v) <= trace_tol)) {
                    out.push_back({x2 == 0.0 ? "g trace on x2=0 must vanish" : "g trace on x2=-l must vanish", x1, x2,
                                   v});
                    break;
                }
            }
        }
    }

    // Finiteness at the volume quadrature points of both discretisations.
    auto check_mesh = [&](const Mesh& mesh) {
        const auto g2 = quad::gauss(2);
        for (int e = 0; e < mesh.element_count(); ++e) {
            const auto v = mesh.vertices(e);
            for (const auto& p : g2)
                for (const auto& q : g2) {
                    const auto x = quad::map_point(v, p.x, q.x).x;
                    const double vals[3] = {data.f(x[0], x[1]), data.g(x[0], x[1]), data.d(x[0], x[1])};
                    const char* names[3] = {"f", "g", "d"};
                    for (int k = 0; k < 3; ++k)
                        if (!std::isfinite(vals[k])) {
                            out.push_back({std::string(names[k]) + " must be finite", x[0], x[1], vals[k]});
                            return;
                        }
                }
        }
    };
    check_mesh(build_junction_mesh(cfg));
    check_mesh(build_limit_mesh(cfg));
    return out;
}

}  // namespace tj
