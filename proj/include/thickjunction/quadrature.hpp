#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>

namespace tj::quad {

struct GaussPoint {
    double x;  // on [-1, 1]
    double w;
};

/// Gauss–Legendre rule with 1..3 points on [-1, 1].
inline std::span<const GaussPoint> gauss(int points) {
    static const std::array<GaussPoint, 1> g1{{{0.0, 2.0}}};
    static const double r3 = 1.0 / std::sqrt(3.0);
    static const std::array<GaussPoint, 2> g2{{{-r3, 1.0}, {r3, 1.0}}};
    static const double r35 = std::sqrt(0.6);
    static const std::array<GaussPoint, 3> g3{{{-r35, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {r35, 5.0 / 9.0}}};
    switch (points) {
        case 1: return g1;
        case 2: return g2;
        case 3: return g3;
        default: throw std::invalid_argument("gauss: supported point counts are 1, 2, 3");
    }
}

/// Bilinear shape functions on the reference square [-1,1]^2, counterclockwise
/// from (-1,-1).
struct Q1 {
    static constexpr std::array<double, 4> xi_n{-1.0, 1.0, 1.0, -1.0};
    static constexpr std::array<double, 4> eta_n{-1.0, -1.0, 1.0, 1.0};

    static std::array<double, 4> value(double xi, double eta) {
        std::array<double, 4> n{};
        for (int a = 0; a < 4; ++a) n[a] = 0.25 * (1.0 + xi_n[a] * xi) * (1.0 + eta_n[a] * eta);
        return n;
    }

    /// Reference derivatives: [a][0] = dN/dxi, [a][1] = dN/deta.
    static std::array<std::array<double, 2>, 4> deriv(double xi, double eta) {
        std::array<std::array<double, 2>, 4> d{};
        for (int a = 0; a < 4; ++a) {
            d[a][0] = 0.25 * xi_n[a] * (1.0 + eta_n[a] * eta);
            d[a][1] = 0.25 * eta_n[a] * (1.0 + xi_n[a] * xi);
        }
        return d;
    }
};

using Point = std::array<double, 2>;
using Quad = std::array<Point, 4>;

/// Geometry of the isoparametric map at one reference point.
struct MappedPoint {
    Point x;                                    // physical coordinates
    double det_j;                               // Jacobian determinant
    std::array<double, 4> n;                    // shape values
    std::array<std::array<double, 2>, 4> grad;  // physical shape gradients
};

inline MappedPoint map_point(const Quad& v, double xi, double eta) {
    MappedPoint m{};
    m.n = Q1::value(xi, eta);
    const auto d = Q1::deriv(xi, eta);
    double j00 = 0, j01 = 0, j10 = 0, j11 = 0;  // j_rc = d x_r / d ref_c
    for (int a = 0; a < 4; ++a) {
        m.x[0] += m.n[a] * v[a][0];
        m.x[1] += m.n[a] * v[a][1];
        j00 += v[a][0] * d[a][0];
        j01 += v[a][0] * d[a][1];
        j10 += v[a][1] * d[a][0];
        j11 += v[a][1] * d[a][1];
    }
    m.det_j = j00 * j11 - j01 * j10;
    const double inv = 1.0 / m.det_j;
    for (int a = 0; a < 4; ++a) {
        m.grad[a][0] = inv * (j11 * d[a][0] - j10 * d[a][1]);
        m.grad[a][1] = inv * (-j01 * d[a][0] + j00 * d[a][1]);
    }
    return m;
}

}  // namespace tj::quad
