#pragma once

/*
 * Structured quadrilateral meshes of the thick junction
 *
 *     Ω_ε = Ω₀ ∪ G_ε,   Ω₀ = {0 < x1 < a, 0 < x2 < γ(x1)},
 *     G_ε = ⋃_j {|x1/ε − (j + 1/2)| < h/2, −l < x2 < 0},  ε = a/N,
 *
 * and of the limit domain Ω₁ = Ω₀ ∪ D₀ with D₀ = (0,a)×(−l,0).
 *
 * Nodes live on vertical "lines" (one per x1 grid value) and are numbered
 * line by line with increasing x2, which is the lexicographic (x1, x2) order.
 * Body nodes sit at x2 = s·γ(x1) on a uniform s grid; nodes below the joint
 * zone sit on a uniform x2 grid over [−l, 0].
 */

#include "thickjunction/error.hpp"
#include "thickjunction/expression.hpp"
#include "thickjunction/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tj {

enum class BoundaryTag {
    S_eps,             // vertical rod sides (Signorini)
    Gamma_eps,         // rod bases x2 = −l (Dirichlet)
    I_0,               // joint zone x2 = 0 (interior interface edges)
    I_l,               // bottom of D₀ in the limit mesh (Dirichlet)
    NeumannBody,       // ∂Ω₀ away from the joint zone
    NeumannRodTopGap,  // exposed segments of {x2 = 0} between rods
    NoFlux,            // lateral sides of D₀ in the limit mesh (audit only)
    RectBottom,
    RectRight,
    RectTop,
    RectLeft,
};

inline std::string_view to_string(BoundaryTag t) {
    switch (t) {
        case BoundaryTag::S_eps: return "S_eps";
        case BoundaryTag::Gamma_eps: return "Gamma_eps";
        case BoundaryTag::I_0: return "I_0";
        case BoundaryTag::I_l: return "I_l";
        case BoundaryTag::NeumannBody: return "NeumannBody";
        case BoundaryTag::NeumannRodTopGap: return "NeumannRodTopGap";
        case BoundaryTag::NoFlux: return "NoFlux";
        case BoundaryTag::RectBottom: return "RectBottom";
        case BoundaryTag::RectRight: return "RectRight";
        case BoundaryTag::RectTop: return "RectTop";
        case BoundaryTag::RectLeft: return "RectLeft";
    }
    return "?";
}

enum class Region { Body, Rod, D0 };

inline std::string_view to_string(Region r) {
    switch (r) {
        case Region::Body: return "Body";
        case Region::Rod: return "Rod";
        case Region::D0: return "D0";
    }
    return "?";
}

enum class MeshKind { Junction, Limit, Rectangle };

struct JunctionConfig {
    double a = 1.0;
    double l = 1.0;
    double h = 0.5;
    int N = 2;
    Expression gamma = Expression::constant(1.0);  // function of x1 only
    int nx_rod = 4;
    int ny_rod = 8;
    int ny_body = 8;

    double eps() const { return a / static_cast<double>(N); }

    /// Left and right abscissa of rod j.
    std::pair<double, double> rod_span(int j) const {
        const double e = eps();
        return {(j + 0.5 * (1.0 - h)) * e, (j + 0.5 * (1.0 + h)) * e};
    }

    double rod_center(int j) const { return (j + 0.5) * eps(); }

    void validate() const {
        TJ_THROW_IF(!(a > 0.0) || !std::isfinite(a), ConfigError, "geometry: a must be positive");
        TJ_THROW_IF(!(l > 0.0) || !std::isfinite(l), ConfigError, "geometry: l must be positive");
        TJ_THROW_IF(!(h > 0.0 && h < 1.0), ConfigError, "geometry: h must lie in (0, 1)");
        TJ_THROW_IF(N < 1, ConfigError, "geometry: N must be a positive integer");
        TJ_THROW_IF(!(eps() * h < a), ConfigError, "geometry: eps*h must be smaller than a");
        TJ_THROW_IF(nx_rod < 2, ConfigError, "geometry: nx_rod must be >= 2");
        TJ_THROW_IF(ny_rod < 4, ConfigError, "geometry: ny_rod must be >= 4");
        TJ_THROW_IF(ny_body < 4, ConfigError, "geometry: ny_body must be >= 4");
        TJ_THROW_IF(gamma.depends_on_x2(), ConfigError, "geometry: gamma may depend on x1 only");
        constexpr int samples = 1000;
        for (int k = 0; k <= samples; ++k) {
            const double x1 = a * k / samples;
            const double g = gamma(x1, 0.0);
            TJ_THROW_IF(!(g > 0.0) || !std::isfinite(g), ConfigError,
                        "geometry: gamma must be positive, gamma(" + std::to_string(x1) + ") = " + std::to_string(g));
        }
    }
};

struct TaggedEdge {
    int element;
    int local_edge;  // 0 bottom, 1 right, 2 top, 3 left (edge k joins local nodes k and k+1)
    BoundaryTag tag;
};

/// Location of a point inside the structured grid.
struct GridLocation {
    int element;
    double xi;
    double eta;
};

/// Index bookkeeping shared by all structured meshes.
struct StructuredLayout {
    std::vector<double> x1;               // node lines
    std::vector<double> height;           // γ at each line
    std::vector<double> s;                // body levels on [0, 1]
    std::vector<double> lower_x2;         // levels on [−l, 0]; empty without a lower part
    std::vector<char> line_has_lower;     // per line
    std::vector<char> cell_has_lower;     // per cell (between lines c and c+1)
    std::vector<int> line_offset;         // first node id of each line
    std::vector<int> cell_offset;         // first element id of each cell
    double base = 0.0;                    // x2 of the body bottom

    int n_lines() const { return static_cast<int>(x1.size()); }
    int n_cells() const { return n_lines() - 1; }
    int n_lower() const { return lower_x2.empty() ? 0 : static_cast<int>(lower_x2.size()) - 1; }
    int n_body() const { return static_cast<int>(s.size()) - 1; }
    int n_rows() const { return n_lower() + n_body(); }  // element rows of a full cell

    int first_node_row(int line) const { return line_has_lower[line] ? 0 : n_lower(); }
    int first_elem_row(int cell) const { return cell_has_lower[cell] ? 0 : n_lower(); }

    /// Node id at (line, row), rows counted from the bottom of the full column; -1 if absent.
    int node(int line, int row) const {
        const int r0 = first_node_row(line);
        if (row < r0 || row > n_rows()) return -1;
        return line_offset[line] + row - r0;
    }

    int element(int cell, int row) const {
        const int r0 = first_elem_row(cell);
        if (row < r0 || row >= n_rows()) return -1;
        return cell_offset[cell] + row - r0;
    }

    double node_x2(int line, int row) const {
        if (row <= n_lower() && !lower_x2.empty()) return lower_x2[row];
        return base + s[row - n_lower()] * height[line];
    }

    /// Inverse of the isoparametric map; nullopt outside the meshed domain.
    std::optional<GridLocation> locate(double px1, double px2) const {
        constexpr double slack = 1e-12;
        if (px1 < x1.front() - slack || px1 > x1.back() + slack) return std::nullopt;
        auto it = std::upper_bound(x1.begin(), x1.end(), px1);
        int c = static_cast<int>(it - x1.begin()) - 1;
        c = std::clamp(c, 0, n_cells() - 1);
        const double t = std::clamp((px1 - x1[c]) / (x1[c + 1] - x1[c]), 0.0, 1.0);
        const double xi = 2.0 * t - 1.0;
        if (px2 >= base || lower_x2.empty()) {
            const double top = (1.0 - t) * height[c] + t * height[c + 1];
            const double sv = (px2 - base) / top;
            if (sv < -slack || sv > 1.0 + slack) return std::nullopt;
            int j = static_cast<int>(std::upper_bound(s.begin(), s.end(), sv) - s.begin()) - 1;
            j = std::clamp(j, 0, n_body() - 1);
            const double eta = 2.0 * std::clamp((sv - s[j]) / (s[j + 1] - s[j]), 0.0, 1.0) - 1.0;
            return GridLocation{element(c, n_lower() + j), xi, eta};
        }
        if (!cell_has_lower[c] || px2 < lower_x2.front() - slack) return std::nullopt;
        int r = static_cast<int>(std::upper_bound(lower_x2.begin(), lower_x2.end(), px2) - lower_x2.begin()) - 1;
        r = std::clamp(r, 0, n_lower() - 1);
        const double eta =
            2.0 * std::clamp((px2 - lower_x2[r]) / (lower_x2[r + 1] - lower_x2[r]), 0.0, 1.0) - 1.0;
        return GridLocation{element(c, r), xi, eta};
    }
};

struct Mesh {
    MeshKind kind = MeshKind::Junction;
    JunctionConfig config;  // generating parameters (junction and limit meshes)
    std::vector<quad::Point> nodes;
    std::vector<std::array<int, 4>> elements;
    std::vector<Region> regions;
    std::vector<TaggedEdge> boundary_edges;
    std::vector<TaggedEdge> interface_edges;
    std::map<BoundaryTag, std::vector<int>> node_sets;
    StructuredLayout layout;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }

    quad::Quad vertices(int e) const {
        const auto& el = elements[e];
        return {nodes[el[0]], nodes[el[1]], nodes[el[2]], nodes[el[3]]};
    }

    std::pair<int, int> edge_nodes(const TaggedEdge& te) const {
        const auto& el = elements[te.element];
        return {el[te.local_edge], el[(te.local_edge + 1) % 4]};
    }

    double edge_length(const TaggedEdge& te) const {
        const auto [p, q] = edge_nodes(te);
        return std::hypot(nodes[q][0] - nodes[p][0], nodes[q][1] - nodes[p][1]);
    }

    bool has_tag(BoundaryTag t) const { return node_sets.count(t) > 0; }

    const std::vector<int>& node_set(BoundaryTag t) const {
        auto it = node_sets.find(t);
        TJ_THROW_IF(it == node_sets.end(), ConfigError, "mesh has no tag " + std::string(to_string(t)));
        return it->second;
    }

    /// Edges carrying `t`, boundary and interface alike.
    std::vector<TaggedEdge> edges_with(BoundaryTag t) const {
        std::vector<TaggedEdge> out;
        for (const auto& e : boundary_edges)
            if (e.tag == t) out.push_back(e);
        for (const auto& e : interface_edges)
            if (e.tag == t) out.push_back(e);
        return out;
    }
};

/// Sum of Euclidean edge lengths carrying `tag`.
inline double boundary_measure(const Mesh& mesh, BoundaryTag tag) {
    TJ_THROW_IF(!mesh.has_tag(tag), ConfigError, "boundary_measure: unknown tag " + std::string(to_string(tag)));
    double sum = 0.0;
    for (const auto& e : mesh.edges_with(tag)) sum += mesh.edge_length(e);
    return sum;
}

namespace detail {

inline void subdivide(std::vector<double>& grid, std::vector<char>& cell_flag, double from, double to, int n,
                      bool lower) {
    for (int k = 1; k <= n; ++k) {
        grid.push_back(k == n ? to : from + (to - from) * k / n);
        cell_flag.push_back(lower ? 1 : 0);
    }
}

inline std::vector<double> uniform(double from, double to, int n) {
    std::vector<double> g(n + 1);
    for (int k = 0; k <= n; ++k) g[k] = from + (to - from) * k / n;
    g.front() = from;
    g.back() = to;
    return g;
}

/// Fills nodes, elements and regions from a layout whose grids and flags are set.
inline void populate(Mesh& m, Region lower_region) {
    auto& L = m.layout;
    const int nl = L.n_lines();
    L.line_has_lower.assign(nl, 0);
    for (int c = 0; c < L.n_cells(); ++c)
        if (L.cell_has_lower[c]) L.line_has_lower[c] = L.line_has_lower[c + 1] = 1;
    L.height.resize(nl);
    for (int i = 0; i < nl; ++i) L.height[i] = m.kind == MeshKind::Rectangle ? L.height[i] : m.config.gamma(L.x1[i], 0.0);

    L.line_offset.resize(nl);
    int next = 0;
    for (int i = 0; i < nl; ++i) {
        L.line_offset[i] = next;
        for (int r = L.first_node_row(i); r <= L.n_rows(); ++r) m.nodes.push_back({L.x1[i], L.node_x2(i, r)});
        next = static_cast<int>(m.nodes.size());
    }

    L.cell_offset.resize(L.n_cells());
    for (int c = 0; c < L.n_cells(); ++c) {
        L.cell_offset[c] = m.element_count();
        for (int r = L.first_elem_row(c); r < L.n_rows(); ++r) {
            m.elements.push_back({L.node(c, r), L.node(c + 1, r), L.node(c + 1, r + 1), L.node(c, r + 1)});
            m.regions.push_back(r < L.n_lower() ? lower_region : Region::Body);
        }
    }
}

inline void check_jacobians(const Mesh& m) {
    const auto g = quad::gauss(2);
    for (int e = 0; e < m.element_count(); ++e) {
        const auto v = m.vertices(e);
        for (const auto& p : g)
            for (const auto& q : g)
                TJ_THROW_IF(!(quad::map_point(v, p.x, q.x).det_j > 0.0), ConfigError,
                            "mesh: nonpositive Jacobian in element " + std::to_string(e));
    }
}

/// Tags body sides and top; bottom/lower edges are tagged by the caller.
inline void tag_body_outer(Mesh& m, BoundaryTag left, BoundaryTag right, BoundaryTag top) {
    const auto& L = m.layout;
    for (int j = 0; j < L.n_body(); ++j) {
        m.boundary_edges.push_back({L.element(0, L.n_lower() + j), 3, left});
        m.boundary_edges.push_back({L.element(L.n_cells() - 1, L.n_lower() + j), 1, right});
    }
    for (int c = 0; c < L.n_cells(); ++c) m.boundary_edges.push_back({L.element(c, L.n_rows() - 1), 2, top});
}

inline void build_node_sets(Mesh& m) {
    m.node_sets.clear();
    auto add = [&](const TaggedEdge& te) {
        auto& set = m.node_sets[te.tag];
        const auto [p, q] = m.edge_nodes(te);
        set.push_back(p);
        set.push_back(q);
    };
    for (const auto& e : m.boundary_edges) add(e);
    for (const auto& e : m.interface_edges) add(e);
    for (auto& [tag, set] : m.node_sets) {
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
    }
    // Dirichlet wins at the rod base corners.
    if (m.node_sets.count(BoundaryTag::S_eps) && m.node_sets.count(BoundaryTag::Gamma_eps)) {
        auto& s = m.node_sets[BoundaryTag::S_eps];
        const auto& d = m.node_sets[BoundaryTag::Gamma_eps];
        std::erase_if(s, [&](int n) { return std::binary_search(d.begin(), d.end(), n); });
    }
}

}  // namespace detail

/// Conforming mesh of Ω_ε.
inline Mesh build_junction_mesh(const JunctionConfig& cfg) {
    cfg.validate();
    Mesh m;
    m.kind = MeshKind::Junction;
    m.config = cfg;
    auto& L = m.layout;

    // x1 grid: every rod edge is a grid line; gaps get a whole multiple of
    // nx_rod columns so that refinement nests.
    const double rod_w = cfg.h * cfg.eps();
    L.x1.push_back(0.0);
    double cursor = 0.0;
    for (int j = 0; j < cfg.N; ++j) {
        const auto [left, right] = cfg.rod_span(j);
        const long ratio = std::max(1L, std::lround((left - cursor) / rod_w));
        detail::subdivide(L.x1, L.cell_has_lower, cursor, left, static_cast<int>(ratio) * cfg.nx_rod, false);
        detail::subdivide(L.x1, L.cell_has_lower, left, right, cfg.nx_rod, true);
        cursor = right;
    }
    {
        const long ratio = std::max(1L, std::lround((cfg.a - cursor) / rod_w));
        detail::subdivide(L.x1, L.cell_has_lower, cursor, cfg.a, static_cast<int>(ratio) * cfg.nx_rod, false);
    }
    for (std::size_t i = 1; i < L.x1.size(); ++i)
        TJ_THROW_IF(!(L.x1[i] > L.x1[i - 1]), ConfigError, "geometry: body x1 grid cannot conform to rod edges");

    L.s = detail::uniform(0.0, 1.0, cfg.ny_body);
    L.lower_x2 = detail::uniform(-cfg.l, 0.0, cfg.ny_rod);
    L.base = 0.0;
    detail::populate(m, Region::Rod);

    const int nlow = L.n_lower();
    for (int c = 0; c < L.n_cells(); ++c) {
        const int e_body = L.element(c, nlow);
        if (L.cell_has_lower[c]) {
            m.interface_edges.push_back({e_body, 0, BoundaryTag::I_0});
            m.boundary_edges.push_back({L.element(c, 0), 0, BoundaryTag::Gamma_eps});
            const bool left_side = c == 0 || !L.cell_has_lower[c - 1];
            const bool right_side = c + 1 == L.n_cells() || !L.cell_has_lower[c + 1];
            for (int r = 0; r < nlow; ++r) {
                if (left_side) m.boundary_edges.push_back({L.element(c, r), 3, BoundaryTag::S_eps});
                if (right_side) m.boundary_edges.push_back({L.element(c, r), 1, BoundaryTag::S_eps});
            }
        } else {
            m.boundary_edges.push_back({e_body, 0, BoundaryTag::NeumannRodTopGap});
        }
    }
    detail::tag_body_outer(m, BoundaryTag::NeumannBody, BoundaryTag::NeumannBody, BoundaryTag::NeumannBody);
    detail::build_node_sets(m);
    detail::check_jacobians(m);
    return m;
}

/// Conforming mesh of Ω₁ = Ω₀ ∪ D₀ on a uniform x1 grid of nx_rod·N columns.
inline Mesh build_limit_mesh(const JunctionConfig& cfg) {
    cfg.validate();
    Mesh m;
    m.kind = MeshKind::Limit;
    m.config = cfg;
    auto& L = m.layout;
    L.x1 = detail::uniform(0.0, cfg.a, cfg.nx_rod * cfg.N);
    L.cell_has_lower.assign(L.x1.size() - 1, 1);
    L.s = detail::uniform(0.0, 1.0, cfg.ny_body);
    L.lower_x2 = detail::uniform(-cfg.l, 0.0, cfg.ny_rod);
    L.base = 0.0;
    detail::populate(m, Region::D0);

    const int nlow = L.n_lower();
    for (int c = 0; c < L.n_cells(); ++c) {
        m.boundary_edges.push_back({L.element(c, 0), 0, BoundaryTag::I_l});
        m.interface_edges.push_back({L.element(c, nlow), 0, BoundaryTag::I_0});
    }
    for (int r = 0; r < nlow; ++r) {
        m.boundary_edges.push_back({L.element(0, r), 3, BoundaryTag::NoFlux});
        m.boundary_edges.push_back({L.element(L.n_cells() - 1, r), 1, BoundaryTag::NoFlux});
    }
    detail::tag_body_outer(m, BoundaryTag::NeumannBody, BoundaryTag::NeumannBody, BoundaryTag::NeumannBody);
    detail::build_node_sets(m);
    detail::check_jacobians(m);
    return m;
}

/// Uniform nx × ny mesh of [x_min, x_max] × [y_min, y_max] with Rect* side tags.
inline Mesh build_rectangle_mesh(double x_min, double x_max, double y_min, double y_max, int nx, int ny,
                                 Region region = Region::Body) {
    TJ_THROW_IF(!(x_max > x_min) || !(y_max > y_min) || nx < 1 || ny < 1, ConfigError, "rectangle: invalid extent");
    Mesh m;
    m.kind = MeshKind::Rectangle;
    auto& L = m.layout;
    L.x1 = detail::uniform(x_min, x_max, nx);
    L.cell_has_lower.assign(nx, 0);
    L.s = detail::uniform(0.0, 1.0, ny);
    L.base = y_min;
    L.height.assign(nx + 1, y_max - y_min);
    detail::populate(m, Region::Body);
    std::fill(m.regions.begin(), m.regions.end(), region);
    for (int c = 0; c < nx; ++c) m.boundary_edges.push_back({L.element(c, 0), 0, BoundaryTag::RectBottom});
    detail::tag_body_outer(m, BoundaryTag::RectLeft, BoundaryTag::RectRight, BoundaryTag::RectTop);
    detail::build_node_sets(m);
    detail::check_jacobians(m);
    return m;
}

/// Bilinear interpolation of nodal values at a physical point.
inline std::optional<double> interpolate(const Mesh& mesh, std::span<const double> nodal, double x1, double x2) {
    const auto loc = mesh.layout.locate(x1, x2);
    if (!loc) return std::nullopt;
    const auto n = quad::Q1::value(loc->xi, loc->eta);
    const auto& el = mesh.elements[loc->element];
    double v = 0.0;
    for (int a = 0; a < 4; ++a) v += n[a] * nodal[el[a]];
    return v;
}

}  // namespace tj
