#pragma once

// Deterministic, locale-independent text output.

#include "thickjunction/error.hpp"
#include "thickjunction/geometry.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

namespace tj::io {

/// 12 significant digits, scientific notation.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::scientific, 11);
    return std::string(buf.data(), end);
}

inline std::ofstream open(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    TJ_THROW_IF(!out, Error, "cannot open " + path.string() + " for writing");
    return out;
}

/// nodes.csv, elements.csv and edges.csv in `dir`.
inline void write_mesh(const Mesh& mesh, const std::filesystem::path& dir) {
    {
        auto out = open(dir / "nodes.csv");
        out << "id,x1,x2\n";
        for (int i = 0; i < mesh.node_count(); ++i)
            out << i << ',' << fmt(mesh.nodes[i][0]) << ',' << fmt(mesh.nodes[i][1]) << '\n';
    }
    {
        auto out = open(dir / "elements.csv");
        out << "id,n0,n1,n2,n3,region\n";
        for (int e = 0; e < mesh.element_count(); ++e) {
            const auto& el = mesh.elements[e];
            out << e << ',' << el[0] << ',' << el[1] << ',' << el[2] << ',' << el[3] << ',' << to_string(mesh.regions[e])
                << '\n';
        }
    }
    {
        auto out = open(dir / "edges.csv");
        out << "elem,local_edge,tag\n";
        for (const auto* list : {&mesh.boundary_edges, &mesh.interface_edges})
            for (const auto& te : *list) out << te.element << ',' << te.local_edge << ',' << to_string(te.tag) << '\n';
    }
}

}  // namespace tj::io
