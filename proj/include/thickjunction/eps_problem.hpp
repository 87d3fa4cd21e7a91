#pragma once

#include "thickjunction/assembly.hpp"
#include "thickjunction/geometry.hpp"
#include "thickjunction/problem_data.hpp"
#include "thickjunction/vi_solver.hpp"

namespace tj {

/// The Signorini problem on Ω_ε as a discrete VI: Dirichlet on Γ_ε,
/// u ≤ g nodally on S_ε (rod-top corners included, rod-base corners excluded).
struct EpsProblem {
    Mesh mesh;
    ProblemData data;
    SparseMatrix A_full;  // node-indexed gradient form on Ω_ε
    Vector b_full;
    DiscreteVI vi;
};

inline EpsProblem assemble_eps(const Mesh& mesh, const ProblemData& data) {
    TJ_THROW_IF(mesh.kind != MeshKind::Junction, ConfigError, "assemble_eps: needs a junction mesh");
    EpsProblem p{mesh, data, {}, {}, {}};
    p.A_full = assemble_stiffness(mesh, StiffnessForm::full());
    p.b_full = assemble_load(mesh, data, LoadForm::eps(mesh.config.eps()));
    p.vi.system = apply_dirichlet(p.A_full, p.b_full, mesh, {BoundaryTag::Gamma_eps});
    p.vi.label = ProblemLabel::EpsProblem;
    if (data.g_mode == GMode::Standard) {
        for (int node : mesh.node_set(BoundaryTag::S_eps)) {
            const int r = p.vi.system.node_to_free[node];
            if (r < 0) continue;
            p.vi.constrained.push_back(r);
            p.vi.bound.push_back(data.g(mesh.nodes[node][0], mesh.nodes[node][1]));
        }
        // node ids map monotonically to reduced indices
    }
    p.vi.validate();
    return p;
}

inline EpsProblem assemble_eps(const JunctionConfig& cfg, const ProblemData& data) {
    return assemble_eps(build_junction_mesh(cfg), data);
}

}  // namespace tj
