#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "surfasp/assembly.hpp"
#include "surfasp/linalg.hpp"
#include "surfasp/mesh.hpp"

namespace surfasp {

/// An inter-space map materialized as a sparse matrix (target_dofs x source_dofs).
struct TransferOperator {
    int source_dofs = 0;
    int target_dofs = 0;
    SparseOperator matrix;

    Vector apply(const Vector& v) const { return matrix.apply(v); }
};

/// Transfer between the reference and true P1 spaces at a level: the nodal
/// bases correspond one-to-one under the piecewise-linear vertex-matching map,
/// so the matrix representation is the identity.
template <int D>
TransferOperator surface_transfer_p1(const MeshHierarchy<D>& hierarchy, int level) {
    if (level < 0 || level >= hierarchy.num_levels())
        throw std::invalid_argument("surface_transfer_p1: bad level");
    const int n = hierarchy.reference_meshes[level].num_vertices();
    return {n, n, SparseOperator::identity(n)};
}

/// Inclusion of P1 into CR: row (facet e) evaluates the P1 expansion at the
/// barycenter of e, i.e. weight 1/d at each of e's d vertices.
template <int D>
TransferOperator inclusion_cr(const SurfaceMesh<D>& mesh) {
    std::vector<Triplet> ts;
    ts.reserve(mesh.facets.size() * D);
    for (int e = 0; e < mesh.num_facets(); ++e)
        for (int v : mesh.facets[e].verts) ts.push_back({e, v, 1.0 / D});
    return {mesh.num_vertices(), mesh.num_facets(),
            SparseOperator::from_triplets(mesh.num_facets(), mesh.num_vertices(), std::move(ts))};
}

/// Inclusion of P1 into DG: scatter each vertex value into every incident
/// cell's local dof.
template <int D>
TransferOperator inclusion_dg(const SurfaceMesh<D>& mesh) {
    std::vector<Triplet> ts;
    ts.reserve(mesh.cells.size() * (D + 1));
    for (int k = 0; k < mesh.num_cells(); ++k)
        for (int i = 0; i <= D; ++i) ts.push_back({k * (D + 1) + i, mesh.cells[k][i], 1.0});
    const int n = mesh.num_cells() * (D + 1);
    return {mesh.num_vertices(), n, SparseOperator::from_triplets(n, mesh.num_vertices(), std::move(ts))};
}

/// Nodal averaging from DG to P1: the row of vertex z averages the cell-local
/// values at z over the N_z incident cells with equal weights.
template <int D>
TransferOperator nodal_averaging(const SurfaceMesh<D>& mesh) {
    std::vector<int> incident(mesh.num_vertices(), 0);
    for (const auto& cell : mesh.cells)
        for (int v : cell) ++incident[v];
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (incident[v] == 0)
            throw std::runtime_error("nodal_averaging: isolated vertex " + std::to_string(v));
    std::vector<Triplet> ts;
    ts.reserve(mesh.cells.size() * (D + 1));
    for (int k = 0; k < mesh.num_cells(); ++k)
        for (int i = 0; i <= D; ++i) {
            const int v = mesh.cells[k][i];
            ts.push_back({v, k * (D + 1) + i, 1.0 / incident[v]});
        }
    return {mesh.num_cells() * (D + 1), mesh.num_vertices(),
            SparseOperator::from_triplets(mesh.num_vertices(), mesh.num_cells() * (D + 1), std::move(ts))};
}

/// Product of level prolongations mapping nodal values from level `from` to
/// level `to` (from == to gives the identity).
template <int D>
TransferOperator prolongation_chain(const MeshHierarchy<D>& hierarchy, int from, int to) {
    if (from < 0 || to < from || to >= hierarchy.num_levels())
        throw std::invalid_argument("prolongation_chain: bad level indices");
    SparseOperator chain = SparseOperator::identity(hierarchy.reference_meshes[from].num_vertices());
    for (int j = from; j < to; ++j) chain = multiply(hierarchy.prolongations[j], chain);
    return {hierarchy.reference_meshes[from].num_vertices(),
            hierarchy.reference_meshes[to].num_vertices(), std::move(chain)};
}

}  // namespace surfasp
