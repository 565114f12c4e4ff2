#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "surfasp/geometry.hpp"
#include "surfasp/linalg.hpp"
#include "surfasp/mesh.hpp"
#include "surfasp/quadrature.hpp"

namespace surfasp {

enum class Discretization { p1, cr, dg };

inline std::string to_string(Discretization d) {
    switch (d) {
        case Discretization::p1: return "p1";
        case Discretization::cr: return "cr";
        default: return "dg";
    }
}

/// Local-to-global dof indexing. P1 dofs live on vertices, CR dofs on facets
/// (value at the facet barycenter), DG dofs are cell-local vertex values with
/// no sharing.
template <int D>
struct DofMap {
    Discretization kind = Discretization::p1;
    int num_dofs = 0;

    int global(const SurfaceMesh<D>& mesh, int cell, int local) const {
        switch (kind) {
            case Discretization::p1: return mesh.cells[cell][local];
            case Discretization::cr: return mesh.cell_facets[cell][local];
            default: return cell * (D + 1) + local;
        }
    }
};

template <int D>
DofMap<D> make_dofmap(const SurfaceMesh<D>& mesh, Discretization kind) {
    DofMap<D> map;
    map.kind = kind;
    switch (kind) {
        case Discretization::p1: map.num_dofs = mesh.num_vertices(); break;
        case Discretization::cr: map.num_dofs = mesh.num_facets(); break;
        default: map.num_dofs = mesh.num_cells() * (D + 1); break;
    }
    return map;
}

namespace detail {

/// Exact P1 mass matrix on a flat simplex: M_ij = vol (1 + delta_ij) / ((d+1)(d+2)).
template <int D>
std::array<std::array<double, D + 1>, D + 1> local_mass_p1(double volume) {
    std::array<std::array<double, D + 1>, D + 1> m{};
    const double base = volume / ((D + 1) * (D + 2));
    for (int i = 0; i <= D; ++i)
        for (int j = 0; j <= D; ++j) m[i][j] = base * (i == j ? 2.0 : 1.0);
    return m;
}

/// Exact CR mass matrix: the CR basis is psi_i = 1 - d lambda_i (local dof i
/// sits at the barycenter of the facet opposite vertex i).
template <int D>
std::array<std::array<double, D + 1>, D + 1> local_mass_cr(double volume) {
    std::array<std::array<double, D + 1>, D + 1> m{};
    const double il = 1.0 / (D + 1);
    const double iq = 1.0 / ((D + 1) * (D + 2));
    for (int i = 0; i <= D; ++i)
        for (int j = 0; j <= D; ++j)
            m[i][j] = volume * (1.0 - 2.0 * D * il + double(D) * D * (i == j ? 2.0 : 1.0) * iq);
    return m;
}

}  // namespace detail

/// Stiffness-plus-optional-mass operator for conforming linear elements:
/// tangential gradients are constant per flat cell.
template <int D>
SparseOperator assemble_p1(const SurfaceMesh<D>& mesh, int c) {
    std::vector<Triplet> ts;
    ts.reserve(mesh.cells.size() * (D + 1) * (D + 1));
    for (int k = 0; k < mesh.num_cells(); ++k) {
        const auto g = cell_geometry(mesh, k);
        const auto mass = detail::local_mass_p1<D>(g.volume);
        const auto& cell = mesh.cells[k];
        for (int i = 0; i <= D; ++i)
            for (int j = 0; j <= D; ++j) {
                double v = g.volume * dot(g.bary_grad[i], g.bary_grad[j]);
                if (c) v += mass[i][j];
                ts.push_back({cell[i], cell[j], v});
            }
    }
    return SparseOperator::from_triplets(mesh.num_vertices(), mesh.num_vertices(), std::move(ts));
}

/// Crouzeix-Raviart operator over facet dofs; broken gradients per cell with
/// grad psi_i = -d grad lambda_i.
template <int D>
SparseOperator assemble_cr(const SurfaceMesh<D>& mesh, int c) {
    const int n = mesh.num_facets();
    std::vector<Triplet> ts;
    ts.reserve(mesh.cells.size() * (D + 1) * (D + 1));
    for (int k = 0; k < mesh.num_cells(); ++k) {
        const auto g = cell_geometry(mesh, k);
        const auto mass = detail::local_mass_cr<D>(g.volume);
        const auto& fac = mesh.cell_facets[k];
        for (int i = 0; i <= D; ++i)
            for (int j = 0; j <= D; ++j) {
                double v = g.volume * D * D * dot(g.bary_grad[i], g.bary_grad[j]);
                if (c) v += mass[i][j];
                ts.push_back({fac[i], fac[j], v});
            }
    }
    return SparseOperator::from_triplets(n, n, std::move(ts));
}

/// Interior-penalty DG operator over cell-local dofs. Jumps use the facet's
/// stored (cell_plus, cell_minus) order; conormals are unit vectors in each
/// cell's tangent plane, normal to the facet, outward. The penalty acts on
/// facet-mean jumps (L2 projection onto constants). All facet integrands are
/// polynomials of degree <= 2 and are integrated exactly.
template <int D>
SparseOperator assemble_dg(const SurfaceMesh<D>& mesh, int c, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("assemble_dg: alpha must be positive");
    if (!mesh.closed) throw std::invalid_argument("assemble_dg: requires a closed mesh");
    const int n = mesh.num_cells() * (D + 1);
    std::vector<Triplet> ts;
    ts.reserve(mesh.cells.size() * (D + 1) * (D + 1) + mesh.facets.size() * 4 * (D + 1) * (D + 1));

    std::vector<CellGeometry<D>> geom(mesh.num_cells());
    for (int k = 0; k < mesh.num_cells(); ++k) geom[k] = cell_geometry(mesh, k);

    // broken gradient and reaction terms
    for (int k = 0; k < mesh.num_cells(); ++k) {
        const auto& g = geom[k];
        const auto mass = detail::local_mass_p1<D>(g.volume);
        for (int i = 0; i <= D; ++i)
            for (int j = 0; j <= D; ++j) {
                double v = g.volume * dot(g.bary_grad[i], g.bary_grad[j]);
                if (c) v += mass[i][j];
                ts.push_back({k * (D + 1) + i, k * (D + 1) + j, v});
            }
    }

    // facet terms: consistency (both slots) and the mean-jump penalty
    for (const auto& f : mesh.facets) {
        const double measure = facet_measure(mesh, f);
        const double he = facet_diameter(mesh, f);
        if (!(measure > 0.0)) throw std::runtime_error("assemble_dg: degenerate facet");

        std::array<int, 2 * (D + 1)> dof;
        std::array<double, 2 * (D + 1)> jump_mean;  // facet mean of the dof's jump trace
        std::array<double, 2 * (D + 1)> flux;       // dof's contribution to {grad v . nu}

        for (int side = 0; side < 2; ++side) {
            const int cell = side == 0 ? f.cell_plus : f.cell_minus;
            const int opp = side == 0 ? f.local_plus : f.local_minus;
            const double sign = side == 0 ? 1.0 : -1.0;
            const auto& g = geom[cell];
            // outward conormal: -grad lambda_opp normalized (lambda_opp grows
            // away from the facet towards the opposite vertex)
            Vec<D + 1> nu = g.bary_grad[opp];
            nu *= -1.0 / nu.norm();
            for (int i = 0; i <= D; ++i) {
                const int a = side * (D + 1) + i;
                dof[a] = cell * (D + 1) + i;
                jump_mean[a] = (i == opp) ? 0.0 : sign / D;
                flux[a] = sign * 0.5 * dot(g.bary_grad[i], nu);
            }
        }

        for (int a = 0; a < 2 * (D + 1); ++a)
            for (int b = 0; b < 2 * (D + 1); ++b) {
                const double v = measure * (-flux[a] * jump_mean[b] - flux[b] * jump_mean[a] +
                                            (alpha / he) * jump_mean[a] * jump_mean[b]);
                if (v != 0.0) ts.push_back({dof[a], dof[b], v});
            }
    }
    return SparseOperator::from_triplets(n, n, std::move(ts));
}

template <int D>
SparseOperator assemble_operator(const SurfaceMesh<D>& mesh, Discretization disc, int c, double alpha = 0.0) {
    switch (disc) {
        case Discretization::p1: return assemble_p1(mesh, c);
        case Discretization::cr: return assemble_cr(mesh, c);
        default: return assemble_dg(mesh, c, alpha);
    }
}

/// Mass matrix of the discretization (exact simplex formulas; SPD).
template <int D>
SparseOperator assemble_mass(const SurfaceMesh<D>& mesh, const DofMap<D>& dofmap) {
    std::vector<Triplet> ts;
    ts.reserve(mesh.cells.size() * (D + 1) * (D + 1));
    for (int k = 0; k < mesh.num_cells(); ++k) {
        const auto g = cell_geometry(mesh, k);
        const auto mass = dofmap.kind == Discretization::cr ? detail::local_mass_cr<D>(g.volume)
                                                            : detail::local_mass_p1<D>(g.volume);
        for (int i = 0; i <= D; ++i)
            for (int j = 0; j <= D; ++j)
                ts.push_back({dofmap.global(mesh, k, i), dofmap.global(mesh, k, j), mass[i][j]});
    }
    return SparseOperator::from_triplets(dofmap.num_dofs, dofmap.num_dofs, std::move(ts));
}

/// Load vector b_i = int f(Phi(x)) phi_i dmu_h by a degree-2 rule, f evaluated
/// through the closest-point map. For c = 0 the result is corrected to be
/// exactly compatible: b <- b - (1^T b / 1^T M 1) M 1.
template <int D>
Vector assemble_load(const SurfaceMesh<D>& mesh, const DofMap<D>& dofmap,
                     const std::function<double(const Vec<D + 1>&)>& f,
                     const ImplicitSurface<D>& surface, int c) {
    Vector b(dofmap.num_dofs, 0.0);
    const auto& rule = simplex_rule<D>(2);
    for (int k = 0; k < mesh.num_cells(); ++k) {
        const auto g = cell_geometry(mesh, k);
        const auto& cell = mesh.cells[k];
        for (const auto& node : rule) {
            Vec<D + 1> x{};
            for (int i = 0; i <= D; ++i) x += node.bary[i] * mesh.vertices[cell[i]];
            const double fv = f(closest_point(surface, x));
            const double w = node.weight * g.volume * fv;
            for (int i = 0; i <= D; ++i) {
                // basis value at the quadrature point
                const double phi = dofmap.kind == Discretization::cr ? 1.0 - D * node.bary[i] : node.bary[i];
                b[dofmap.global(mesh, k, i)] += w * phi;
            }
        }
    }
    if (c == 0) {
        const SparseOperator M = assemble_mass(mesh, dofmap);
        const Vector ones(dofmap.num_dofs, 1.0);
        const Vector m1 = M.apply(ones);
        const double correction = dot(ones, b) / dot(ones, m1);
        axpy(-correction, m1, b);
    }
    return b;
}

/// One assembled discrete problem: operator, mass, load, and the constant
/// kernel when c = 0.
template <int D>
struct AssembledProblem {
    SparseOperator A;
    SparseOperator M;
    Vector b;
    int c = 1;
    Vector kernel;  // empty when c = 1
    DofMap<D> dofmap;
};

template <int D>
AssembledProblem<D> assemble_problem(const SurfaceMesh<D>& mesh, Discretization disc, int c,
                                     const std::function<double(const Vec<D + 1>&)>& f,
                                     const ImplicitSurface<D>& surface, double alpha = 0.0) {
    AssembledProblem<D> p;
    p.dofmap = make_dofmap(mesh, disc);
    p.A = assemble_operator(mesh, disc, c, alpha);
    p.M = assemble_mass(mesh, p.dofmap);
    p.b = assemble_load(mesh, p.dofmap, f, surface, c);
    p.c = c;
    if (c == 0) p.kernel.assign(p.dofmap.num_dofs, 1.0);
    return p;
}

}  // namespace surfasp
