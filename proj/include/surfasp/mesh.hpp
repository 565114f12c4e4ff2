#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "surfasp/geometry.hpp"
#include "surfasp/linalg.hpp"
#include "surfasp/vec.hpp"

namespace surfasp {

/// Simplicial mesh of a d-dimensional hypersurface embedded in R^{d+1}.
/// Facets carry two-sided cell incidence: cell_plus is the incident cell with
/// the lower index, cell_minus the higher one. Jump sign conventions downstream
/// reference this ordering. On a closed mesh every facet has both cells;
/// test fixtures may be built non-closed, in which case boundary facets have
/// cell_minus = -1.
template <int D>
struct SurfaceMesh {
    static constexpr int dim = D;
    static constexpr int ambient_dim = D + 1;
    using Point = Vec<D + 1>;
    using Cell = std::array<int, D + 1>;

    struct Facet {
        std::array<int, D> verts;  // ascending vertex indices
        int cell_plus = -1;
        int cell_minus = -1;
        int local_plus = -1;   // local index of the opposite vertex within cell_plus
        int local_minus = -1;
    };

    std::vector<Point> vertices;
    std::vector<Cell> cells;
    std::vector<Facet> facets;
    std::vector<std::array<int, D + 1>> cell_facets;  // [cell][i] = facet opposite local vertex i
    bool closed = true;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_cells() const { return static_cast<int>(cells.size()); }
    int num_facets() const { return static_cast<int>(facets.size()); }
};

/// Per-cell metric data: d-volume, diameter, and the tangential gradients of
/// the barycentric coordinates within the cell's affine hull.
template <int D>
struct CellGeometry {
    double volume = 0.0;
    double diameter = 0.0;
    std::array<Vec<D + 1>, D + 1> bary_grad{};
};

namespace detail {

/// Solve the small SPD system G x = rhs (G is D x D) by Gaussian elimination
/// with partial pivoting. Returns false if G is numerically singular.
template <int D>
bool solve_small(std::array<std::array<double, D>, D> G, std::array<double, D>& rhs) {
    std::array<int, D> perm;
    for (int i = 0; i < D; ++i) perm[i] = i;
    for (int k = 0; k < D; ++k) {
        int p = k;
        for (int i = k + 1; i < D; ++i)
            if (std::abs(G[i][k]) > std::abs(G[p][k])) p = i;
        if (G[p][k] == 0.0) return false;
        std::swap(G[p], G[k]);
        std::swap(rhs[p], rhs[k]);
        for (int i = k + 1; i < D; ++i) {
            const double f = G[i][k] / G[k][k];
            for (int j = k; j < D; ++j) G[i][j] -= f * G[k][j];
            rhs[i] -= f * rhs[k];
        }
    }
    for (int i = D - 1; i >= 0; --i) {
        double s = rhs[i];
        for (int j = i + 1; j < D; ++j) s -= G[i][j] * rhs[j];
        rhs[i] = s / G[i][i];
    }
    return true;
}

inline constexpr double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

/// Gram-determinant measure of the simplex spanned by edge vectors e[0..K-1].
template <int N, int K>
double simplex_measure(const std::array<Vec<N>, K>& e) {
    std::array<std::array<double, K>, K> G{};
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) G[i][j] = dot(e[i], e[j]);
    // determinant by elimination
    double det = 1.0;
    for (int k = 0; k < K; ++k) {
        int p = k;
        for (int i = k + 1; i < K; ++i)
            if (std::abs(G[i][k]) > std::abs(G[p][k])) p = i;
        if (p != k) {
            std::swap(G[p], G[k]);
            det = -det;
        }
        if (G[k][k] == 0.0) return 0.0;
        det *= G[k][k];
        for (int i = k + 1; i < K; ++i) {
            const double f = G[i][k] / G[k][k];
            for (int j = k; j < K; ++j) G[i][j] -= f * G[k][j];
        }
    }
    return det <= 0.0 ? 0.0 : std::sqrt(det) / factorial(K);
}

}  // namespace detail

template <int D>
CellGeometry<D> cell_geometry(const SurfaceMesh<D>& mesh, int cell) {
    const auto& c = mesh.cells[cell];
    const auto& p0 = mesh.vertices[c[0]];
    std::array<Vec<D + 1>, D> edges;
    for (int i = 0; i < D; ++i) edges[i] = mesh.vertices[c[i + 1]] - p0;

    CellGeometry<D> g;
    g.volume = detail::simplex_measure<D + 1, D>(edges);
    if (!(g.volume > 0.0))
        throw std::runtime_error("degenerate cell " + std::to_string(cell) + " (zero d-volume)");

    for (int i = 0; i < D + 1; ++i)
        for (int j = i + 1; j < D + 1; ++j)
            g.diameter = std::max(g.diameter, distance(mesh.vertices[c[i]], mesh.vertices[c[j]]));

    // grad lambda_i (i >= 1) solves G y = e_i in edge coordinates; grad lambda_0
    // closes the partition of unity.
    std::array<std::array<double, D>, D> G{};
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) G[i][j] = dot(edges[i], edges[j]);
    for (int i = 1; i <= D; ++i) {
        std::array<double, D> rhs{};
        rhs[i - 1] = 1.0;
        auto Gi = G;
        if (!detail::solve_small<D>(Gi, rhs))
            throw std::runtime_error("degenerate cell " + std::to_string(cell) + " (singular metric)");
        Vec<D + 1> grad{};
        for (int j = 0; j < D; ++j) grad += rhs[j] * edges[j];
        g.bary_grad[i] = grad;
        g.bary_grad[0] -= grad;
    }
    return g;
}

/// (d-1)-measure of a facet.
template <int D>
double facet_measure(const SurfaceMesh<D>& mesh, const typename SurfaceMesh<D>::Facet& f) {
    if constexpr (D == 2) {
        return distance(mesh.vertices[f.verts[0]], mesh.vertices[f.verts[1]]);
    } else {
        std::array<Vec<D + 1>, D - 1> edges;
        for (int i = 0; i + 1 < D; ++i)
            edges[i] = mesh.vertices[f.verts[i + 1]] - mesh.vertices[f.verts[0]];
        return detail::simplex_measure<D + 1, D - 1>(edges);
    }
}

template <int D>
double facet_diameter(const SurfaceMesh<D>& mesh, const typename SurfaceMesh<D>::Facet& f) {
    double d = 0.0;
    for (int i = 0; i < D; ++i)
        for (int j = i + 1; j < D; ++j)
            d = std::max(d, distance(mesh.vertices[f.verts[i]], mesh.vertices[f.verts[j]]));
    return d;
}

/// Assembles a mesh from vertices and cells: enumerates facets (first-touch
/// order over cells, deterministic), records two-sided incidence, and checks
/// that cells are non-degenerate. With require_closed, every facet must have
/// exactly two incident cells.
template <int D>
SurfaceMesh<D> make_mesh(std::vector<Vec<D + 1>> vertices,
                         std::vector<std::array<int, D + 1>> cells,
                         bool require_closed = true) {
    SurfaceMesh<D> mesh;
    mesh.vertices = std::move(vertices);
    mesh.cells = std::move(cells);
    mesh.closed = require_closed;

    std::map<std::array<int, D>, int> facet_of;
    mesh.cell_facets.assign(mesh.cells.size(), {});
    for (int k = 0; k < mesh.num_cells(); ++k) {
        for (int i = 0; i < D + 1; ++i) {
            std::array<int, D> key;
            int m = 0;
            for (int j = 0; j < D + 1; ++j)
                if (j != i) key[m++] = mesh.cells[k][j];
            std::sort(key.begin(), key.end());
            auto [it, inserted] = facet_of.try_emplace(key, mesh.num_facets());
            if (inserted) {
                typename SurfaceMesh<D>::Facet f;
                f.verts = key;
                f.cell_plus = k;
                f.local_plus = i;
                mesh.facets.push_back(f);
            } else {
                auto& f = mesh.facets[it->second];
                if (f.cell_minus != -1)
                    throw std::runtime_error("non-manifold mesh: facet shared by more than two cells");
                f.cell_minus = k;
                f.local_minus = i;
            }
            mesh.cell_facets[k][i] = it->second;
        }
    }
    if (require_closed)
        for (const auto& f : mesh.facets)
            if (f.cell_minus == -1)
                throw std::runtime_error("mesh is not a closed surface: boundary facet found");
    for (int k = 0; k < mesh.num_cells(); ++k) cell_geometry(mesh, k);  // volume check
    return mesh;
}

/// Triangle mesh of the torus (R, r) from a 24 x 4 parametric grid, each quad
/// split into two triangles: 96 vertices, 192 cells, vertices on the torus.
inline SurfaceMesh<2> initial_mesh_torus(double major_radius = 2.0, double minor_radius = 0.5) {
    constexpr int nu = 24, nv = 4;
    const double pi = 3.14159265358979323846;
    std::vector<Vec<3>> vertices(nu * nv);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const double theta = 2.0 * pi * i / nu;
            const double phi = 2.0 * pi * j / nv;
            const double w = major_radius + minor_radius * std::cos(phi);
            vertices[i * nv + j] = {{w * std::cos(theta), w * std::sin(theta), minor_radius * std::sin(phi)}};
        }
    std::vector<std::array<int, 3>> cells;
    cells.reserve(2 * nu * nv);
    auto id = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            cells.push_back({a, b, c});
            cells.push_back({a, c, d});
        }
    return make_mesh<2>(std::move(vertices), std::move(cells));
}

/// Octahedral triangle mesh of the unit sphere S^2: 6 vertices, 8 cells.
inline SurfaceMesh<2> initial_mesh_sphere2() {
    std::vector<Vec<3>> vertices = {
        {{1, 0, 0}}, {{0, 1, 0}}, {{-1, 0, 0}}, {{0, -1, 0}}, {{0, 0, 1}}, {{0, 0, -1}},
    };
    std::vector<std::array<int, 3>> cells = {
        {0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4},
        {1, 0, 5}, {2, 1, 5}, {3, 2, 5}, {0, 3, 5},
    };
    return make_mesh<2>(std::move(vertices), std::move(cells));
}

/// Tetrahedral mesh of the unit sphere S^3: the 16 simplexes on the 8 unit
/// coordinate vertices.
inline SurfaceMesh<3> initial_mesh_s3() {
    std::vector<Vec<4>> vertices = {
        {{1, 0, 0, 0}},  {{0, 1, 0, 0}},  {{-1, 0, 0, 0}}, {{0, -1, 0, 0}},
        {{0, 0, 1, 0}},  {{0, 0, -1, 0}}, {{0, 0, 0, 1}},  {{0, 0, 0, -1}},
    };
    std::vector<std::array<int, 4>> cells = {
        {0, 1, 4, 6}, {2, 4, 1, 6}, {2, 3, 4, 6}, {0, 4, 3, 6},
        {0, 5, 1, 6}, {2, 1, 5, 6}, {2, 5, 3, 6}, {0, 3, 5, 6},
        {7, 0, 1, 4}, {7, 2, 4, 1}, {7, 2, 3, 4}, {7, 0, 4, 3},
        {7, 0, 5, 1}, {7, 2, 1, 5}, {7, 2, 5, 3}, {7, 0, 3, 5},
    };
    return make_mesh<3>(std::move(vertices), std::move(cells));
}

template <int D>
struct RefinedMesh {
    SurfaceMesh<D> mesh;
    SparseOperator prolongation;  // fine nodal values from coarse: nv_fine x nv_coarse
};

namespace detail {

/// Edge midpoint numbering shared by both refinement rules: midpoints are
/// appended after the coarse vertices, in first-encounter order over cells.
template <int D>
struct EdgeSplit {
    std::vector<Vec<D + 1>> vertices;
    std::map<std::pair<int, int>, int> midpoint;

    explicit EdgeSplit(const SurfaceMesh<D>& mesh) : vertices(mesh.vertices) {
        for (const auto& cell : mesh.cells)
            for (int i = 0; i < D + 1; ++i)
                for (int j = i + 1; j < D + 1; ++j) {
                    const std::pair<int, int> key{std::min(cell[i], cell[j]), std::max(cell[i], cell[j])};
                    if (midpoint.emplace(key, static_cast<int>(vertices.size())).second)
                        vertices.push_back(0.5 * (mesh.vertices[key.first] + mesh.vertices[key.second]));
                }
    }

    int mid(int a, int b) const { return midpoint.at({std::min(a, b), std::max(a, b)}); }

    SparseOperator prolongation(int nv_coarse) const {
        std::vector<Triplet> ts;
        ts.reserve(vertices.size() * 2);
        for (int v = 0; v < nv_coarse; ++v) ts.push_back({v, v, 1.0});
        for (const auto& [edge, m] : midpoint) {
            ts.push_back({m, edge.first, 0.5});
            ts.push_back({m, edge.second, 0.5});
        }
        return SparseOperator::from_triplets(static_cast<int>(vertices.size()), nv_coarse, std::move(ts));
    }
};

}  // namespace detail

/// Red refinement: each triangle is split into four by its edge midpoints.
/// Children inherit the parent's orientation.
inline RefinedMesh<2> refine_red_2d(const SurfaceMesh<2>& mesh) {
    detail::EdgeSplit<2> split(mesh);
    std::vector<std::array<int, 3>> cells;
    cells.reserve(4 * mesh.cells.size());
    for (const auto& c : mesh.cells) {
        const int m01 = split.mid(c[0], c[1]), m02 = split.mid(c[0], c[2]), m12 = split.mid(c[1], c[2]);
        cells.push_back({c[0], m01, m02});
        cells.push_back({m01, c[1], m12});
        cells.push_back({m02, m12, c[2]});
        cells.push_back({m01, m12, m02});
    }
    RefinedMesh<2> out;
    out.prolongation = split.prolongation(mesh.num_vertices());
    out.mesh = make_mesh<2>(std::move(split.vertices), std::move(cells), mesh.closed);
    return out;
}

/// Octasection: each tetrahedron is split into four corner tetrahedra plus
/// four from the interior octahedron, cut along the diagonal between the
/// 02- and 13-edge midpoints of the cell's stored vertex order. Children are
/// emitted in the canonical order of that rule and keep their constructed
/// orderings, which makes the refinement family stable (at most three
/// similarity classes per initial cell).
inline RefinedMesh<3> refine_bey_3d(const SurfaceMesh<3>& mesh) {
    detail::EdgeSplit<3> split(mesh);
    std::vector<std::array<int, 4>> cells;
    cells.reserve(8 * mesh.cells.size());
    for (const auto& c : mesh.cells) {
        const int m01 = split.mid(c[0], c[1]), m02 = split.mid(c[0], c[2]), m03 = split.mid(c[0], c[3]);
        const int m12 = split.mid(c[1], c[2]), m13 = split.mid(c[1], c[3]), m23 = split.mid(c[2], c[3]);
        cells.push_back({c[0], m01, m02, m03});
        cells.push_back({m01, c[1], m12, m13});
        cells.push_back({m02, m12, c[2], m23});
        cells.push_back({m03, m13, m23, c[3]});
        cells.push_back({m01, m02, m03, m13});
        cells.push_back({m01, m02, m12, m13});
        cells.push_back({m02, m03, m13, m23});
        cells.push_back({m02, m12, m13, m23});
    }
    RefinedMesh<3> out;
    out.prolongation = split.prolongation(mesh.num_vertices());
    out.mesh = make_mesh<3>(std::move(split.vertices), std::move(cells), mesh.closed);
    return out;
}

template <int D>
RefinedMesh<D> refine_uniform(const SurfaceMesh<D>& mesh) {
    if constexpr (D == 2)
        return refine_red_2d(mesh);
    else
        return refine_bey_3d(mesh);
}

/// Nested reference meshes on the fixed polyhedral surface M0 together with
/// the projected true meshes and level-to-level nodal prolongations.
///
/// The reference side is refined flat: midpoints stay on M0's faces, so the
/// reference spaces are exactly nested. The true mesh at each level projects
/// every reference vertex to the surface via the closest-point map; the
/// piecewise-linear transfer between matching nodal bases is the identity.
template <int D>
struct MeshHierarchy {
    std::vector<SurfaceMesh<D>> reference_meshes;
    std::vector<SurfaceMesh<D>> true_meshes;
    std::vector<SparseOperator> prolongations;  // [j]: level j -> j+1

    int num_levels() const { return static_cast<int>(reference_meshes.size()); }
    int top_level() const { return num_levels() - 1; }
};

template <int D>
SurfaceMesh<D> project_mesh(const ImplicitSurface<D>& surface, const SurfaceMesh<D>& mesh, int level = -1) {
    std::vector<Vec<D + 1>> projected(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        try {
            projected[v] = closest_point(surface, mesh.vertices[v]);
        } catch (const std::exception& e) {
            throw std::runtime_error("projection failed at vertex " + std::to_string(v) +
                                     (level >= 0 ? " of level " + std::to_string(level) : "") + ": " + e.what());
        }
    }
    return make_mesh<D>(std::move(projected), mesh.cells, mesh.closed);
}

/// Builds `levels` mesh levels (indices 0 .. levels-1): level 0 is the initial
/// mesh, each further level a uniform refinement of the previous one.
template <int D>
MeshHierarchy<D> build_hierarchy(const ImplicitSurface<D>& surface, SurfaceMesh<D> initial, int levels) {
    if (levels < 1) throw std::invalid_argument("build_hierarchy: levels must be >= 1");
    MeshHierarchy<D> h;
    h.reference_meshes.push_back(std::move(initial));
    h.true_meshes.push_back(project_mesh(surface, h.reference_meshes[0], 0));
    for (int j = 1; j < levels; ++j) {
        RefinedMesh<D> fine = refine_uniform(h.reference_meshes.back());
        h.prolongations.push_back(std::move(fine.prolongation));
        h.reference_meshes.push_back(std::move(fine.mesh));
        h.true_meshes.push_back(project_mesh(surface, h.reference_meshes.back(), j));
    }
    return h;
}

/// Extends an existing hierarchy in place to `levels` total levels.
template <int D>
void extend_hierarchy(const ImplicitSurface<D>& surface, MeshHierarchy<D>& h, int levels) {
    while (h.num_levels() < levels) {
        RefinedMesh<D> fine = refine_uniform(h.reference_meshes.back());
        h.prolongations.push_back(std::move(fine.prolongation));
        h.reference_meshes.push_back(std::move(fine.mesh));
        h.true_meshes.push_back(project_mesh(surface, h.reference_meshes.back(), h.num_levels()));
    }
}

/// Mesh text format: header "d nv nc", nv coordinate lines, nc index lines.
/// Coordinates are written with 17 significant digits (round-trip exact).
template <int D>
void write_mesh(std::ostream& os, const SurfaceMesh<D>& mesh) {
    os << D << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
    char buf[32];
    for (const auto& p : mesh.vertices) {
        for (int i = 0; i < D + 1; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", p[i]);
            os << (i ? " " : "") << buf;
        }
        os << '\n';
    }
    for (const auto& c : mesh.cells) {
        for (int i = 0; i < D + 1; ++i) os << (i ? " " : "") << c[i];
        os << '\n';
    }
}

template <int D>
SurfaceMesh<D> read_mesh(std::istream& is, bool require_closed = true) {
    int d = 0, nv = 0, nc = 0;
    if (!(is >> d >> nv >> nc)) throw std::runtime_error("read_mesh: malformed header");
    if (d != D)
        throw std::runtime_error("read_mesh: dimension mismatch (file has d = " + std::to_string(d) + ")");
    std::vector<Vec<D + 1>> vertices(nv);
    for (auto& p : vertices)
        for (int i = 0; i < D + 1; ++i)
            if (!(is >> p[i])) throw std::runtime_error("read_mesh: truncated vertex data");
    std::vector<std::array<int, D + 1>> cells(nc);
    for (auto& c : cells)
        for (int i = 0; i < D + 1; ++i)
            if (!(is >> c[i])) throw std::runtime_error("read_mesh: truncated cell data");
    return make_mesh<D>(std::move(vertices), std::move(cells), require_closed);
}

}  // namespace surfasp
