#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "surfasp/assembly.hpp"
#include "surfasp/mesh.hpp"
#include "surfasp/transfer.hpp"
#include "test_helpers.hpp"

using namespace surfasp;
namespace st = surfasp::testing;

namespace {

// facet-mean jumps of a DG vector, used by the probes below
template <int D>
double mean_jump(const SurfaceMesh<D>& mesh, const Vector& v, const typename SurfaceMesh<D>::Facet& f) {
    double jump = 0.0;
    for (int side = 0; side < 2; ++side) {
        const int cell = side == 0 ? f.cell_plus : f.cell_minus;
        const int opp = side == 0 ? f.local_plus : f.local_minus;
        const double sign = side == 0 ? 1.0 : -1.0;
        for (int i = 0; i <= D; ++i)
            if (i != opp) jump += sign / D * v[cell * (D + 1) + i];
    }
    return jump;
}

}  // namespace

TEST_CASE("reference-to-true transfer is the identity") {
    Torus torus;
    const auto h = build_hierarchy<2>(torus, initial_mesh_torus(), 3);
    for (int level = 0; level < 3; ++level) {
        const auto T = surface_transfer_p1(h, level);
        CHECK(T.source_dofs == h.reference_meshes[level].num_vertices());
        const Vector v = st::random_vector(T.source_dofs, level + 1);
        CHECK(T.apply(v) == v);
        CHECK(st::to_dense(T.matrix.transposed()).isApprox(st::to_dense(T.matrix)));
    }
    CHECK_THROWS_AS(surface_transfer_p1(h, 7), std::invalid_argument);
}

TEST_CASE("cr inclusion evaluates at facet barycenters") {
    const auto tri = make_mesh<2>({{{0, 0, 0}}, {{1, 0, 0}}, {{0, 1, 0}}}, {{0, 1, 2}}, false);
    const auto I = inclusion_cr(tri);
    // the facet {1,2} row carries 1/2 on vertices 1 and 2
    int e12 = -1;
    for (int e = 0; e < tri.num_facets(); ++e)
        if (tri.facets[e].verts == std::array<int, 2>{1, 2}) e12 = e;
    REQUIRE(e12 >= 0);
    const double* a = I.matrix.find(e12, 1);
    const double* b = I.matrix.find(e12, 2);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(*a == 0.5);
    CHECK(*b == 0.5);
    CHECK(I.matrix.find(e12, 0) == nullptr);

    Torus torus;
    const auto mesh = project_mesh(torus, initial_mesh_torus());
    const auto Im = inclusion_cr(mesh);
    const Vector ones(mesh.num_vertices(), 1.0);
    for (double v : Im.apply(ones)) CHECK(v == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("inclusion consistency against the p1 operator") {
    Torus torus;
    const auto mesh = project_mesh(torus, initial_mesh_torus());
    const auto Ap1 = assemble_p1(mesh, 1);
    const double scale = Ap1.max_abs();

    const auto Gcr = triple_product(inclusion_cr(mesh).matrix, assemble_cr(mesh, 1));
    CHECK((st::to_dense(Gcr) - st::to_dense(Ap1)).cwiseAbs().maxCoeff() <= 1e-12 * scale);

    for (double alpha : {1.0, 10.0, 40.0}) {
        const auto Gdg = triple_product(inclusion_dg(mesh).matrix, assemble_dg(mesh, 1, alpha));
        CHECK((st::to_dense(Gdg) - st::to_dense(Ap1)).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
}

TEST_CASE("dg inclusion has vanishing jumps") {
    Torus torus;
    const auto mesh = project_mesh(torus, initial_mesh_torus());
    const auto I = inclusion_dg(mesh);
    const Vector v = I.apply(st::random_vector(mesh.num_vertices(), 9));
    for (const auto& f : mesh.facets) CHECK(std::abs(mean_jump<2>(mesh, v, f)) <= 1e-13);
    const Vector ones(mesh.num_vertices(), 1.0);
    for (double x : I.apply(ones)) CHECK(x == 1.0);
}

TEST_CASE("nodal averaging") {
    Torus torus;
    const auto mesh = project_mesh(torus, initial_mesh_torus());
    const auto I = inclusion_dg(mesh);
    const auto Av = nodal_averaging(mesh);
    SECTION("left inverse of the inclusion") {
        const auto P = multiply(Av.matrix, I.matrix);
        CHECK((st::to_dense(P) - Eigen::MatrixXd::Identity(P.rows(), P.cols())).cwiseAbs().maxCoeff() <=
              1e-14);
    }
    SECTION("row sums are one") {
        const Vector ones(Av.source_dofs, 1.0);
        for (double v : Av.apply(ones)) CHECK(v == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("isolated vertex is an error") {
        auto vertices = mesh.vertices;
        vertices.push_back({{9, 9, 9}});
        const auto bad = make_mesh<2>(vertices, mesh.cells, false);
        CHECK_THROWS_AS(nodal_averaging(bad), std::runtime_error);
    }
}

TEST_CASE("prolongation chains compose") {
    UnitSphere<3> s3;
    const auto h = build_hierarchy<3>(s3, initial_mesh_s3(), 3);
    const auto C02 = prolongation_chain(h, 0, 2);
    const auto C01 = prolongation_chain(h, 0, 1);
    const auto C12 = prolongation_chain(h, 1, 2);
    CHECK(st::to_dense(C02.matrix).isApprox(st::to_dense(multiply(C12.matrix, C01.matrix)), 1e-15));
    const auto Cii = prolongation_chain(h, 1, 1);
    CHECK(st::to_dense(Cii.matrix).isApprox(Eigen::MatrixXd::Identity(Cii.target_dofs, Cii.target_dofs)));
    const Vector ones(C02.source_dofs, 1.0);
    for (double v : C02.apply(ones)) CHECK(v == Catch::Approx(1.0).margin(1e-15));
    CHECK_THROWS_AS(prolongation_chain(h, 2, 1), std::invalid_argument);
}

TEST_CASE("nodal averaging is L2 stable with level-independent constant") {
    Torus torus;
    const auto h = build_hierarchy<2>(torus, initial_mesh_torus(), 4);
    double prev = 0.0;
    for (int level = 1; level <= 3; ++level) {
        const auto& mesh = h.true_meshes[level];
        const auto Av = nodal_averaging(mesh);
        const auto Mdg = assemble_mass(mesh, make_dofmap(mesh, Discretization::dg));
        const auto Mp1 = assemble_mass(mesh, make_dofmap(mesh, Discretization::p1));
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const Vector v = st::random_vector(Av.source_dofs, 40 + t);
            const Vector av = Av.apply(v);
            const double num = std::sqrt(dot(av, Mp1.apply(av)));
            const double den = std::sqrt(dot(v, Mdg.apply(v)));
            worst = std::max(worst, num / den);
        }
        if (level > 1) CHECK(worst <= prev * 1.10);
        prev = worst;
    }
}

TEST_CASE("averaging approximation bound has a level-independent constant") {
    Torus torus;
    const auto h = build_hierarchy<2>(torus, initial_mesh_torus(), 4);
    double prev = 0.0;
    for (int level = 1; level <= 3; ++level) {
        const auto& mesh = h.true_meshes[level];
        const auto Av = nodal_averaging(mesh);
        const auto Inc = inclusion_dg(mesh);
        std::vector<CellGeometry<2>> geom(mesh.num_cells());
        for (int k = 0; k < mesh.num_cells(); ++k) geom[k] = cell_geometry(mesh, k);

        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const Vector v = st::random_vector(3 * mesh.num_cells(), 60 + t);
            const Vector diff = subtract(v, Inc.apply(Av.apply(v)));
            // lhs: sum_T h_T^-2 ||diff||_{L2(T)}^2 via the exact local mass
            double lhs = 0.0, broken_grad = 0.0;
            for (int k = 0; k < mesh.num_cells(); ++k) {
                const auto& g = geom[k];
                const auto mass = detail::local_mass_p1<2>(g.volume);
                double local = 0.0;
                Vec<3> grad{};
                for (int i = 0; i < 3; ++i) {
                    grad += v[3 * k + i] * g.bary_grad[i];
                    for (int j = 0; j < 3; ++j) local += diff[3 * k + i] * mass[i][j] * diff[3 * k + j];
                }
                lhs += local / (g.diameter * g.diameter);
                broken_grad += g.volume * dot(grad, grad);
            }
            // rhs: ||grad_h v||^2 + ||h^{-1/2} Q[v]||^2 over facets
            double jumps = 0.0;
            for (const auto& f : mesh.facets) {
                const double m = mean_jump<2>(mesh, v, f);
                jumps += facet_measure(mesh, f) / facet_diameter(mesh, f) * m * m;
            }
            worst = std::max(worst, std::sqrt(lhs / (broken_grad + jumps)));
        }
        if (level > 1) CHECK(worst <= prev * 1.10);
        prev = worst;
    }
}
