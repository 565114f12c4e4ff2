#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "surfasp/precond.hpp"
#include "surfasp/krylov.hpp"
#include "test_helpers.hpp"

using namespace surfasp;
namespace st = surfasp::testing;

namespace {

class ZeroPreconditioner final : public Preconditioner {
public:
    explicit ZeroPreconditioner(int n) : n_(n) {}
    Vector apply(const Vector& r) const override { return Vector(r.size(), 0.0); }
    int size() const override { return n_; }

private:
    int n_;
};

/// Power iteration for the dominant |eigenvalue| of E = I - B A in the
/// A-inner product (A SPD).
double error_propagation_norm(const SparseOperator& A, const Preconditioner& B, int iters = 150) {
    Vector v = st::random_vector(A.rows(), 77);
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        const Vector Av = A.apply(v);
        Vector w = subtract(v, B.apply(Av));
        const Vector Aw = A.apply(w);
        lambda = dot(Aw, v) / dot(Av, v);
        const double nrm = std::sqrt(dot(Aw, w));
        for (double& x : w) x /= nrm;
        v = std::move(w);
    }
    return std::abs(lambda);
}

}  // namespace

TEST_CASE("jacobi action") {
    const auto A = SparseOperator::from_triplets(3, 3, {{0, 0, 2}, {1, 1, 2}, {2, 2, 2}});
    const Vector r = {2, -4, 6};
    CHECK(jacobi_apply(A, r) == Vector{1, -2, 3});
    const auto bad = SparseOperator::from_triplets(2, 2, {{0, 0, 1}, {1, 1, -1}});
    CHECK_THROWS_AS(jacobi_apply(bad, {1, 1}), std::runtime_error);
}

TEST_CASE("gauss-seidel sweeps") {
    SECTION("diagonal matrix reduces to jacobi") {
        const auto A = SparseOperator::from_triplets(2, 2, {{0, 0, 4}, {1, 1, 8}});
        CHECK(gauss_seidel_sweep(A, {4, 8}, SweepDirection::forward) == Vector{1, 1});
        CHECK(gauss_seidel_sweep(A, {4, 8}, SweepDirection::backward) == Vector{1, 1});
    }
    SECTION("forward substitution") {
        const auto A = SparseOperator::from_triplets(2, 2, {{0, 0, 2}, {1, 0, -1}, {1, 1, 2}});
        CHECK(gauss_seidel_sweep(A, {2, 1}, SweepDirection::forward) == Vector{1, 1});
    }
    SECTION("forward followed by backward is a symmetric operator") {
        Torus torus;
        const auto mesh = project_mesh(torus, initial_mesh_torus());
        const auto A = assemble_p1(mesh, 1);
        Smoother sgs{SmootherKind::symmetric_gs, &A, 1};
        const int n = A.rows();
        Eigen::MatrixXd S(n, n);
        for (int j = 0; j < n; ++j) {
            Vector e(n, 0.0);
            e[j] = 1.0;
            const Vector col = sgs.apply(e);
            for (int i = 0; i < n; ++i) S(i, j) = col[i];
        }
        CHECK((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * S.cwiseAbs().maxCoeff());
        // symmetrized smoother of a convergent sweep is positive definite
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
        CHECK(eig.eigenvalues()(0) > 0.0);
    }
}

TEST_CASE("kernel projection") {
    const auto M = SparseOperator::from_triplets(3, 3, {{0, 0, 1}, {1, 1, 2}, {2, 2, 1}});
    const Vector kernel = {1, 1, 1};
    SECTION("kernel goes to zero") {
        for (double v : kernel_project(kernel, M, kernel)) CHECK(std::abs(v) <= 1e-15);
    }
    SECTION("mean-free input is unchanged and the map is idempotent") {
        Vector v = {1.0, -1.0, 1.0};  // M-mean: 1 - 2 + 1 = 0
        const Vector p = kernel_project(v, M, kernel);
        for (int i = 0; i < 3; ++i) CHECK(p[i] == Catch::Approx(v[i]).margin(1e-15));
        const Vector q = kernel_project(st::random_vector(3, 3), M, kernel);
        const Vector qq = kernel_project(q, M, kernel);
        for (int i = 0; i < 3; ++i) CHECK(qq[i] == Catch::Approx(q[i]).margin(1e-14));
        CHECK(std::abs(dot(M.apply(q), kernel)) <= 1e-13 * norm2(q));
    }
    SECTION("zero kernel is rejected") {
        CHECK_THROWS_AS(kernel_project({1, 2, 3}, M, Vector{0, 0, 0}), std::invalid_argument);
    }
}

TEST_CASE("bpx additive multilevel") {
    Torus torus;
    const auto h = build_hierarchy<2>(torus, initial_mesh_torus(), 5);
    const auto ml = std::make_shared<const MultilevelOperators>(make_reference_operators(h));

    SECTION("single level is the exact solve") {
        const Vector r = st::random_vector(ml->ops[0].rows(), 4);
        const Vector z = bpx_apply(*ml, r, 0);
        const Vector back = ml->ops[0].apply(z);
        for (std::size_t i = 0; i < r.size(); ++i) CHECK(back[i] == Catch::Approx(r[i]).margin(1e-10));
    }
    SECTION("symmetric positive definite action") {
        FaspSurfacePreconditioner B(ml, CycleKind::additive, 2, 2, surface_transfer_p1(h, 2));
        CHECK(st::spd_check(B));
    }
    SECTION("preconditioned condition number grows slowly with level") {
        double prev = 0.0;
        for (int level = 1; level <= 4; ++level) {
            const auto A = assemble_p1(h.true_meshes[level], 1);
            FaspSurfacePreconditioner B(ml, CycleKind::additive, level, 2, surface_transfer_p1(h, level));
            const auto est = lanczos_extremes(A, B, 40);
            const double kappa = est.lambda_max / est.lambda_min;
            if (level == 1) {
                // dense oracle at the coarsest solved level
                const Eigen::MatrixXd Bd = st::to_dense(B);
                Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(st::to_dense(A),
                                                                              Bd.inverse());
                const double kd = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
                CHECK(kappa == Catch::Approx(kd).epsilon(0.02));
            }
            if (level > 1) CHECK(kappa <= prev * 1.15);
            prev = kappa;
        }
    }
}

TEST_CASE("v-cycle multiplicative multilevel") {
    Torus torus;
    const auto h = build_hierarchy<2>(torus, initial_mesh_torus(), 4);
    const auto ml = std::make_shared<const MultilevelOperators>(make_reference_operators(h));

    SECTION("single level is the exact solve") {
        const Vector r = st::random_vector(ml->ops[0].rows(), 5);
        const Vector z = vcycle_apply(*ml, r, 2, 0);
        const Vector back = ml->ops[0].apply(z);
        for (std::size_t i = 0; i < r.size(); ++i) CHECK(back[i] == Catch::Approx(r[i]).margin(1e-10));
    }
    SECTION("action is linear") {
        const int n = ml->ops[2].rows();
        const Vector r1 = st::random_vector(n, 6), r2 = st::random_vector(n, 7);
        Vector sum(n);
        for (int i = 0; i < n; ++i) sum[i] = r1[i] + r2[i];
        const Vector z = vcycle_apply(*ml, sum, 2, 2);
        const Vector z1 = vcycle_apply(*ml, r1, 2, 2);
        const Vector z2 = vcycle_apply(*ml, r2, 2, 2);
        for (int i = 0; i < n; ++i) CHECK(z[i] == Catch::Approx(z1[i] + z2[i]).margin(1e-12 * norm2(z)));
    }
    SECTION("cycle contracts the reference operator") {
        for (int level = 2; level <= 3; ++level) {
            FaspSurfacePreconditioner B(ml, CycleKind::multiplicative, level, 2,
                                        surface_transfer_p1(h, level));
            CHECK(error_propagation_norm(ml->ops[level], B) < 1.0);
        }
    }
    SECTION("symmetric positive definite action") {
        FaspSurfacePreconditioner B(ml, CycleKind::multiplicative, 3, 2, surface_transfer_p1(h, 3));
        CHECK(st::spd_check(B));
    }
}

TEST_CASE("reference operators satisfy the Galerkin identity") {
    Torus torus;
    const auto h2 = build_hierarchy<2>(torus, initial_mesh_torus(), 3);
    const auto ml2 = make_reference_operators(h2);
    for (int j = 0; j + 1 < 3; ++j) {
        const auto G = triple_product(h2.prolongations[j], ml2.ops[j + 1]);
        CHECK((st::to_dense(G) - st::to_dense(ml2.ops[j])).cwiseAbs().maxCoeff() <=
              1e-12 * ml2.ops[j].max_abs());
    }
    UnitSphere<3> s3;
    const auto h3 = build_hierarchy<3>(s3, initial_mesh_s3(), 3);
    const auto ml3 = make_reference_operators(h3);
    for (int j = 0; j + 1 < 3; ++j) {
        const auto G = triple_product(h3.prolongations[j], ml3.ops[j + 1]);
        CHECK((st::to_dense(G) - st::to_dense(ml3.ops[j])).cwiseAbs().maxCoeff() <=
              1e-12 * ml3.ops[j].max_abs());
    }
}

TEST_CASE("fasp surface preconditioner") {
    UnitSphere<3> s3;
    const auto h = build_hierarchy<3>(s3, initial_mesh_s3(), 3);
    const auto ml = std::make_shared<const MultilevelOperators>(make_reference_operators(h));
    const int level = 2;
    const int n = h.true_meshes[level].num_vertices();

    SECTION("identity transfer makes the surface action equal the reference action") {
        FaspSurfacePreconditioner B(ml, CycleKind::multiplicative, level, 2, surface_transfer_p1(h, level));
        const Vector r = st::random_vector(n, 8);
        const Vector direct = vcycle_apply(*ml, r, 2, level);
        const Vector through = B.apply(r);
        for (int i = 0; i < n; ++i) CHECK(through[i] == Catch::Approx(direct[i]).margin(1e-15));
    }
    SECTION("project-mean policy yields mean-free SPD action on the compatible subspace") {
        const auto& mesh = h.true_meshes[level];
        const auto M = assemble_mass(mesh, make_dofmap(mesh, Discretization::p1));
        const Vector kernel(n, 1.0);
        FaspSurfacePreconditioner B(ml, CycleKind::multiplicative, level, 2, surface_transfer_p1(h, level),
                                    KernelPolicy::project_mean, M, kernel);
        CHECK(B.kernel_policy() == KernelPolicy::project_mean);
        CHECK(st::spd_check(B, 20, &kernel));
        const Vector z = B.apply(st::random_vector(n, 12));
        CHECK(std::abs(dot(M.apply(z), kernel)) <= 1e-12 * norm2(z) * dot(kernel, M.apply(kernel)));
    }
}

TEST_CASE("two-level additive preconditioner") {
    Torus torus;
    const auto mesh = project_mesh(torus, initial_mesh_torus());
    const auto A = assemble_cr(mesh, 1);
    const auto inclusion = inclusion_cr(mesh);

    SECTION("zero coarse map reduces to jacobi") {
        TwoLevelAdditivePreconditioner B(A, inclusion, std::make_shared<ZeroPreconditioner>(mesh.num_vertices()));
        const Vector r = st::random_vector(A.rows(), 13);
        const Vector z = B.apply(r);
        const Vector j = jacobi_apply(A, r);
        for (int i = 0; i < A.rows(); ++i) CHECK(z[i] == Catch::Approx(j[i]).margin(1e-15));
    }
    SECTION("symmetric positive definite with an exact coarse solve") {
        const auto coarse = std::make_shared<ExactPreconditioner>(dense_cholesky(assemble_p1(mesh, 1)));
        TwoLevelAdditivePreconditioner B(A, inclusion, coarse);
        CHECK(st::spd_check(B));
    }
}

TEST_CASE("two-level multiplicative preconditioner") {
    Torus torus;
    const auto mesh = project_mesh(torus, initial_mesh_torus());

    SECTION("identity inclusion with exact coarse inverse gives one-iteration pcg") {
        const auto A = assemble_cr(mesh, 1);
        TransferOperator identity{A.rows(), A.rows(), SparseOperator::identity(A.rows())};
        const auto coarse = std::make_shared<ExactPreconditioner>(dense_cholesky(A));
        TwoLevelMultiplicativePreconditioner B(A, identity, coarse, 2);
        const Vector b = st::random_vector(A.rows(), 14);
        const auto result = pcg_solve(A, B, b, {1e-12, 50});
        CHECK(result.report.converged);
        CHECK(result.report.iterations == 1);
    }
    SECTION("action is linear and contracts") {
        const auto h = build_hierarchy<2>(torus, initial_mesh_torus(), 3);
        const auto ml = std::make_shared<const MultilevelOperators>(make_reference_operators(h));
        const auto& m2 = h.true_meshes[2];
        const auto A = assemble_cr(m2, 1);
        const auto coarse = std::make_shared<FaspSurfacePreconditioner>(ml, CycleKind::multiplicative, 2, 2,
                                                                        surface_transfer_p1(h, 2));
        TwoLevelMultiplicativePreconditioner B(A, inclusion_cr(m2), coarse, 2);
        const int n = A.rows();
        const Vector r1 = st::random_vector(n, 15), r2 = st::random_vector(n, 16);
        Vector sum(n);
        for (int i = 0; i < n; ++i) sum[i] = r1[i] + r2[i];
        const Vector z = B.apply(sum), z1 = B.apply(r1), z2 = B.apply(r2);
        for (int i = 0; i < n; ++i) CHECK(z[i] == Catch::Approx(z1[i] + z2[i]).margin(1e-12 * norm2(z)));
        CHECK(error_propagation_norm(A, B) < 1.0);
        CHECK(st::spd_check(B));
    }
}
