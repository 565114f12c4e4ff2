#pragma once

#include <Eigen/Dense>
#include <random>

#include "surfasp/linalg.hpp"
#include "surfasp/precond.hpp"

namespace surfasp::testing {

inline Eigen::MatrixXd to_dense(const SparseOperator& A) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    for (int i = 0; i < A.rows(); ++i) {
        auto cols = A.row_cols(i);
        auto vals = A.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) m(i, cols[k]) = vals[k];
    }
    return m;
}

/// Dense matrix of a preconditioner action, column by column.
inline Eigen::MatrixXd to_dense(const Preconditioner& B) {
    const int n = B.size();
    Eigen::MatrixXd m(n, n);
    for (int j = 0; j < n; ++j) {
        Vector e(n, 0.0);
        e[j] = 1.0;
        const Vector col = B.apply(e);
        for (int i = 0; i < n; ++i) m(i, j) = col[i];
    }
    return m;
}

inline Vector random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

/// Moore-Penrose solve of a symmetric positive semi-definite dense system.
inline Vector pinv_solve(const Eigen::MatrixXd& A, const Vector& b, double cutoff = 1e-10) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    const Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
    const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::VectorXd y = eig.eigenvectors().transpose() * bv;
    for (int i = 0; i < y.size(); ++i) {
        const double lam = eig.eigenvalues()(i);
        y(i) = std::abs(lam) > cutoff * scale ? y(i) / lam : 0.0;
    }
    const Eigen::VectorXd x = eig.eigenvectors() * y;
    return Vector(x.data(), x.data() + x.size());
}

/// Randomized SPD check for a preconditioner: symmetry of <Br,s> and
/// positivity of <Br,r> over `trials` random vectors (kernel-compatible ones
/// when a kernel is passed).
inline bool spd_check(const Preconditioner& B, int trials = 20, const Vector* kernel = nullptr,
                      unsigned seed = 99, double rel_tol = 1e-10) {
    const int n = B.size();
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    auto draw = [&] {
        Vector v(n);
        for (double& x : v) x = dist(rng);
        if (kernel) {
            const double t = dot(*kernel, v) / dot(*kernel, *kernel);
            axpy(-t, *kernel, v);
        }
        return v;
    };
    for (int t = 0; t < trials; ++t) {
        const Vector r = draw(), s = draw();
        const Vector br = B.apply(r), bs = B.apply(s);
        const double brs = dot(br, s), bsr = dot(bs, r), brr = dot(br, r);
        if (!(brr > 0.0)) return false;
        if (std::abs(brs - bsr) > rel_tol * std::max({std::abs(brs), std::abs(bsr), 1e-300})) return false;
    }
    return true;
}

}  // namespace surfasp::testing
