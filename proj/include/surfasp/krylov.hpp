#pragma once

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "surfasp/linalg.hpp"
#include "surfasp/precond.hpp"

namespace surfasp {

/// Record of one PCG solve. residual_history holds relative 2-norm residuals
/// starting from iteration 0; preconditioned_history the <r, z> loop-guard
/// values (recorded for fidelity, not used as the stop test).
struct SolveReport {
    int iterations = 0;
    std::vector<double> residual_history;
    std::vector<double> preconditioned_history;
    bool converged = false;
    double wall_time = 0.0;
    /// max over iterations of |kernel . r_k| (0 when no kernel is supplied)
    double max_kernel_residual = 0.0;
};

struct PcgOptions {
    double tol = 1e-6;  // relative unpreconditioned 2-norm residual
    int max_iterations = 200;
};

struct PcgResult {
    Vector solution;
    SolveReport report;
};

/// Preconditioned conjugate gradient for an SPSD operator with an SPD
/// preconditioner. The initial guess is zero, which makes the preconditioner
/// action exploitable as a linear operator in tests.
///
/// When a one-dimensional kernel is supplied (with its mass matrix), the load
/// must be kernel-compatible; residuals are re-projected after every update to
/// control rounding drift, and the returned representative is M-mean-free.
/// A non-positive <r, z> is a preconditioner bug and raises an error; running
/// out of iterations returns a non-converged report instead.
inline PcgResult pcg_solve(const SparseOperator& A, const Preconditioner& B, const Vector& b,
                           const PcgOptions& opts = {}, const Vector& kernel = {},
                           const SparseOperator* M = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    if (A.rows() != static_cast<int>(b.size()))
        throw std::invalid_argument("pcg_solve: dimension mismatch");
    if (!kernel.empty() && M == nullptr)
        throw std::invalid_argument("pcg_solve: kernel handling needs the mass matrix");

    PcgResult out;
    SolveReport& rep = out.report;
    out.solution.assign(b.size(), 0.0);

    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        rep.converged = true;
        rep.residual_history.push_back(0.0);
        return out;
    }

    Vector mk;
    double kmk = 0.0;
    if (!kernel.empty()) {
        mk = M->apply(kernel);
        kmk = dot(mk, kernel);
    }
    // dual-side projection: r <- r - (k.r / k.Mk) Mk keeps k.r = 0
    auto project_residual = [&](Vector& r) {
        const double kr = dot(kernel, r);
        rep.max_kernel_residual = std::max(rep.max_kernel_residual, std::abs(kr));
        axpy(-kr / kmk, mk, r);
    };

    Vector r = b;
    if (!kernel.empty()) project_residual(r);
    double rel = norm2(r) / bnorm;
    rep.residual_history.push_back(rel);

    Vector z = B.apply(r);
    double rz = dot(r, z);
    rep.preconditioned_history.push_back(rz);
    if (!(rz > 0.0))
        throw std::runtime_error("pcg_solve: <r, z> <= 0 at iteration 0 (preconditioner not SPD)");
    Vector p = z;

    int k = 0;
    while (rel > opts.tol && k < opts.max_iterations) {
        const Vector Ap = A.apply(p);
        const double pAp = dot(p, Ap);
        if (!(pAp > 0.0))
            throw std::runtime_error("pcg_solve: |p|_A^2 <= 0 at iteration " + std::to_string(k) +
                                     " (operator not SPSD on the residual subspace)");
        const double alpha = rz / pAp;
        axpy(alpha, p, out.solution);
        axpy(-alpha, Ap, r);
        if (!kernel.empty()) project_residual(r);
        ++k;
        rel = norm2(r) / bnorm;
        rep.residual_history.push_back(rel);
        if (rel <= opts.tol) break;

        z = B.apply(r);
        const double rz_next = dot(r, z);
        rep.preconditioned_history.push_back(rz_next);
        if (!(rz_next > 0.0))
            throw std::runtime_error("pcg_solve: <r, z> <= 0 at iteration " + std::to_string(k) +
                                     " (preconditioner not SPD)");
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }

    rep.iterations = k;
    rep.converged = rel <= opts.tol;
    if (!kernel.empty()) out.solution = kernel_project(std::move(out.solution), *M, kernel);
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct SpectrumEstimate {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool breakdown = false;
    int steps = 0;
};

namespace detail {

/// Number of eigenvalues of the symmetric tridiagonal (alpha, beta) below x
/// (Sturm sequence count).
inline int sturm_count(const std::vector<double>& alpha, const std::vector<double>& beta, double x) {
    int count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double b2 = i == 0 ? 0.0 : beta[i - 1] * beta[i - 1];
        const double denom = q == 0.0 ? 1e-300 : q;
        q = alpha[i] - x - b2 / denom;
        if (q < 0.0) ++count;
    }
    return count;
}

/// k-th smallest eigenvalue (0-based) of the symmetric tridiagonal by bisection.
inline double tridiag_eigenvalue(const std::vector<double>& alpha, const std::vector<double>& beta, int k) {
    double lo = alpha[0], hi = alpha[0];
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double r = (i > 0 ? std::abs(beta[i - 1]) : 0.0) + (i < beta.size() ? std::abs(beta[i]) : 0.0);
        lo = std::min(lo, alpha[i] - r);
        hi = std::max(hi, alpha[i] + r);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(alpha, beta, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Extreme Ritz values of the preconditioned operator B A (restricted to the
/// complement of the kernel when one is given), via the Lanczos process in the
/// B-induced inner product with full reorthogonalization. Deterministic for a
/// fixed seed. On early breakdown the current estimates are returned flagged.
inline SpectrumEstimate lanczos_extremes(const SparseOperator& A, const Preconditioner& B, int steps,
                                         const Vector& kernel = {}, unsigned seed = 0x5eed) {
    const int n = A.rows();
    if (steps < 1) throw std::invalid_argument("lanczos_extremes: steps must be >= 1");
    const int max_steps = std::min(steps, kernel.empty() ? n : n - 1);

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    auto project_dual = [&](Vector& r) {
        if (kernel.empty()) return;
        const double t = dot(kernel, r) / dot(kernel, kernel);
        axpy(-t, kernel, r);
    };

    Vector r(n);
    for (double& v : r) v = dist(rng);
    project_dual(r);

    std::vector<Vector> rbasis, zbasis;
    std::vector<double> alpha, beta;

    Vector z = B.apply(r);
    double rz = dot(r, z);
    if (!(rz > 0.0)) throw std::runtime_error("lanczos_extremes: preconditioner not SPD on start vector");
    double nb = std::sqrt(rz);
    for (double& v : r) v /= nb;
    for (double& v : z) v /= nb;

    SpectrumEstimate est;
    for (int j = 0; j < max_steps; ++j) {
        rbasis.push_back(r);
        zbasis.push_back(z);
        Vector w = A.apply(z);
        project_dual(w);
        const double a = dot(w, z);
        alpha.push_back(a);
        axpy(-a, rbasis[j], w);
        if (j > 0) axpy(-beta[j - 1], rbasis[j - 1], w);
        // full reorthogonalization in the B-inner product
        for (std::size_t i = 0; i < rbasis.size(); ++i) {
            const double c = dot(w, zbasis[i]);
            axpy(-c, rbasis[i], w);
        }
        Vector zw = B.apply(w);
        const double wz = dot(w, zw);
        est.steps = j + 1;
        if (!(wz > 1e-28)) {
            est.breakdown = true;
            break;
        }
        const double bnext = std::sqrt(wz);
        if (j + 1 < max_steps) {
            beta.push_back(bnext);
            for (double& v : w) v /= bnext;
            for (double& v : zw) v /= bnext;
            r = std::move(w);
            z = std::move(zw);
        }
    }
    if (alpha.empty()) throw std::runtime_error("lanczos_extremes: no Lanczos steps completed");
    std::vector<double> bt(beta.begin(), beta.begin() + (alpha.size() - 1));
    est.lambda_min = detail::tridiag_eigenvalue(alpha, bt, 0);
    est.lambda_max = detail::tridiag_eigenvalue(alpha, bt, static_cast<int>(alpha.size()) - 1);
    return est;
}

}  // namespace surfasp
