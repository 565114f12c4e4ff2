#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "surfasp/assembly.hpp"
#include "surfasp/linalg.hpp"
#include "surfasp/mesh.hpp"
#include "surfasp/transfer.hpp"

namespace surfasp {

enum class KernelPolicy { none, project_mean };

/// Removes the M-weighted mean: v - (k^T M v / k^T M k) k. The result is
/// M-orthogonal to the kernel vector.
inline Vector kernel_project(Vector v, const SparseOperator& M, const Vector& kernel) {
    if (kernel.empty() || dot(kernel, kernel) == 0.0)
        throw std::invalid_argument("kernel_project: zero kernel vector");
    const Vector mk = M.apply(kernel);
    const double t = dot(mk, v) / dot(mk, kernel);
    axpy(-t, kernel, v);
    return v;
}

/// An action r -> z that must behave as an SPD operator (checked by the
/// randomized symmetry/positivity tests). Preconditioners for semi-definite
/// targets declare the project-mean kernel policy and return mean-free
/// representatives.
class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual Vector apply(const Vector& r) const = 0;
    virtual int size() const = 0;
    virtual KernelPolicy kernel_policy() const { return KernelPolicy::none; }
};

/// z_i = r_i / A_ii.
inline Vector jacobi_apply(const SparseOperator& A, const Vector& r) {
    const Vector d = A.diagonal();
    Vector z(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(d[i] > 0.0))
            throw std::runtime_error("jacobi_apply: non-positive diagonal at row " + std::to_string(i));
        z[i] = r[i] / d[i];
    }
    return z;
}

enum class SweepDirection { forward, backward };

/// Solves (D + L) z = r (forward) or (D + L^T) z = r (backward) by
/// substitution in ascending/descending dof order.
inline Vector gauss_seidel_sweep(const SparseOperator& A, const Vector& r, SweepDirection dir) {
    const int n = A.rows();
    Vector z(n, 0.0);
    if (dir == SweepDirection::forward) {
        for (int i = 0; i < n; ++i) {
            double s = r[i];
            double diag = 0.0;
            auto cols = A.row_cols(i);
            auto vals = A.row_vals(i);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                if (cols[k] < i)
                    s -= vals[k] * z[cols[k]];
                else if (cols[k] == i)
                    diag = vals[k];
            }
            if (!(diag > 0.0))
                throw std::runtime_error("gauss_seidel_sweep: non-positive diagonal at row " + std::to_string(i));
            z[i] = s / diag;
        }
    } else {
        for (int i = n - 1; i >= 0; --i) {
            double s = r[i];
            double diag = 0.0;
            auto cols = A.row_cols(i);
            auto vals = A.row_vals(i);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                if (cols[k] > i)
                    s -= vals[k] * z[cols[k]];
                else if (cols[k] == i)
                    diag = vals[k];
            }
            if (!(diag > 0.0))
                throw std::runtime_error("gauss_seidel_sweep: non-positive diagonal at row " + std::to_string(i));
            z[i] = s / diag;
        }
    }
    return z;
}

enum class SmootherKind { jacobi, forward_gs, backward_gs, symmetric_gs };

/// A relaxation acting on residuals with zero initial guess. Multiple sweeps
/// re-apply the relaxation to the updated residual.
struct Smoother {
    SmootherKind kind = SmootherKind::jacobi;
    const SparseOperator* op = nullptr;
    int sweeps = 1;

    Vector apply(const Vector& r) const {
        Vector u(r.size(), 0.0);
        for (int s = 0; s < sweeps; ++s) {
            const Vector res = s == 0 ? r : subtract(r, op->apply(u));
            Vector correction;
            switch (kind) {
                case SmootherKind::jacobi: correction = jacobi_apply(*op, res); break;
                case SmootherKind::forward_gs:
                    correction = gauss_seidel_sweep(*op, res, SweepDirection::forward);
                    break;
                case SmootherKind::backward_gs:
                    correction = gauss_seidel_sweep(*op, res, SweepDirection::backward);
                    break;
                case SmootherKind::symmetric_gs: {
                    correction = gauss_seidel_sweep(*op, res, SweepDirection::forward);
                    const Vector res2 = subtract(res, op->apply(correction));
                    Vector back = gauss_seidel_sweep(*op, res2, SweepDirection::backward);
                    axpy(1.0, back, correction);
                    break;
                }
            }
            axpy(1.0, correction, u);
        }
        return u;
    }
};

/// Per-level SPD operators on the nested reference hierarchy (always the
/// c = 1 form on M0), their diagonals, nodal prolongations/restrictions, and
/// an exact factorization of the coarsest operator.
struct MultilevelOperators {
    std::vector<SparseOperator> ops;
    std::vector<Vector> diags;
    std::vector<SparseOperator> prolongations;  // [j]: j -> j+1
    std::vector<SparseOperator> restrictions;   // transposes of the above
    DenseFactorization coarse_solver;

    int top_level() const { return static_cast<int>(ops.size()) - 1; }
};

/// Assembles the auxiliary P1 operators on reference levels 0..top_level.
/// Each level is assembled directly on its reference mesh; the Galerkin
/// identity A_j = P^T A_{j+1} P then holds by nestedness and is checked in the
/// test suite rather than used as the construction.
template <int D>
MultilevelOperators make_reference_operators(const MeshHierarchy<D>& hierarchy, int top_level = -1) {
    if (top_level < 0) top_level = hierarchy.top_level();
    if (top_level >= hierarchy.num_levels())
        throw std::invalid_argument("make_reference_operators: level beyond hierarchy");
    MultilevelOperators ml;
    for (int j = 0; j <= top_level; ++j) {
        ml.ops.push_back(assemble_p1(hierarchy.reference_meshes[j], /*c=*/1));
        ml.diags.push_back(ml.ops.back().diagonal());
    }
    for (int j = 0; j < top_level; ++j) {
        ml.prolongations.push_back(hierarchy.prolongations[j]);
        ml.restrictions.push_back(hierarchy.prolongations[j].transposed());
    }
    ml.coarse_solver = dense_cholesky(ml.ops[0]);
    return ml;
}

/// Additive multilevel action: diagonal scaling of the restricted residual on
/// every level plus an exact solve on the coarsest.
inline Vector bpx_apply(const MultilevelOperators& ml, const Vector& r, int level = -1) {
    if (level < 0) level = ml.top_level();
    if (level > ml.top_level()) throw std::invalid_argument("bpx_apply: missing levels");
    std::vector<Vector> res(level + 1);
    res[level] = r;
    for (int j = level; j > 0; --j) res[j - 1] = ml.restrictions[j - 1].apply(res[j]);
    Vector z = ml.coarse_solver.solve(res[0]);
    for (int j = 1; j <= level; ++j) {
        z = ml.prolongations[j - 1].apply(z);
        const Vector& d = ml.diags[j];
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += res[j][i] / d[i];
    }
    return z;
}

/// One symmetric V-cycle with zero initial guess: forward Gauss-Seidel
/// pre-smoothing on the way down, exact coarsest solve, backward Gauss-Seidel
/// post-smoothing on the way up. Linear and SPD in r.
inline Vector vcycle_apply(const MultilevelOperators& ml, const Vector& r, int smoothing_steps = 2,
                           int level = -1) {
    if (level < 0) level = ml.top_level();
    if (level > ml.top_level()) throw std::invalid_argument("vcycle_apply: missing levels");
    if (level == 0) return ml.coarse_solver.solve(r);
    const SparseOperator& A = ml.ops[level];
    Vector u = gauss_seidel_sweep(A, r, SweepDirection::forward);
    for (int s = 1; s < smoothing_steps; ++s) {
        const Vector res = subtract(r, A.apply(u));
        axpy(1.0, gauss_seidel_sweep(A, res, SweepDirection::forward), u);
    }
    {
        const Vector res = ml.restrictions[level - 1].apply(subtract(r, A.apply(u)));
        const Vector correction = vcycle_apply(ml, res, smoothing_steps, level - 1);
        axpy(1.0, ml.prolongations[level - 1].apply(correction), u);
    }
    for (int s = 0; s < smoothing_steps; ++s) {
        const Vector res = subtract(r, A.apply(u));
        axpy(1.0, gauss_seidel_sweep(A, res, SweepDirection::backward), u);
    }
    return u;
}

enum class CycleKind { additive, multiplicative };

/// Surface preconditioner B = Pi B_hat Pi': a multilevel preconditioner for
/// the always-SPD auxiliary operator on the reference hierarchy, transferred
/// through the (identity) nodal correspondence. With the project-mean policy
/// the output is reduced to its M-mean-free representative, matching a
/// semi-definite target operator.
class FaspSurfacePreconditioner final : public Preconditioner {
public:
    FaspSurfacePreconditioner(std::shared_ptr<const MultilevelOperators> ml, CycleKind kind, int level,
                              int smoothing_steps, TransferOperator transfer,
                              KernelPolicy policy = KernelPolicy::none, SparseOperator mass = {},
                              Vector kernel = {})
        : ml_(std::move(ml)),
          kind_(kind),
          level_(level),
          smoothing_steps_(smoothing_steps),
          transfer_(std::move(transfer)),
          transfer_t_(transfer_.matrix.transposed()),
          policy_(policy),
          mass_(std::move(mass)),
          kernel_(std::move(kernel)) {}

    Vector apply(const Vector& r) const override {
        Vector rhat = transfer_t_.apply(r);
        Vector zhat = kind_ == CycleKind::additive ? bpx_apply(*ml_, rhat, level_)
                                                   : vcycle_apply(*ml_, rhat, smoothing_steps_, level_);
        Vector z = transfer_.matrix.apply(zhat);
        if (policy_ == KernelPolicy::project_mean) z = kernel_project(std::move(z), mass_, kernel_);
        return z;
    }

    int size() const override { return transfer_.target_dofs; }
    KernelPolicy kernel_policy() const override { return policy_; }

private:
    std::shared_ptr<const MultilevelOperators> ml_;
    CycleKind kind_;
    int level_;
    int smoothing_steps_;
    TransferOperator transfer_;
    SparseOperator transfer_t_;
    KernelPolicy policy_;
    SparseOperator mass_;
    Vector kernel_;
};

/// Convenience factory assembling the reference operators for one hierarchy
/// level. For repeated use across levels build MultilevelOperators once and
/// construct FaspSurfacePreconditioner directly.
template <int D>
std::shared_ptr<Preconditioner> make_fasp_surface(const MeshHierarchy<D>& hierarchy, CycleKind kind,
                                                  int level = -1, int smoothing_steps = 2,
                                                  KernelPolicy policy = KernelPolicy::none,
                                                  SparseOperator mass = {}, Vector kernel = {}) {
    if (level < 0) level = hierarchy.top_level();
    auto ml = std::make_shared<MultilevelOperators>(make_reference_operators(hierarchy, level));
    return std::make_shared<FaspSurfacePreconditioner>(std::move(ml), kind, level, smoothing_steps,
                                                       surface_transfer_p1(hierarchy, level), policy,
                                                       std::move(mass), std::move(kernel));
}

/// Two-level additive preconditioner z = S r + I B_coarse (I^T r) with a
/// Jacobi smoother taken from the SPD (c = 1) fine operator.
class TwoLevelAdditivePreconditioner final : public Preconditioner {
public:
    TwoLevelAdditivePreconditioner(const SparseOperator& fine_spd, TransferOperator inclusion,
                                   std::shared_ptr<const Preconditioner> coarse,
                                   KernelPolicy policy = KernelPolicy::none, SparseOperator mass = {},
                                   Vector kernel = {})
        : diag_(fine_spd.diagonal()),
          inclusion_(std::move(inclusion)),
          inclusion_t_(inclusion_.matrix.transposed()),
          coarse_(std::move(coarse)),
          policy_(policy),
          mass_(std::move(mass)),
          kernel_(std::move(kernel)) {
        for (double d : diag_)
            if (!(d > 0.0)) throw std::invalid_argument("two-level additive: smoother needs a positive diagonal");
    }

    Vector apply(const Vector& r) const override {
        Vector z(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / diag_[i];
        const Vector coarse = coarse_->apply(inclusion_t_.apply(r));
        axpy(1.0, inclusion_.matrix.apply(coarse), z);
        if (policy_ == KernelPolicy::project_mean) z = kernel_project(std::move(z), mass_, kernel_);
        return z;
    }

    int size() const override { return inclusion_.target_dofs; }
    KernelPolicy kernel_policy() const override { return policy_; }

private:
    Vector diag_;
    TransferOperator inclusion_;
    SparseOperator inclusion_t_;
    std::shared_ptr<const Preconditioner> coarse_;
    KernelPolicy policy_;
    SparseOperator mass_;
    Vector kernel_;
};

/// Two-level multiplicative preconditioner with zero initial guess: forward
/// Gauss-Seidel pre-smoothing, a coarse correction through the inclusion, and
/// backward Gauss-Seidel post-smoothing, all on the SPD (c = 1) fine operator.
/// The transpose pairing of the sweeps makes the action symmetric.
class TwoLevelMultiplicativePreconditioner final : public Preconditioner {
public:
    TwoLevelMultiplicativePreconditioner(SparseOperator fine_spd, TransferOperator inclusion,
                                         std::shared_ptr<const Preconditioner> coarse,
                                         int smoother_steps = 2, KernelPolicy policy = KernelPolicy::none,
                                         SparseOperator mass = {}, Vector kernel = {})
        : fine_(std::move(fine_spd)),
          inclusion_(std::move(inclusion)),
          inclusion_t_(inclusion_.matrix.transposed()),
          coarse_(std::move(coarse)),
          steps_(smoother_steps),
          policy_(policy),
          mass_(std::move(mass)),
          kernel_(std::move(kernel)) {}

    Vector apply(const Vector& g) const override {
        Vector u = gauss_seidel_sweep(fine_, g, SweepDirection::forward);
        for (int s = 1; s < steps_; ++s) {
            const Vector res = subtract(g, fine_.apply(u));
            axpy(1.0, gauss_seidel_sweep(fine_, res, SweepDirection::forward), u);
        }
        {
            const Vector res = inclusion_t_.apply(subtract(g, fine_.apply(u)));
            axpy(1.0, inclusion_.matrix.apply(coarse_->apply(res)), u);
        }
        for (int s = 0; s < steps_; ++s) {
            const Vector res = subtract(g, fine_.apply(u));
            axpy(1.0, gauss_seidel_sweep(fine_, res, SweepDirection::backward), u);
        }
        if (policy_ == KernelPolicy::project_mean) u = kernel_project(std::move(u), mass_, kernel_);
        return u;
    }

    int size() const override { return inclusion_.target_dofs; }
    KernelPolicy kernel_policy() const override { return policy_; }

private:
    SparseOperator fine_;
    TransferOperator inclusion_;
    SparseOperator inclusion_t_;
    std::shared_ptr<const Preconditioner> coarse_;
    int steps_;
    KernelPolicy policy_;
    SparseOperator mass_;
    Vector kernel_;
};

/// Jacobi preconditioner (diagonal scaling).
class JacobiPreconditioner final : public Preconditioner {
public:
    explicit JacobiPreconditioner(const SparseOperator& A, KernelPolicy policy = KernelPolicy::none,
                                  SparseOperator mass = {}, Vector kernel = {})
        : diag_(A.diagonal()), policy_(policy), mass_(std::move(mass)), kernel_(std::move(kernel)) {
        for (std::size_t i = 0; i < diag_.size(); ++i)
            if (!(diag_[i] > 0.0))
                throw std::invalid_argument("JacobiPreconditioner: non-positive diagonal at row " +
                                            std::to_string(i));
    }

    Vector apply(const Vector& r) const override {
        Vector z(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / diag_[i];
        if (policy_ == KernelPolicy::project_mean) z = kernel_project(std::move(z), mass_, kernel_);
        return z;
    }

    int size() const override { return static_cast<int>(diag_.size()); }
    KernelPolicy kernel_policy() const override { return policy_; }

private:
    Vector diag_;
    KernelPolicy policy_;
    SparseOperator mass_;
    Vector kernel_;
};

/// Exact solve wrapped as a preconditioner (used for coarsest levels and as a
/// reference in tests).
class ExactPreconditioner final : public Preconditioner {
public:
    explicit ExactPreconditioner(DenseFactorization f) : factorization_(std::move(f)) {}
    Vector apply(const Vector& r) const override { return factorization_.solve(r); }
    int size() const override { return factorization_.size(); }

private:
    DenseFactorization factorization_;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    explicit IdentityPreconditioner(int n) : n_(n) {}
    Vector apply(const Vector& r) const override { return r; }
    int size() const override { return n_; }

private:
    int n_;
};

}  // namespace surfasp
