#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace surfasp {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector subtract(const Vector& a, const Vector& b) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

struct Triplet {
    int row;
    int col;
    double value;
};

/// Compressed-row sparse matrix. Column indices are strictly increasing within
/// each row; symmetric operators store both triangles.
class SparseOperator {
public:
    SparseOperator() = default;

    static SparseOperator from_triplets(int nrows, int ncols, std::vector<Triplet> ts) {
        for (const Triplet& t : ts)
            if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
                throw std::invalid_argument("SparseOperator: triplet index out of range");
        std::stable_sort(ts.begin(), ts.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        SparseOperator A;
        A.nrows_ = nrows;
        A.ncols_ = ncols;
        A.row_ptr_.assign(nrows + 1, 0);
        A.col_idx_.reserve(ts.size());
        A.values_.reserve(ts.size());
        std::size_t i = 0;
        for (int row = 0; row < nrows; ++row) {
            while (i < ts.size() && ts[i].row == row) {
                const int col = ts[i].col;
                double v = 0.0;
                while (i < ts.size() && ts[i].row == row && ts[i].col == col) v += ts[i++].value;
                A.col_idx_.push_back(col);
                A.values_.push_back(v);
            }
            A.row_ptr_[row + 1] = static_cast<int>(A.col_idx_.size());
        }
        return A;
    }

    static SparseOperator identity(int n) {
        std::vector<Triplet> ts;
        ts.reserve(n);
        for (int i = 0; i < n; ++i) ts.push_back({i, i, 1.0});
        return from_triplets(n, n, std::move(ts));
    }

    int rows() const { return nrows_; }
    int cols() const { return ncols_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const int> row_cols(int i) const {
        return {col_idx_.data() + row_ptr_[i], col_idx_.data() + row_ptr_[i + 1]};
    }
    std::span<const double> row_vals(int i) const {
        return {values_.data() + row_ptr_[i], values_.data() + row_ptr_[i + 1]};
    }

    /// y = A x with left-to-right accumulation per row: bit-reproducible.
    Vector apply(const Vector& x) const {
        if (static_cast<int>(x.size()) != ncols_)
            throw std::invalid_argument("SparseOperator::apply: dimension mismatch");
        Vector y(nrows_, 0.0);
        for (int i = 0; i < nrows_; ++i) {
            double s = 0.0;
            for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
            y[i] = s;
        }
        return y;
    }

    SparseOperator transposed() const {
        std::vector<Triplet> ts;
        ts.reserve(nnz());
        for (int i = 0; i < nrows_; ++i)
            for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                ts.push_back({col_idx_[k], i, values_[k]});
        return from_triplets(ncols_, nrows_, std::move(ts));
    }

    Vector diagonal() const {
        Vector d(std::min(nrows_, ncols_), 0.0);
        for (int i = 0; i < static_cast<int>(d.size()); ++i) {
            const double* v = find(i, i);
            d[i] = v ? *v : 0.0;
        }
        return d;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// max_ij |A_ij - A_ji|, for symmetry checks.
    double max_asymmetry() const {
        if (nrows_ != ncols_) throw std::invalid_argument("max_asymmetry: matrix not square");
        double m = 0.0;
        for (int i = 0; i < nrows_; ++i)
            for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                const double* vt = find(col_idx_[k], i);
                m = std::max(m, std::abs(values_[k] - (vt ? *vt : 0.0)));
            }
        return m;
    }

    /// Triplet text export: header "nrows ncols nnz", then "i j v" lines.
    void write_triplets(std::ostream& os) const {
        os << nrows_ << ' ' << ncols_ << ' ' << nnz() << '\n';
        char buf[64];
        for (int i = 0; i < nrows_; ++i)
            for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, col_idx_[k], values_[k]);
                os << buf;
            }
    }

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    /// Pointer to A_ij if stored, nullptr otherwise.
    const double* find(int i, int j) const {
        const int* b = col_idx_.data() + row_ptr_[i];
        const int* e = col_idx_.data() + row_ptr_[i + 1];
        const int* it = std::lower_bound(b, e, j);
        if (it != e && *it == j) return values_.data() + (it - col_idx_.data());
        return nullptr;
    }

private:
    int nrows_ = 0;
    int ncols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

/// C = A B. Per-row sparse accumulation; touched columns are emitted in sorted
/// order, so the result is deterministic.
inline SparseOperator multiply(const SparseOperator& A, const SparseOperator& B) {
    if (A.cols() != B.rows()) throw std::invalid_argument("multiply: shape mismatch");
    std::vector<Triplet> ts;
    std::vector<double> acc(B.cols(), 0.0);
    std::vector<int> touched;
    for (int i = 0; i < A.rows(); ++i) {
        touched.clear();
        auto acols = A.row_cols(i);
        auto avals = A.row_vals(i);
        for (std::size_t k = 0; k < acols.size(); ++k) {
            const int mid = acols[k];
            const double a = avals[k];
            auto bcols = B.row_cols(mid);
            auto bvals = B.row_vals(mid);
            for (std::size_t l = 0; l < bcols.size(); ++l) {
                if (acc[bcols[l]] == 0.0) touched.push_back(bcols[l]);
                acc[bcols[l]] += a * bvals[l];
            }
        }
        std::sort(touched.begin(), touched.end());
        for (int j : touched) {
            ts.push_back({i, j, acc[j]});
            acc[j] = 0.0;
        }
    }
    return SparseOperator::from_triplets(A.rows(), B.cols(), std::move(ts));
}

/// P^T A P (Galerkin projection). Symmetric up to roundoff when A is.
inline SparseOperator triple_product(const SparseOperator& P, const SparseOperator& A) {
    if (A.rows() != A.cols() || A.cols() != P.rows())
        throw std::invalid_argument("triple_product: shape mismatch");
    return multiply(P.transposed(), multiply(A, P));
}

/// Dense Cholesky factorization of a sparse SPD matrix, or of an SPSD matrix
/// with a declared one-dimensional kernel. The kernel is handled by a rank-one
/// shift A + sigma k k^T, which is SPD and agrees with A on the complement of
/// k; solutions of compatible systems come out k-orthogonal.
class DenseFactorization {
public:
    DenseFactorization() = default;

    static DenseFactorization cholesky(const SparseOperator& A, const Vector& kernel = {}) {
        if (A.rows() != A.cols()) throw std::invalid_argument("dense_cholesky: matrix not square");
        const int n = A.rows();
        DenseFactorization f;
        f.n_ = n;
        f.kernel_ = kernel;
        std::vector<double>& m = f.lower_;
        m.assign(static_cast<std::size_t>(n) * n, 0.0);
        double trace = 0.0;
        for (int i = 0; i < n; ++i) {
            auto cols = A.row_cols(i);
            auto vals = A.row_vals(i);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                m[static_cast<std::size_t>(i) * n + cols[k]] = vals[k];
                if (cols[k] == i) trace += vals[k];
            }
        }
        if (!kernel.empty()) {
            if (static_cast<int>(kernel.size()) != n)
                throw std::invalid_argument("dense_cholesky: kernel dimension mismatch");
            const double kk = dot(kernel, kernel);
            if (kk == 0.0) throw std::invalid_argument("dense_cholesky: zero kernel vector");
            const double sigma = (trace > 0.0 ? trace : 1.0) / (n * kk);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    m[static_cast<std::size_t>(i) * n + j] += sigma * kernel[i] * kernel[j];
        }
        // in-place LL^T on the lower triangle
        for (int j = 0; j < n; ++j) {
            double pivot = m[static_cast<std::size_t>(j) * n + j];
            for (int k = 0; k < j; ++k) {
                const double l = m[static_cast<std::size_t>(j) * n + k];
                pivot -= l * l;
            }
            if (pivot <= 0.0)
                throw std::runtime_error("dense_cholesky: non-positive pivot at row " + std::to_string(j) +
                                         " (matrix indefinite beyond declared kernel)");
            const double d = std::sqrt(pivot);
            m[static_cast<std::size_t>(j) * n + j] = d;
            for (int i = j + 1; i < n; ++i) {
                double s = m[static_cast<std::size_t>(i) * n + j];
                for (int k = 0; k < j; ++k)
                    s -= m[static_cast<std::size_t>(i) * n + k] * m[static_cast<std::size_t>(j) * n + k];
                m[static_cast<std::size_t>(i) * n + j] = s / d;
            }
        }
        return f;
    }

    /// Solves A x = b. With a declared kernel, b must be kernel-compatible and
    /// the returned representative is kernel-orthogonal.
    Vector solve(const Vector& b) const {
        if (static_cast<int>(b.size()) != n_)
            throw std::invalid_argument("DenseFactorization::solve: dimension mismatch");
        Vector x(b);
        for (int i = 0; i < n_; ++i) {
            double s = x[i];
            for (int k = 0; k < i; ++k) s -= lower_[static_cast<std::size_t>(i) * n_ + k] * x[k];
            x[i] = s / lower_[static_cast<std::size_t>(i) * n_ + i];
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double s = x[i];
            for (int k = i + 1; k < n_; ++k) s -= lower_[static_cast<std::size_t>(k) * n_ + i] * x[k];
            x[i] = s / lower_[static_cast<std::size_t>(i) * n_ + i];
        }
        if (!kernel_.empty()) {
            const double t = dot(kernel_, x) / dot(kernel_, kernel_);
            axpy(-t, kernel_, x);
        }
        return x;
    }

    int size() const { return n_; }

private:
    int n_ = 0;
    std::vector<double> lower_;
    Vector kernel_;
};

inline DenseFactorization dense_cholesky(const SparseOperator& A, const Vector& kernel = {}) {
    return DenseFactorization::cholesky(A, kernel);
}

}  // namespace surfasp
