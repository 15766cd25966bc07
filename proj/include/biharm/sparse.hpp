#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace biharm {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

struct Triplet {
    int row;
    int col;
    double value;
};

class SparseMatrix;

// Coordinate accumulator; duplicates are summed on compression. Element
// loops push triplets in deterministic order, so the assembled matrix is
// reproducible bit for bit.
class TripletAccumulator {
public:
    TripletAccumulator(int nrows, int ncols) : nrows_(nrows), ncols_(ncols) {}

    void add(int row, int col, double value) {
        if (row < 0 || col < 0) return; // eliminated dof
        entries_.push_back({row, col, value});
    }

    SparseMatrix compress() const;

    int nrows() const { return nrows_; }
    int ncols() const { return ncols_; }

private:
    int nrows_;
    int ncols_;
    std::vector<Triplet> entries_;
};

class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(int nrows, int ncols, std::vector<int> offsets, std::vector<int> cols,
                 std::vector<double> vals)
        : nrows_(nrows), ncols_(ncols), row_offsets_(std::move(offsets)),
          cols_(std::move(cols)), vals_(std::move(vals)) {}

    static SparseMatrix identity(int n) {
        std::vector<int> off(n + 1), cols(n);
        std::vector<double> vals(n, 1.0);
        for (int i = 0; i <= n; ++i) off[i] = i;
        std::iota(cols.begin(), cols.end(), 0);
        return SparseMatrix(n, n, std::move(off), std::move(cols), std::move(vals));
    }

    int rows() const { return nrows_; }
    int cols() const { return ncols_; }
    std::size_t nnz() const { return vals_.size(); }
    const std::vector<int>& row_offsets() const { return row_offsets_; }
    const std::vector<int>& col_indices() const { return cols_; }
    const std::vector<double>& values() const { return vals_; }

    void multiply(const Vector& x, Vector& y) const {
        if (static_cast<int>(x.size()) != ncols_)
            throw std::invalid_argument("spmv: dimension mismatch");
        y.assign(nrows_, 0.0);
        for (int i = 0; i < nrows_; ++i) {
            double s = 0.0;
            for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
                s += vals_[k] * x[cols_[k]];
            y[i] = s;
        }
    }

    Vector multiply(const Vector& x) const {
        Vector y;
        multiply(x, y);
        return y;
    }

    double quadratic_form(const Vector& x) const { return biharm::dot(x, multiply(x)); }

    double coeff(int row, int col) const {
        for (int k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k)
            if (cols_[k] == col) return vals_[k];
        return 0.0;
    }

    Vector diagonal() const {
        Vector d(nrows_, 0.0);
        for (int i = 0; i < nrows_; ++i) d[i] = coeff(i, i);
        return d;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : vals_) m = std::max(m, std::abs(v));
        return m;
    }

    // max_ij |A_ij - A_ji|, for symmetry checks.
    double symmetry_defect() const {
        double m = 0.0;
        for (int i = 0; i < nrows_; ++i)
            for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
                m = std::max(m, std::abs(vals_[k] - coeff(cols_[k], i)));
        return m;
    }

    SparseMatrix scaled(double alpha) const {
        SparseMatrix out = *this;
        for (double& v : out.vals_) v *= alpha;
        return out;
    }

    // this + alpha * other, pattern union.
    SparseMatrix add_scaled(const SparseMatrix& other, double alpha) const {
        if (nrows_ != other.nrows_ || ncols_ != other.ncols_)
            throw std::invalid_argument("add_scaled: dimension mismatch");
        TripletAccumulator acc(nrows_, ncols_);
        for (int i = 0; i < nrows_; ++i)
            for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
                acc.add(i, cols_[k], vals_[k]);
        for (int i = 0; i < other.nrows_; ++i)
            for (int k = other.row_offsets_[i]; k < other.row_offsets_[i + 1]; ++k)
                acc.add(i, other.cols_[k], alpha * other.vals_[k]);
        return acc.compress();
    }

    // Coordinate text dump: one `row col value` line per stored entry.
    void dump(std::ostream& os) const {
        os.precision(17);
        for (int i = 0; i < nrows_; ++i)
            for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
                os << i << ' ' << cols_[k] << ' ' << vals_[k] << '\n';
    }

private:
    int nrows_ = 0;
    int ncols_ = 0;
    std::vector<int> row_offsets_{0};
    std::vector<int> cols_;
    std::vector<double> vals_;
};

inline SparseMatrix TripletAccumulator::compress() const {
    std::vector<Triplet> sorted = entries_;
    // stable: duplicates are summed in insertion order, which keeps the
    // assembly bitwise deterministic and symmetric pairs exactly equal
    std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<int> offsets(nrows_ + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    cols.reserve(sorted.size());
    vals.reserve(sorted.size());
    std::size_t i = 0;
    for (int r = 0; r < nrows_; ++r) {
        while (i < sorted.size() && sorted[i].row == r) {
            int c = sorted[i].col;
            double v = 0.0;
            while (i < sorted.size() && sorted[i].row == r && sorted[i].col == c)
                v += sorted[i++].value;
            cols.push_back(c);
            vals.push_back(v);
        }
        offsets[r + 1] = static_cast<int>(cols.size());
    }
    return SparseMatrix(nrows_, ncols_, std::move(offsets), std::move(cols), std::move(vals));
}

struct SolverConfig {
    enum class Method { conjugate_gradient, sparse_cholesky };
    Method method = Method::conjugate_gradient;
    double tol = 1e-12; // relative to ||b||
    int max_iter = 200000;
};

class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Skyline Cholesky factorization for SPD matrices; fill stays inside the
// row envelope, so this is only economical for banded orderings.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const SparseMatrix& A, const std::string& label = "matrix") {
        n_ = A.rows();
        if (A.cols() != n_) throw std::invalid_argument("cholesky: matrix not square");
        first_.assign(n_, 0);
        for (int i = 0; i < n_; ++i) {
            int f = i;
            for (int k = A.row_offsets()[i]; k < A.row_offsets()[i + 1]; ++k)
                f = std::min(f, A.col_indices()[k]);
            first_[i] = f;
        }
        // column envelope must contain the row envelope of the transpose;
        // symmetric input makes them equal
        offset_.assign(n_ + 1, 0);
        for (int i = 0; i < n_; ++i) offset_[i + 1] = offset_[i] + (i - first_[i] + 1);
        data_.assign(offset_[n_], 0.0);
        for (int i = 0; i < n_; ++i)
            for (int k = A.row_offsets()[i]; k < A.row_offsets()[i + 1]; ++k) {
                int j = A.col_indices()[k];
                if (j <= i) at(i, j) = A.values()[k];
            }
        factorize(label);
    }

    void solve(const Vector& b, Vector& x) const {
        x = b;
        for (int i = 0; i < n_; ++i) {
            double s = x[i];
            for (int j = first_[i]; j < i; ++j) s -= at(i, j) * x[j];
            x[i] = s / at(i, i);
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double xi = x[i] / at(i, i);
            x[i] = xi;
            for (int j = first_[i]; j < i; ++j) x[j] -= at(i, j) * xi;
        }
    }

    std::size_t profile() const { return data_.size(); }

private:
    double& at(int i, int j) { return data_[offset_[i] + (j - first_[i])]; }
    double at(int i, int j) const { return data_[offset_[i] + (j - first_[i])]; }

    void factorize(const std::string& label) {
        for (int i = 0; i < n_; ++i) {
            for (int j = first_[i]; j < i; ++j) {
                double s = at(i, j);
                int lo = std::max(first_[i], first_[j]);
                for (int k = lo; k < j; ++k) s -= at(i, k) * at(j, k);
                at(i, j) = s / at(j, j);
            }
            double s = at(i, i);
            for (int k = first_[i]; k < i; ++k) s -= at(i, k) * at(i, k);
            if (s <= 0.0)
                throw SolverError("cholesky: " + label + " is not positive definite (pivot " +
                                  std::to_string(s) + " at row " + std::to_string(i) + ")");
            at(i, i) = std::sqrt(s);
        }
    }

    int n_ = 0;
    std::vector<int> first_;
    std::vector<std::size_t> offset_;
    std::vector<double> data_;
};

// Jacobi-preconditioned conjugate gradients. Convergence is declared on the
// recurrence residual and confirmed against the true residual; a solve that
// stalls at the double-precision floor eps * ||A|| ||x|| is accepted, since
// no backward-stable method can do better on such systems.
inline Vector solve_cg(const SparseMatrix& A, const Vector& b, const SolverConfig& cfg,
                       const std::string& label, const Vector* warm_start = nullptr) {
    const int n = A.rows();
    if (static_cast<int>(b.size()) != n)
        throw std::invalid_argument("solve_spd: dimension mismatch");

    Vector inv_diag = A.diagonal();
    for (double& d : inv_diag) {
        if (d <= 0.0) throw SolverError("solve_spd: " + label + " has a nonpositive diagonal entry");
        d = 1.0 / d;
    }

    const double bnorm = norm2(b);
    if (bnorm == 0.0) return Vector(n, 0.0);
    const double target = cfg.tol * bnorm;

    Vector x = warm_start ? *warm_start : Vector(n, 0.0);
    Vector r(n), z(n), p(n), Ap(n);
    A.multiply(x, Ap);
    for (int i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
    if (warm_start && norm2(r) > bnorm) {
        // a warm start worse than zero only leaves cancellation noise behind
        x.assign(n, 0.0);
        r = b;
    }

    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    double rnorm = norm2(r);
    double best = rnorm;
    int it = 0;
    int stalled = 0;
    bool hit_max_iter = false;

    while (rnorm > target) {
        if (it++ >= cfg.max_iter) {
            hit_max_iter = true;
            break;
        }
        A.multiply(p, Ap);
        double pAp = dot(p, Ap);
        if (pAp <= 0.0)
            throw SolverError("solve_spd: " + label + " is not positive definite (p'Ap = " +
                              std::to_string(pAp) + ")");
        double alpha = rz / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rnorm = norm2(r);
        if (it % 50 == 0) { // recompute against recurrence drift
            A.multiply(x, Ap);
            for (int i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
            rnorm = norm2(r);
            for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            rz = dot(r, z);
            p = z;
        }
        if (rnorm < 0.5 * best) {
            best = rnorm;
            stalled = 0;
        } else if (++stalled > 400) {
            break; // roundoff floor reached
        }
    }

    A.multiply(x, Ap);
    for (int i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
    double true_res = norm2(r);
    double row_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = A.row_offsets()[i]; k < A.row_offsets()[i + 1]; ++k)
            s += std::abs(A.values()[k]);
        row_sum = std::max(row_sum, s);
    }
    const double floor = 100.0 * 2.2e-16 * (row_sum * norm2(x) + bnorm);
    if (true_res <= std::max(10.0 * target, floor)) return x;
    if (hit_max_iter)
        throw SolverError("solve_spd: " + label + " CG did not converge in " +
                          std::to_string(cfg.max_iter) + " iterations (residual " +
                          std::to_string(true_res / bnorm) + " relative)");
    throw SolverError("solve_spd: " + label + " true residual " +
                      std::to_string(true_res / bnorm) + " exceeds tolerance");
}

inline Vector solve_spd(const SparseMatrix& A, const Vector& b, const SolverConfig& cfg = {},
                        const std::string& label = "matrix", const Vector* warm_start = nullptr) {
    if (cfg.method == SolverConfig::Method::sparse_cholesky) {
        CholeskyFactor fac(A, label);
        Vector x;
        fac.solve(b, x);
        return x;
    }
    return solve_cg(A, b, cfg, label, warm_start);
}

// MINRES for symmetric, possibly indefinite systems, run on the symmetric
// diagonal rescaling D^{-1/2} A D^{-1/2}. Sub-threshold penalty choices
// leave the dG stiffness with a few slightly negative eigenvalues; this
// keeps those configurations solvable (CG and Cholesky reject them).
inline Vector solve_minres(const SparseMatrix& A_raw, const Vector& b_raw,
                           const SolverConfig& cfg = {}, const std::string& label = "matrix",
                           const Vector* warm_start_raw = nullptr) {
    const int n = A_raw.rows();
    if (static_cast<int>(b_raw.size()) != n)
        throw std::invalid_argument("solve_minres: dimension mismatch");

    Vector scale = A_raw.diagonal();
    for (double& d : scale) d = d != 0.0 ? 1.0 / std::sqrt(std::abs(d)) : 1.0;
    TripletAccumulator acc(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = A_raw.row_offsets()[i]; k < A_raw.row_offsets()[i + 1]; ++k) {
            int j = A_raw.col_indices()[k];
            acc.add(i, j, scale[i] * A_raw.values()[k] * scale[j]);
        }
    const SparseMatrix A = acc.compress();
    Vector b(n);
    for (int i = 0; i < n; ++i) b[i] = scale[i] * b_raw[i];

    const double bnorm = norm2(b);
    if (bnorm == 0.0) return Vector(n, 0.0);
    const double target = cfg.tol * bnorm;

    Vector x(n, 0.0);
    if (warm_start_raw)
        for (int i = 0; i < n; ++i) x[i] = (*warm_start_raw)[i] / scale[i];
    Vector r(n);
    A.multiply(x, r);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    if (warm_start_raw && norm2(r) > bnorm) {
        x.assign(n, 0.0);
        r = b;
    }

    double beta = norm2(r);
    if (beta <= target) return x;
    Vector v(n), v_old(n, 0.0), w_old(n, 0.0), w_oold(n, 0.0), z(n);
    for (int i = 0; i < n; ++i) v[i] = r[i] / beta;
    double eta = beta;
    double c = 1.0, c_old = 1.0, s = 0.0, s_old = 0.0;

    double best = beta;
    int stalled = 0;
    for (int k = 0; k < cfg.max_iter; ++k) {
        A.multiply(v, z);
        double alpha = dot(v, z);
        for (int i = 0; i < n; ++i) z[i] -= alpha * v[i] + beta * v_old[i];
        double beta_new = norm2(z);

        double delta = c * alpha - c_old * s * beta;
        double rho1 = std::sqrt(delta * delta + beta_new * beta_new);
        double rho2 = s * alpha + c_old * c * beta;
        double rho3 = s_old * beta;
        if (rho1 == 0.0) break;
        double c_new = delta / rho1;
        double s_new = beta_new / rho1;

        for (int i = 0; i < n; ++i) {
            double w_new = (v[i] - rho3 * w_oold[i] - rho2 * w_old[i]) / rho1;
            x[i] += c_new * eta * w_new;
            w_oold[i] = w_old[i];
            w_old[i] = w_new;
        }
        eta = -s_new * eta;

        if (beta_new == 0.0) break;
        for (int i = 0; i < n; ++i) {
            double t = z[i] / beta_new;
            v_old[i] = v[i];
            v[i] = t;
        }
        beta = beta_new;
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;

        double rnorm = std::abs(eta);
        if (rnorm <= target) break;
        if (rnorm < 0.9 * best) {
            best = rnorm;
            stalled = 0;
        } else if (++stalled > 3000) {
            break; // indefinite tail no longer making progress
        }
    }

    A.multiply(x, r);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    double true_res = norm2(r);
    double row_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double srow = 0.0;
        for (int k = A.row_offsets()[i]; k < A.row_offsets()[i + 1]; ++k)
            srow += std::abs(A.values()[k]);
        row_sum = std::max(row_sum, srow);
    }
    const double floor = 100.0 * 2.2e-16 * (row_sum * norm2(x) + bnorm);
    if (true_res > std::max(10.0 * target, floor))
        throw SolverError("solve_minres: " + label + " residual " +
                          std::to_string(true_res / bnorm) + " exceeds tolerance");
    for (int i = 0; i < n; ++i) x[i] *= scale[i];
    return x;
}

// Largest eigenvalue of M^{-1} A by power iteration with Rayleigh quotients;
// A symmetric positive semidefinite, M SPD. Each step costs one mass solve.
inline double lambda_max_generalized(const SparseMatrix& A, const SparseMatrix& M, double tol,
                                     int max_iter = 20000) {
    const int n = A.rows();
    if (M.rows() != n || A.cols() != n || M.cols() != n)
        throw std::invalid_argument("lambda_max_generalized: dimension mismatch");

    SolverConfig mass_cfg;
    mass_cfg.tol = std::min(1e-12, 0.01 * tol);

    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(12.9898 * (i + 1)); // deterministic seed

    double lambda = 0.0;
    Vector Ax(n), Mx(n);
    for (int it = 0; it < max_iter; ++it) {
        A.multiply(x, Ax);
        M.multiply(x, Mx);
        double xAx = dot(x, Ax);
        double xMx = dot(x, Mx);
        double lambda_new = xAx / xMx;
        Vector y = solve_spd(M, Ax, mass_cfg, "mass matrix");
        double ynorm = norm2(y);
        if (ynorm == 0.0) return 0.0; // A x in the kernel; A is zero on this subspace
        for (int i = 0; i < n; ++i) x[i] = y[i] / ynorm;
        if (it > 3 && std::abs(lambda_new - lambda) <= tol * std::abs(lambda_new))
            return lambda_new;
        lambda = lambda_new;
    }
    throw SolverError("lambda_max_generalized: power iteration did not converge");
}

} // namespace biharm
