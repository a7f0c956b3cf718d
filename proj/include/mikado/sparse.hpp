#pragma once

// Sparse symmetric positive-definite systems: CSR storage, Crout ILUT
// (dual dropping) and ILU-preconditioned conjugate gradients.

#include <cstddef>
#include <span>
#include <vector>

namespace mikado {

/// Square CSR matrix with a structurally symmetric pattern, sorted column
/// indices and a positive diagonal in every row.
class SparseSym {
public:
    SparseSym() = default;
    SparseSym(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> col_idx,
              std::vector<double> values);

    /// Keeps every entry with |a_ij| > drop_below from a row-major dense matrix.
    static SparseSym from_dense(std::span<const double> dense, std::size_t n, double drop_below = 0.0);

    std::size_t n() const { return n_; }
    std::size_t nnz() const { return val_.size(); }
    std::span<const std::size_t> row_ptr() const { return ptr_; }
    std::span<const std::size_t> col_idx() const { return col_; }
    std::span<const double> values() const { return val_; }

    double diagonal(std::size_t i) const { return val_[diag_[i]]; }
    /// Entry (i, j), zero when not stored.
    double at(std::size_t i, std::size_t j) const;

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;

    std::vector<double> to_dense() const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> ptr_;
    std::vector<std::size_t> col_;
    std::vector<double> val_;
    std::vector<std::size_t> diag_;
};

/// A ~= L U with L unit lower triangular and U upper triangular.
struct ILUFactors {
    std::size_t n = 0;
    double drop_tol = 0.0;
    std::size_t fill_limit = 0;
    // strictly lower part of L, column-compressed
    std::vector<std::size_t> l_col_ptr;
    std::vector<std::size_t> l_row_idx;
    std::vector<double> l_val;
    // U including the diagonal, row-compressed; the diagonal is the first entry of each row
    std::vector<std::size_t> u_row_ptr;
    std::vector<std::size_t> u_col_idx;
    std::vector<double> u_val;

    /// z = (L U)^{-1} r; `z` may alias `r`.
    void apply(std::span<const double> r, std::span<double> z) const;

    std::size_t nnz() const { return l_val.size() + u_val.size(); }
    std::vector<double> dense_l() const;
    std::vector<double> dense_u() const;
};

/// Crout-ordered incomplete LU with dual dropping.
///
/// Step k forms row k of U and column k of L from the already finished rows of
/// U and columns of L. Off-diagonal entries smaller than drop_tol times the
/// 2-norm of row k (for U) or column k (for L) of A are dropped, then only the
/// fill_limit - 1 largest off-diagonals are kept, so every row of U and every
/// column of L (counting the diagonal) holds at most fill_limit entries.
/// Throws FactorizationError carrying the row index on a non-positive pivot.
ILUFactors crout_ilut(const SparseSym& A, double drop_tol, std::size_t fill_limit);

struct CGConfig {
    double rel_tol = 1e-2;
    std::size_t max_iter = 500;
    void validate() const;
};

struct SolveResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    double residual = 0.0;  // ||A x - b|| / ||b||, recomputed from x
};

/// Preconditioned conjugate gradients from x0 = 0. On success the true
/// relative residual is <= cfg.rel_tol; otherwise throws SolverError with the
/// last residual.
SolveResult pcg_solve(const SparseSym& A, std::span<const double> b, const ILUFactors& prec,
                      const CGConfig& cfg);

struct ILUTSettings {
    double drop_tol = 1e-3;
    std::size_t fill_limit = 1000;
    int max_retries = 3;
    void validate() const;
};

struct AdaptiveSolveResult {
    SolveResult solve;
    double drop_tol = 0.0;          // settings of the factorization that succeeded
    std::size_t fill_limit = 0;
    int retries = 0;
};

/// Factor + solve; on factorization or convergence failure, halves drop_tol
/// and doubles fill_limit, up to `ilut.max_retries` times.
AdaptiveSolveResult solve_spd(const SparseSym& A, std::span<const double> b,
                              const ILUTSettings& ilut, const CGConfig& cfg);

}  // namespace mikado
