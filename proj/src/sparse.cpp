#include "mikado/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "mikado/errors.hpp"

namespace mikado {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Sparse accumulator over one row or column of the factorization.
struct Accumulator {
    std::vector<double> value;
    std::vector<std::size_t> stamp;
    std::vector<std::size_t> touched;

    explicit Accumulator(std::size_t n) : value(n, 0.0), stamp(n, 0) {}

    void reset() { touched.clear(); }
    void add(std::size_t j, double v, std::size_t tag) {
        if (stamp[j] != tag) {
            stamp[j] = tag;
            value[j] = 0.0;
            touched.push_back(j);
        }
        value[j] += v;
    }
};

// Applies the threshold then the fill cap to the off-diagonal entries in
// `acc.touched` (all != pivot); returns the survivors sorted by index.
std::vector<std::pair<std::size_t, double>> drop_entries(const Accumulator& acc, double threshold,
                                                        std::size_t keep) {
    std::vector<std::pair<std::size_t, double>> kept;
    kept.reserve(acc.touched.size());
    for (std::size_t j : acc.touched) {
        const double v = acc.value[j];
        if (std::abs(v) >= threshold && v != 0.0) kept.emplace_back(j, v);
    }
    if (kept.size() > keep) {
        auto larger = [](const auto& a, const auto& b) {
            const double ma = std::abs(a.second), mb = std::abs(b.second);
            return ma != mb ? ma > mb : a.first < b.first;
        };
        std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(keep), kept.end(),
                         larger);
        kept.resize(keep);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return kept;
}

}  // namespace

SparseSym::SparseSym(std::size_t n, std::vector<std::size_t> row_ptr,
                     std::vector<std::size_t> col_idx, std::vector<double> values)
    : n_(n), ptr_(std::move(row_ptr)), col_(std::move(col_idx)), val_(std::move(values)) {
    if (ptr_.size() != n_ + 1 || ptr_.front() != 0 || ptr_.back() != col_.size() ||
        col_.size() != val_.size())
        throw ContractError("SparseSym: inconsistent CSR arrays");
    diag_.assign(n_, 0);
    std::vector<std::size_t> count(n_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        bool has_diag = false;
        for (std::size_t q = ptr_[i]; q < ptr_[i + 1]; ++q) {
            const std::size_t j = col_[q];
            if (j >= n_) throw ContractError("SparseSym: column index out of range");
            if (q > ptr_[i] && j <= col_[q - 1]) throw ContractError("SparseSym: unsorted row");
            if (j == i) {
                has_diag = true;
                diag_[i] = q;
            }
            ++count[j];
        }
        if (!has_diag || !(val_[diag_[i]] > 0.0)) {
            std::ostringstream msg;
            msg << "SparseSym: diagonal entry of row " << i << " missing or not positive";
            throw ContractError(msg.str());
        }
    }
    // Structural symmetry in one pass: rows are sorted, so visiting (i, j) in
    // row-major order meets the mirrors (j, i) of row j in ascending i.
    std::vector<std::size_t> cursor(ptr_.begin(), ptr_.end() - 1);
    for (std::size_t i = 0; i < n_; ++i) {
        if (count[i] != ptr_[i + 1] - ptr_[i])
            throw ContractError("SparseSym: pattern is not structurally symmetric");
        for (std::size_t q = ptr_[i]; q < ptr_[i + 1]; ++q) {
            const std::size_t j = col_[q];
            if (cursor[j] == ptr_[j + 1] || col_[cursor[j]] != i)
                throw ContractError("SparseSym: pattern is not structurally symmetric");
            ++cursor[j];
        }
    }
}

SparseSym SparseSym::from_dense(std::span<const double> dense, std::size_t n, double drop_below) {
    if (dense.size() != n * n) throw ContractError("SparseSym::from_dense: size mismatch");
    std::vector<std::size_t> ptr{0};
    std::vector<std::size_t> col;
    std::vector<double> val;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double a = dense[i * n + j];
            const double at = dense[j * n + i];
            if (i == j || std::abs(a) > drop_below || std::abs(at) > drop_below) {
                col.push_back(j);
                val.push_back(a);
            }
        }
        ptr.push_back(col.size());
    }
    return SparseSym(n, std::move(ptr), std::move(col), std::move(val));
}

double SparseSym::at(std::size_t i, std::size_t j) const {
    const auto first = col_.begin() + static_cast<std::ptrdiff_t>(ptr_[i]);
    const auto last = col_.begin() + static_cast<std::ptrdiff_t>(ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? val_[static_cast<std::size_t>(it - col_.begin())] : 0.0;
}

void SparseSym::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != n_ || y.size() != n_) throw ContractError("SparseSym::multiply: size mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t q = ptr_[i]; q < ptr_[i + 1]; ++q) s += val_[q] * x[col_[q]];
        y[i] = s;
    }
}

std::vector<double> SparseSym::multiply(std::span<const double> x) const {
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
}

std::vector<double> SparseSym::to_dense() const {
    std::vector<double> d(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t q = ptr_[i]; q < ptr_[i + 1]; ++q) d[i * n_ + col_[q]] = val_[q];
    return d;
}

void ILUFactors::apply(std::span<const double> r, std::span<double> z) const {
    if (r.size() != n || z.size() != n) throw ContractError("ILUFactors::apply: size mismatch");
    if (z.data() != r.data()) std::copy(r.begin(), r.end(), z.begin());
    for (std::size_t i = 0; i < n; ++i) {
        const double zi = z[i];
        if (zi == 0.0) continue;
        for (std::size_t q = l_col_ptr[i]; q < l_col_ptr[i + 1]; ++q) z[l_row_idx[q]] -= l_val[q] * zi;
    }
    for (std::size_t i = n; i-- > 0;) {
        const std::size_t d = u_row_ptr[i];
        double s = z[i];
        for (std::size_t q = d + 1; q < u_row_ptr[i + 1]; ++q) s -= u_val[q] * z[u_col_idx[q]];
        z[i] = s / u_val[d];
    }
}

std::vector<double> ILUFactors::dense_l() const {
    std::vector<double> d(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        d[j * n + j] = 1.0;
        for (std::size_t q = l_col_ptr[j]; q < l_col_ptr[j + 1]; ++q) d[l_row_idx[q] * n + j] = l_val[q];
    }
    return d;
}

std::vector<double> ILUFactors::dense_u() const {
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = u_row_ptr[i]; q < u_row_ptr[i + 1]; ++q) d[i * n + u_col_idx[q]] = u_val[q];
    return d;
}

ILUFactors crout_ilut(const SparseSym& A, double drop_tol, std::size_t fill_limit) {
    if (!(drop_tol >= 0.0) || !std::isfinite(drop_tol))
        throw ParameterError("crout_ilut: drop_tol must be >= 0");
    if (fill_limit < 1) throw ParameterError("crout_ilut: fill_limit must be >= 1");
    const std::size_t n = A.n();
    const auto a_ptr = A.row_ptr();
    const auto a_col = A.col_idx();
    const auto a_val = A.values();

    // Column access to A (transpose values; the pattern is symmetric).
    std::vector<std::size_t> t_ptr(a_ptr.begin(), a_ptr.end());
    std::vector<std::size_t> t_row(A.nnz());
    std::vector<double> t_val(A.nnz());
    {
        std::vector<std::size_t> cursor(t_ptr.begin(), t_ptr.end() - 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t q = a_ptr[i]; q < a_ptr[i + 1]; ++q) {
                const std::size_t dst = cursor[a_col[q]]++;
                t_row[dst] = i;
                t_val[dst] = a_val[q];
            }
    }

    ILUFactors f;
    f.n = n;
    f.drop_tol = drop_tol;
    f.fill_limit = fill_limit;
    f.l_col_ptr.reserve(n + 1);
    f.u_row_ptr.reserve(n + 1);
    f.l_col_ptr.push_back(0);
    f.u_row_ptr.push_back(0);

    // l_row[k]: (i, L(k,i)) for finished columns i < k; u_col[k]: (i, U(i,k)) for rows i < k.
    std::vector<std::vector<std::pair<std::size_t, double>>> l_row(n), u_col(n);
    // first entry of U row i / L column i that is still relevant at the current step
    std::vector<std::size_t> u_first(n), l_first(n);

    Accumulator z(n), w(n);
    const std::size_t keep = fill_limit - 1;

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t tag = k + 1;
        double row_norm = 0.0, col_norm = 0.0;

        z.reset();
        for (std::size_t q = a_ptr[k]; q < a_ptr[k + 1]; ++q) {
            row_norm += a_val[q] * a_val[q];
            if (a_col[q] >= k) z.add(a_col[q], a_val[q], tag);
        }
        for (const auto& [i, lki] : l_row[k]) {
            std::size_t q = u_first[i];
            const std::size_t end = f.u_row_ptr[i + 1];
            while (q < end && f.u_col_idx[q] < k) ++q;
            u_first[i] = q;
            for (; q < end; ++q) z.add(f.u_col_idx[q], -lki * f.u_val[q], tag);
        }

        w.reset();
        for (std::size_t q = t_ptr[k]; q < t_ptr[k + 1]; ++q) {
            col_norm += t_val[q] * t_val[q];
            if (t_row[q] > k) w.add(t_row[q], t_val[q], tag);
        }
        for (const auto& [i, uik] : u_col[k]) {
            std::size_t q = l_first[i];
            const std::size_t end = f.l_col_ptr[i + 1];
            while (q < end && f.l_row_idx[q] <= k) ++q;
            l_first[i] = q;
            for (; q < end; ++q) w.add(f.l_row_idx[q], -uik * f.l_val[q], tag);
        }

        const double pivot = z.stamp[k] == tag ? z.value[k] : 0.0;
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            std::ostringstream msg;
            msg << "crout_ilut: non-positive pivot " << pivot << " at row " << k;
            throw FactorizationError(msg.str(), k);
        }

        // drop the pivot from the candidate list before dropping/capping
        std::erase(z.touched, k);
        const auto u_kept = drop_entries(z, drop_tol * std::sqrt(row_norm), keep);
        const auto l_kept = drop_entries(w, drop_tol * std::sqrt(col_norm), keep);

        f.u_col_idx.push_back(k);
        f.u_val.push_back(pivot);
        for (const auto& [j, v] : u_kept) {
            f.u_col_idx.push_back(j);
            f.u_val.push_back(v);
            u_col[j].emplace_back(k, v);
        }
        f.u_row_ptr.push_back(f.u_col_idx.size());
        u_first[k] = f.u_row_ptr[k] + 1;

        for (const auto& [j, v] : l_kept) {
            const double l = v / pivot;
            f.l_row_idx.push_back(j);
            f.l_val.push_back(l);
            l_row[j].emplace_back(k, l);
        }
        f.l_col_ptr.push_back(f.l_row_idx.size());
        l_first[k] = f.l_col_ptr[k];

        // release lists that are no longer needed
        std::vector<std::pair<std::size_t, double>>().swap(l_row[k]);
        std::vector<std::pair<std::size_t, double>>().swap(u_col[k]);
    }
    return f;
}

void CGConfig::validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ParameterError("CGConfig: rel_tol must lie in (0, 1)");
    if (max_iter < 1) throw ParameterError("CGConfig: max_iter must be >= 1");
}

void ILUTSettings::validate() const {
    if (!(drop_tol >= 0.0)) throw ParameterError("ILUTSettings: drop_tol must be >= 0");
    if (fill_limit < 1) throw ParameterError("ILUTSettings: fill_limit must be >= 1");
    if (max_retries < 0) throw ParameterError("ILUTSettings: max_retries must be >= 0");
}

SolveResult pcg_solve(const SparseSym& A, std::span<const double> b, const ILUFactors& prec,
                      const CGConfig& cfg) {
    cfg.validate();
    const std::size_t n = A.n();
    if (b.size() != n || prec.n != n) throw ContractError("pcg_solve: dimension mismatch");

    SolveResult out;
    out.x.assign(n, 0.0);
    const double b_norm = norm2(b);
    if (b_norm == 0.0) return out;

    std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
    prec.apply(r, z);
    p = z;
    double rz = dot(r, z);
    double residual = 1.0;

    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        A.multiply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) break;
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            out.x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        residual = norm2(r) / b_norm;
        if (residual <= cfg.rel_tol) {
            // confirm with the true residual; recurrences drift
            A.multiply(out.x, q);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
            residual = norm2(r) / b_norm;
            if (residual <= cfg.rel_tol) {
                out.iterations = it;
                out.residual = residual;
                return out;
            }
        }
        prec.apply(r, z);
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    std::ostringstream msg;
    msg << "pcg_solve: no convergence, relative residual " << residual;
    throw SolverError(msg.str(), residual, cfg.max_iter);
}

AdaptiveSolveResult solve_spd(const SparseSym& A, std::span<const double> b,
                              const ILUTSettings& ilut, const CGConfig& cfg) {
    ilut.validate();
    cfg.validate();
    double tol = ilut.drop_tol;
    std::size_t fill = ilut.fill_limit;
    for (int attempt = 0;; ++attempt) {
        try {
            const ILUFactors prec = crout_ilut(A, tol, fill);
            return {pcg_solve(A, b, prec, cfg), tol, fill, attempt};
        } catch (const FactorizationError&) {
            if (attempt >= ilut.max_retries) throw;
        } catch (const SolverError&) {
            if (attempt >= ilut.max_retries) throw;
        }
        tol *= 0.5;
        fill *= 2;
    }
}

}  // namespace mikado
