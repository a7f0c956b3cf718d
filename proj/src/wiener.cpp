#include "mikado/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <Eigen/Dense>

#include "mikado/errors.hpp"

namespace mikado {

namespace {

// Pixels outside every active PSF have no prior signal; with r = k = 0 their
// model variance would be zero. They never enter A, so any positive floor works.
constexpr double kMinPixelVariance = 1e-12;

void check_image(const Image& y, const MeasurementMatrix& M) {
    if (y.values.size() != M.n_pixels() || y.height != M.image_height() || y.width != M.image_width())
        throw ContractError("image does not match the measurement matrix");
}

std::vector<std::size_t> all_sites(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

}  // namespace

PriorModel PriorModel::make(std::vector<double> p, double mu, double sigma, double clamp_eps) {
    if (!(mu > 0.0)) throw ParameterError("PriorModel: mu must be positive");
    if (!(sigma >= 0.0)) throw ParameterError("PriorModel: sigma must be >= 0");
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ParameterError("PriorModel: clamp_eps must lie in (0, 0.5)");
    const double upper = sigma > 0.0 ? 1.0 : 1.0 - clamp_eps;
    for (double& pi : p) {
        if (!(pi >= 0.0 && pi <= 1.0)) throw ParameterError("PriorModel: p must lie in [0, 1]");
        pi = std::clamp(pi, clamp_eps, upper);
    }
    return PriorModel{std::move(p), mu, sigma, clamp_eps};
}

PriorModel PriorModel::uniform(std::size_t n_sites, double p, double mu, double sigma, double clamp_eps) {
    return make(std::vector<double>(n_sites, p), mu, sigma, clamp_eps);
}

MomentSet build_moments(const MeasurementMatrix& M, std::span<const std::size_t> active,
                        const PriorModel& prior, const NoiseSpec& noise) {
    if (prior.p.size() != active.size()) throw ContractError("build_moments: prior size mismatch");
    for (std::size_t k = 0; k < active.size(); ++k)
        if (active[k] >= M.n_sites() || (k > 0 && active[k] <= active[k - 1]))
            throw ContractError("build_moments: active sites must be ascending and in range");
    noise.validate(M.n_pixels());
    MomentSet m;
    const double mu2 = prior.mu * prior.mu;
    const double s2 = prior.sigma * prior.sigma;
    m.mean_x.resize(active.size());
    m.var_x.resize(active.size());
    std::vector<double> p_full(M.n_sites(), 0.0);
    for (std::size_t k = 0; k < active.size(); ++k) {
        const double p = prior.p[k];
        m.mean_x[k] = p * prior.mu;
        m.var_x[k] = p * (1.0 - p) * mu2 + p * s2;
        p_full[active[k]] = p;
    }
    const double r2 = noise.read_noise_sd * noise.read_noise_sd;
    m.var_n = M.multiply(p_full);
    for (std::size_t j = 0; j < m.var_n.size(); ++j)
        m.var_n[j] = std::max(prior.mu * m.var_n[j] + noise.background_at(j) + r2, kMinPixelVariance);
    return m;
}

MomentSet build_moments(const MeasurementMatrix& M, const PriorModel& prior, const NoiseSpec& noise) {
    if (prior.p.size() != M.n_sites()) throw ContractError("build_moments: prior size mismatch");
    return build_moments(M, all_sites(M.n_sites()), prior, noise);
}

NormalSystem assemble_system(const MeasurementMatrix& M, std::span<const std::size_t> active,
                             const MomentSet& moments, const Image& y) {
    check_image(y, M);
    const std::size_t ns = active.size();
    if (moments.var_x.size() != ns || moments.mean_x.size() != ns || moments.var_n.size() != M.n_pixels())
        throw ContractError("assemble_system: moments do not match the measurement matrix");

    // global site -> position in `active`, or npos
    constexpr std::uint32_t npos = static_cast<std::uint32_t>(-1);
    if (ns >= npos) throw ParameterError("assemble_system: too many sites");
    std::vector<std::uint32_t> local(M.n_sites(), npos);
    for (std::size_t k = 0; k < ns; ++k) {
        if (active[k] >= M.n_sites() || (k > 0 && active[k] <= active[k - 1]))
            throw ContractError("assemble_system: active sites must be ascending and in range");
        local[active[k]] = static_cast<std::uint32_t>(k);
    }

    const auto col_ptr = M.col_ptr();
    const auto col_pix = M.col_pixels();
    const auto col_val = M.col_values();
    const auto col_pos = M.col_to_row_position();
    const auto row_ptr = M.row_ptr();
    const auto row_site = M.row_sites();
    const auto row_val = M.row_values();

    // weighted residual Sn^-1 (y - M <x>)
    std::vector<double> mean_full(M.n_sites(), 0.0);
    for (std::size_t k = 0; k < ns; ++k) mean_full[active[k]] = moments.mean_x[k];
    std::vector<double> resid = M.multiply(mean_full);
    for (std::size_t j = 0; j < resid.size(); ++j) resid[j] = (y.values[j] - resid[j]) / moments.var_n[j];

    // Upper triangle (j >= i) row by row. Sites within a pixel row are sorted,
    // so the entries j >= i of that row start at site i's own position.
    std::vector<std::size_t> up_ptr{0};
    std::vector<std::size_t> up_col;
    std::vector<double> up_val;
    up_ptr.reserve(ns + 1);
    // Every contribution is strictly positive (M > 0 on its pattern), so a
    // zero accumulator marks a column not yet touched in this row.
    std::vector<double> acc(ns, 0.0);
    std::vector<std::size_t> touched;
    std::vector<double> rhs(ns, 0.0);
    std::vector<std::size_t> lower_count(ns, 0);
    up_col.reserve(ns * 16);
    up_val.reserve(ns * 16);

    for (std::size_t li = 0; li < ns; ++li) {
        const std::size_t i = active[li];
        touched.clear();
        double b = 0.0;
        acc[li] = 1.0 / moments.var_x[li];
        touched.push_back(li);
        for (std::size_t q = col_ptr[i]; q < col_ptr[i + 1]; ++q) {
            const std::size_t pix = col_pix[q];
            b += col_val[q] * resid[pix];
            const double w = col_val[q] / moments.var_n[pix];
            const std::size_t end = row_ptr[pix + 1];
            for (std::size_t t = col_pos[q]; t < end; ++t) {
                const std::uint32_t lj = local[row_site[t]];
                if (lj == npos) continue;
                if (acc[lj] == 0.0) touched.push_back(lj);
                acc[lj] += w * row_val[t];
            }
        }
        rhs[li] = b;
        std::sort(touched.begin(), touched.end());
        for (std::size_t lj : touched) {
            up_col.push_back(lj);
            up_val.push_back(acc[lj]);
            acc[lj] = 0.0;
            if (lj != li) ++lower_count[lj];
        }
        up_ptr.push_back(up_col.size());
    }

    // mirror into full rows: lower part (from earlier rows) then the upper part
    std::vector<std::size_t> ptr(ns + 1, 0);
    for (std::size_t i = 0; i < ns; ++i) ptr[i + 1] = ptr[i] + lower_count[i] + (up_ptr[i + 1] - up_ptr[i]);
    std::vector<std::size_t> cols(ptr.back());
    std::vector<double> vals(ptr.back());
    std::vector<std::size_t> cursor(ptr.begin(), ptr.end() - 1);
    for (std::size_t i = 0; i < ns; ++i) {
        for (std::size_t q = up_ptr[i]; q < up_ptr[i + 1]; ++q) {
            const std::size_t j = up_col[q];
            if (j == i) continue;
            cols[cursor[j]] = i;
            vals[cursor[j]++] = up_val[q];
        }
        for (std::size_t q = up_ptr[i]; q < up_ptr[i + 1]; ++q) {
            cols[cursor[i]] = up_col[q];
            vals[cursor[i]++] = up_val[q];
        }
    }
    return {SparseSym(ns, std::move(ptr), std::move(cols), std::move(vals)), std::move(rhs)};
}

NormalSystem assemble_system(const MeasurementMatrix& M, const MomentSet& moments, const Image& y) {
    return assemble_system(M, all_sites(M.n_sites()), moments, y);
}

Estimate wiener_estimate(const Image& y, const MeasurementMatrix& M, std::span<const std::size_t> active,
                         const PriorModel& prior, const NoiseSpec& noise, const SolverSettings& settings) {
    const MomentSet moments = build_moments(M, active, prior, noise);
    const NormalSystem sys = assemble_system(M, active, moments, y);
    const AdaptiveSolveResult sol = solve_spd(sys.A, sys.rhs, settings.ilut, settings.cg);
    Estimate est;
    est.xhat = moments.mean_x;
    for (std::size_t i = 0; i < est.xhat.size(); ++i) est.xhat[i] += sol.solve.x[i];
    est.stats = {sol.solve.iterations, sol.solve.residual, sol.drop_tol, sol.fill_limit, sol.retries};
    return est;
}

Estimate wiener_estimate(const Image& y, const MeasurementMatrix& M, const PriorModel& prior,
                         const NoiseSpec& noise, const SolverSettings& settings) {
    if (prior.p.size() != M.n_sites()) throw ContractError("wiener_estimate: prior size mismatch");
    return wiener_estimate(y, M, all_sites(M.n_sites()), prior, noise, settings);
}

Estimate dense_oracle(const Image& y, const MeasurementMatrix& M, const PriorModel& prior,
                      const NoiseSpec& noise) {
    check_image(y, M);
    const std::size_t ns = M.n_sites();
    const std::size_t np = M.n_pixels();
    if (ns > kDenseOracleMaxSites) throw ParameterError("dense_oracle: too many sites for a dense solve");
    const MomentSet m = build_moments(M, prior, noise);

    const auto dense = M.to_dense();
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Md(
        dense.data(), static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(ns));
    const Eigen::Map<const Eigen::VectorXd> var_n(m.var_n.data(), static_cast<Eigen::Index>(np));
    const Eigen::Map<const Eigen::VectorXd> var_x(m.var_x.data(), static_cast<Eigen::Index>(ns));
    const Eigen::Map<const Eigen::VectorXd> mean_x(m.mean_x.data(), static_cast<Eigen::Index>(ns));
    const Eigen::Map<const Eigen::VectorXd> yv(y.values.data(), static_cast<Eigen::Index>(np));

    const Eigen::MatrixXd B = Md.transpose() * var_n.cwiseInverse().asDiagonal();
    Eigen::MatrixXd A = B * Md;
    A.diagonal() += var_x.cwiseInverse();
    const Eigen::MatrixXd H = A.inverse() * B;
    const Eigen::VectorXd xhat = mean_x + H * (yv - Md * mean_x);

    Estimate est;
    est.xhat.assign(xhat.data(), xhat.data() + xhat.size());
    return est;
}

double empirical_mse(std::span<const Estimate> estimates, std::span<const SceneTruth> truths) {
    if (estimates.empty()) throw ParameterError("empirical_mse: no realizations");
    if (estimates.size() != truths.size()) throw ContractError("empirical_mse: unpaired inputs");
    double total = 0.0;
    for (std::size_t r = 0; r < estimates.size(); ++r) {
        const auto& xh = estimates[r].xhat;
        const auto& x = truths[r].brightness;
        if (xh.size() != x.size() || x.empty()) throw ContractError("empirical_mse: site count mismatch");
        double se = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) se += (xh[i] - x[i]) * (xh[i] - x[i]);
        total += se / static_cast<double>(x.size());
    }
    return total / static_cast<double>(estimates.size());
}

}  // namespace mikado
