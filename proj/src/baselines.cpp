#include "mikado/baselines.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>

#include "mikado/errors.hpp"

namespace mikado {

namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// FFTW planning is not thread-safe.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    void* ptr;
    explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
        if (!ptr) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

struct FftwPlan {
    fftw_plan plan = nullptr;
    ~FftwPlan() {
        if (plan) {
            std::lock_guard lock(fftw_plan_mutex());
            fftw_destroy_plan(plan);
        }
    }
};

// Index into the source axis for padded position i: the first half of the pad
// replicates the far edge, the second half the near edge (continuous wrap).
std::size_t replicate_index(std::size_t i, std::size_t n, std::size_t padded) {
    if (i < n) return i;
    return (i - n) < (padded - n) / 2 ? n - 1 : 0;
}

double gauss_loglik_term(double x, double w, double m, double v) {
    return std::log(w) - 0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * (x - m) * (x - m) / v;
}

}  // namespace

double measured_nsr(const Image& y, double read_noise_sd) {
    double energy = 0.0;
    for (double v : y.values) energy += v * v;
    if (energy == 0.0) return 0.0;
    return read_noise_sd * read_noise_sd * static_cast<double>(y.values.size()) / energy;
}

double model_nsr(const MeasurementMatrix& M, double p, double mu, double sigma, const NoiseSpec& noise) {
    if (!(p > 0.0 && p <= 1.0) || !(mu > 0.0) || !(sigma >= 0.0))
        throw ParameterError("model_nsr: need 0 < p <= 1, mu > 0, sigma >= 0");
    noise.validate(M.n_pixels());
    const std::vector<double> pv(M.n_sites(), p);
    const std::vector<double> mp = M.multiply(pv);
    const double r2 = noise.read_noise_sd * noise.read_noise_sd;
    double noise_power = 0.0;
    for (std::size_t j = 0; j < mp.size(); ++j) noise_power += mu * mp[j] + noise.background_at(j) + r2;
    const double object_power = static_cast<double>(M.n_sites()) * p * (mu * mu + sigma * sigma);
    return noise_power / object_power;
}

std::vector<double> deconvolve_and_bin(const Image& y, const PSFModel& psf, const ArrayGeometry& geom,
                                       double nsr, double bin_radius_px) {
    psf.validate();
    if (!(nsr >= 0.0)) throw ParameterError("deconvolve_and_bin: nsr must be >= 0");
    if (!(bin_radius_px > 0.0)) throw ParameterError("deconvolve_and_bin: bin radius must be positive");
    if (y.height != geom.image_height || y.width != geom.image_width || y.values.size() != geom.n_pixels())
        throw ContractError("deconvolve_and_bin: image does not match the geometry");

    const std::size_t H = y.height, W = y.width;
    const std::size_t PH = next_pow2(H), PW = next_pow2(W);
    const std::size_t WC = PW / 2 + 1;
    const std::size_t n_real = PH * PW;
    const std::size_t n_cplx = PH * WC;

    FftwBuffer img_buf(sizeof(double) * n_real), ker_buf(sizeof(double) * n_real);
    FftwBuffer img_spec_buf(sizeof(fftw_complex) * n_cplx), ker_spec_buf(sizeof(fftw_complex) * n_cplx);
    auto* img = static_cast<double*>(img_buf.ptr);
    auto* ker = static_cast<double*>(ker_buf.ptr);
    auto* img_spec = static_cast<fftw_complex*>(img_spec_buf.ptr);
    auto* ker_spec = static_cast<fftw_complex*>(ker_spec_buf.ptr);

    FftwPlan fwd_img, fwd_ker, inv;
    {
        std::lock_guard lock(fftw_plan_mutex());
        const int ph = static_cast<int>(PH), pw = static_cast<int>(PW);
        fwd_img.plan = fftw_plan_dft_r2c_2d(ph, pw, img, img_spec, FFTW_ESTIMATE);
        fwd_ker.plan = fftw_plan_dft_r2c_2d(ph, pw, ker, ker_spec, FFTW_ESTIMATE);
        inv.plan = fftw_plan_dft_c2r_2d(ph, pw, img_spec, img, FFTW_ESTIMATE);
    }

    for (std::size_t r = 0; r < PH; ++r) {
        const std::size_t sr = replicate_index(r, H, PH);
        for (std::size_t c = 0; c < PW; ++c) img[r * PW + c] = y.values[sr * W + replicate_index(c, W, PW)];
    }

    // unit-sum PSF centered on pixel (0, 0) with periodic offsets
    std::fill(ker, ker + n_real, 0.0);
    const auto reach = static_cast<std::ptrdiff_t>(std::floor(psf.truncation_radius_px));
    double total = 0.0;
    for (std::ptrdiff_t dr = -reach; dr <= reach; ++dr) {
        for (std::ptrdiff_t dc = -reach; dc <= reach; ++dc) {
            const double w = psf_weight(psf, static_cast<double>(dr), static_cast<double>(dc));
            if (w <= 0.0) continue;
            const auto r = static_cast<std::size_t>((dr + static_cast<std::ptrdiff_t>(PH)) % static_cast<std::ptrdiff_t>(PH));
            const auto c = static_cast<std::size_t>((dc + static_cast<std::ptrdiff_t>(PW)) % static_cast<std::ptrdiff_t>(PW));
            ker[r * PW + c] += w;
            total += w;
        }
    }
    for (std::size_t q = 0; q < n_real; ++q) ker[q] /= total;

    fftw_execute(fwd_img.plan);
    fftw_execute(fwd_ker.plan);
    for (std::size_t q = 0; q < n_cplx; ++q) {
        const std::complex<double> P(ker_spec[q][0], ker_spec[q][1]);
        const std::complex<double> Y(img_spec[q][0], img_spec[q][1]);
        const double denom = std::norm(P) + nsr;
        const std::complex<double> X = denom > 0.0 ? std::conj(P) * Y / denom : 0.0;
        img_spec[q][0] = X.real();
        img_spec[q][1] = X.imag();
    }
    fftw_execute(inv.plan);
    const double scale = 1.0 / static_cast<double>(n_real);

    // each pixel contributes the area it shares with the site's square cell
    auto overlap = [](double pixel, double lo, double hi) {
        return std::max(0.0, std::min(pixel + 0.5, hi) - std::max(pixel - 0.5, lo));
    };
    std::vector<double> out(geom.n_sites(), 0.0);
    for (std::size_t s = 0; s < geom.n_sites(); ++s) {
        const SiteCenter& c = geom.site_centers[s];
        const auto r0 = std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(c.row - bin_radius_px + 0.5)), 0);
        const auto r1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil(c.row + bin_radius_px - 0.5)), static_cast<std::ptrdiff_t>(H) - 1);
        const auto c0 = std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(c.col - bin_radius_px + 0.5)), 0);
        const auto c1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil(c.col + bin_radius_px - 0.5)), static_cast<std::ptrdiff_t>(W) - 1);
        double acc = 0.0;
        for (std::ptrdiff_t r = r0; r <= r1; ++r) {
            const double wr = overlap(static_cast<double>(r), c.row - bin_radius_px, c.row + bin_radius_px);
            if (wr <= 0.0) continue;
            for (std::ptrdiff_t cc = c0; cc <= c1; ++cc) {
                const double wc = overlap(static_cast<double>(cc), c.col - bin_radius_px, c.col + bin_radius_px);
                acc += wr * wc * img[static_cast<std::size_t>(r) * PW + static_cast<std::size_t>(cc)];
            }
        }
        out[s] = acc * scale;
    }
    return out;
}

double otsu_separability(std::span<const double> values, std::size_t bins) {
    if (values.empty() || bins < 2) return 0.0;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return 0.0;
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<double> hist(bins, 0.0);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        hist[std::min(b, bins - 1)] += 1.0;
    }
    const double n = static_cast<double>(values.size());
    double mean_total = 0.0, second = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double center = lo + (static_cast<double>(b) + 0.5) * width;
        mean_total += hist[b] * center;
        second += hist[b] * center * center;
    }
    mean_total /= n;
    const double var_total = second / n - mean_total * mean_total;
    if (!(var_total > 0.0)) return 0.0;

    double w0 = 0.0, sum0 = 0.0, best = 0.0;
    for (std::size_t b = 0; b + 1 < bins; ++b) {
        const double center = lo + (static_cast<double>(b) + 0.5) * width;
        w0 += hist[b] / n;
        sum0 += hist[b] * center / n;
        const double w1 = 1.0 - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (mean_total - sum0) / w1;
        best = std::max(best, w0 * w1 * (m0 - m1) * (m0 - m1));
    }
    return best / var_total;
}

AprioriResult apriori_estimate(const Image& y, const MeasurementMatrix& M, const NoiseSpec& noise,
                               double mu, double sigma, std::span<const double> p_grid,
                               const SolverSettings& settings, double clamp_eps) {
    if (p_grid.empty()) throw ParameterError("apriori_estimate: empty p grid");
    for (double p : p_grid)
        if (!(p > 0.0 && p < 1.0)) throw ParameterError("apriori_estimate: grid values must lie in (0, 1)");
    AprioriResult best;
    bool have = false;
    for (double p : p_grid) {
        const PriorModel prior = PriorModel::uniform(M.n_sites(), p, mu, sigma, clamp_eps);
        Estimate est = wiener_estimate(y, M, prior, noise, settings);
        const double sep = otsu_separability(est.xhat);
        if (!have || sep > best.separation) {
            best = {std::move(est), p, sep};
            have = true;
        }
    }
    return best;
}

std::vector<double> GMMFit::responsibility_filled(std::span<const double> values) const {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double l0 = gauss_loglik_term(values[i], weights[0], means[0], variances[0]);
        const double l1 = gauss_loglik_term(values[i], weights[1], means[1], variances[1]);
        out[i] = 1.0 / (1.0 + std::exp(l0 - l1));
    }
    return out;
}

GMMFit fit_gmm2(std::span<const double> values, double init_split, std::size_t max_iter, double tol) {
    if (values.size() < 4) throw ParameterError("fit_gmm2: need at least 4 values");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double spread = *hi_it - *lo_it;
    if (!(spread > 0.0)) throw FitError("fit_gmm2: all values identical (component collapse)");
    const double min_var = 1e-12 * spread * spread;
    const double n = static_cast<double>(values.size());

    auto split_at = [&](double t, std::array<double, 2>& cnt, std::array<double, 2>& sum,
                        std::array<double, 2>& sq) {
        cnt = {0, 0};
        sum = {0, 0};
        sq = {0, 0};
        for (double v : values) {
            const int k = v >= t ? 1 : 0;
            cnt[k] += 1;
            sum[k] += v;
            sq[k] += v * v;
        }
    };
    std::array<double, 2> cnt{}, sum{}, sq{};
    split_at(init_split, cnt, sum, sq);
    if (cnt[0] < 1 || cnt[1] < 1) split_at(std::accumulate(values.begin(), values.end(), 0.0) / n, cnt, sum, sq);
    if (cnt[0] < 1 || cnt[1] < 1) split_at(*lo_it + 0.5 * spread, cnt, sum, sq);

    GMMFit fit;
    const double init_floor = 1e-6 * spread * spread;
    for (int k = 0; k < 2; ++k) {
        fit.weights[k] = cnt[k] / n;
        fit.means[k] = sum[k] / cnt[k];
        fit.variances[k] = std::max(sq[k] / cnt[k] - fit.means[k] * fit.means[k], init_floor);
    }

    std::vector<double> resp(values.size());
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iter; ++it) {
        // E step
        double loglik = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double l0 = gauss_loglik_term(values[i], fit.weights[0], fit.means[0], fit.variances[0]);
            const double l1 = gauss_loglik_term(values[i], fit.weights[1], fit.means[1], fit.variances[1]);
            const double m = std::max(l0, l1);
            loglik += m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
            resp[i] = 1.0 / (1.0 + std::exp(l0 - l1));
        }
        fit.loglik = loglik;
        fit.loglik_history.push_back(loglik);
        fit.n_iter = it;
        if (it > 0 && std::abs(loglik - prev) <= tol * std::abs(loglik)) break;
        prev = loglik;

        // M step
        std::array<double, 2> nk{0, 0}, mk{0, 0};
        for (std::size_t i = 0; i < values.size(); ++i) {
            nk[1] += resp[i];
            mk[1] += resp[i] * values[i];
            nk[0] += 1.0 - resp[i];
            mk[0] += (1.0 - resp[i]) * values[i];
        }
        for (int k = 0; k < 2; ++k) {
            if (!(nk[k] > 0.0)) throw FitError("fit_gmm2: component lost all weight (collapse)");
            fit.means[k] = mk[k] / nk[k];
        }
        std::array<double, 2> vk{0, 0};
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double d0 = values[i] - fit.means[0], d1 = values[i] - fit.means[1];
            vk[0] += (1.0 - resp[i]) * d0 * d0;
            vk[1] += resp[i] * d1 * d1;
        }
        for (int k = 0; k < 2; ++k) {
            fit.variances[k] = vk[k] / nk[k];
            fit.weights[k] = nk[k] / n;
            if (!(fit.variances[k] >= min_var)) throw FitError("fit_gmm2: component variance collapsed");
        }
        fit.n_iter = it + 1;
    }
    if (fit.means[0] > fit.means[1]) {
        std::swap(fit.means[0], fit.means[1]);
        std::swap(fit.variances[0], fit.variances[1]);
        std::swap(fit.weights[0], fit.weights[1]);
    }
    return fit;
}

std::vector<double> posterior_probabilities(const GMMFit& fit, std::span<const double> xhat, double clamp_eps) {
    std::vector<double> p = fit.responsibility_filled(xhat);
    for (double& v : p) v = std::clamp(v, clamp_eps, 1.0 - clamp_eps);
    return p;
}

Estimate aposteriori_from(const AprioriResult& apriori, const Image& y, const MeasurementMatrix& M,
                          const NoiseSpec& noise, double mu, double sigma,
                          const SolverSettings& settings, double clamp_eps, double init_split_over_mu) {
    const GMMFit fit = fit_gmm2(apriori.estimate.xhat, init_split_over_mu * mu);
    const PriorModel prior =
        PriorModel::make(posterior_probabilities(fit, apriori.estimate.xhat, clamp_eps), mu, sigma, clamp_eps);
    return wiener_estimate(y, M, prior, noise, settings);
}

Estimate aposteriori_estimate(const Image& y, const MeasurementMatrix& M, const NoiseSpec& noise,
                              double mu, double sigma, std::span<const double> p_grid,
                              const SolverSettings& settings, double clamp_eps) {
    const AprioriResult apriori = apriori_estimate(y, M, noise, mu, sigma, p_grid, settings, clamp_eps);
    return aposteriori_from(apriori, y, M, noise, mu, sigma, settings, clamp_eps);
}

}  // namespace mikado
