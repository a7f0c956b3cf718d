#pragma once

// Comparison estimators: Wiener deconvolution + binning, and the a priori /
// a posteriori optimal linear estimators.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mikado/geometry.hpp"
#include "mikado/simulator.hpp"
#include "mikado/wiener.hpp"

namespace mikado {

/// Frequency-domain Wiener deconvolution with filter conj(P) / (|P|^2 + nsr),
/// then per-site binning: each deconvolved pixel contributes in proportion to
/// the area it shares with the square of half-width `bin_radius_px` centered
/// on the site. The image is padded to the next power of two per axis by edge
/// replication.
std::vector<double> deconvolve_and_bin(const Image& y, const PSFModel& psf, const ArrayGeometry& geom,
                                       double nsr, double bin_radius_px);

/// Image-domain inverse SNR r^2 * n_pixels / ||y||^2.
double measured_nsr(const Image& y, double read_noise_sd);

/// Noise-to-object power ratio from the forward model: total pixel noise
/// variance (mu M p + k + r^2 summed over pixels) over the expected object
/// energy n_sites * p * (mu^2 + sigma^2).
double model_nsr(const MeasurementMatrix& M, double p, double mu, double sigma, const NoiseSpec& noise);

/// Otsu separability (between-class / total variance, in [0, 1]) of a
/// histogram of `values` with `bins` bins.
double otsu_separability(std::span<const double> values, std::size_t bins = 256);

struct AprioriResult {
    Estimate estimate;
    double chosen_p = 0.0;
    double separation = 0.0;
};

/// Uniform-prior Wiener estimates over `p_grid`; keeps the one whose x_hat
/// histogram is best separated.
AprioriResult apriori_estimate(const Image& y, const MeasurementMatrix& M, const NoiseSpec& noise,
                               double mu, double sigma, std::span<const double> p_grid,
                               const SolverSettings& settings, double clamp_eps = kDefaultClampEps);

/// Two-component 1-D Gaussian mixture; component 0 is the lower (empty) mode.
struct GMMFit {
    std::array<double, 2> weights{};
    std::array<double, 2> means{};
    std::array<double, 2> variances{};
    double loglik = 0.0;
    std::size_t n_iter = 0;
    std::vector<double> loglik_history;

    /// Posterior probability of the upper component for each value.
    std::vector<double> responsibility_filled(std::span<const double> values) const;
};

/// EM fit initialized by splitting the values at `init_split`.
/// Throws FitError when a component variance collapses below 1e-12 * spread^2.
GMMFit fit_gmm2(std::span<const double> values, double init_split, std::size_t max_iter = 500,
                double tol = 1e-10);

/// Second Wiener pass whose per-site prior is the mixture responsibility of
/// the filled mode, fitted on an a priori estimate.
Estimate aposteriori_from(const AprioriResult& apriori, const Image& y, const MeasurementMatrix& M,
                          const NoiseSpec& noise, double mu, double sigma,
                          const SolverSettings& settings, double clamp_eps = kDefaultClampEps,
                          double init_split_over_mu = 0.4);

Estimate aposteriori_estimate(const Image& y, const MeasurementMatrix& M, const NoiseSpec& noise,
                              double mu, double sigma, std::span<const double> p_grid,
                              const SolverSettings& settings, double clamp_eps = kDefaultClampEps);

/// Posterior probabilities used by the second pass (clamped responsibilities).
std::vector<double> posterior_probabilities(const GMMFit& fit, std::span<const double> xhat,
                                            double clamp_eps);

}  // namespace mikado
