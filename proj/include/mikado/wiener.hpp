#pragma once

// Generalized Wiener (linear MMSE) estimation of site brightnesses.

#include <cstddef>
#include <span>
#include <vector>

#include "mikado/geometry.hpp"
#include "mikado/simulator.hpp"
#include "mikado/sparse.hpp"

namespace mikado {

inline constexpr double kDefaultClampEps = 1e-3;

/// Occupancy probabilities and brightness moments of the site prior.
///
/// Probabilities are clamped to [clamp_eps, 1] at construction; the upper
/// clamp 1 - clamp_eps applies only when sigma == 0, where p = 1 would make
/// the prior variance vanish.
struct PriorModel {
    std::vector<double> p;
    double mu = 0.0;
    double sigma = 0.0;
    double clamp_eps = kDefaultClampEps;

    static PriorModel make(std::vector<double> p, double mu, double sigma,
                           double clamp_eps = kDefaultClampEps);
    static PriorModel uniform(std::size_t n_sites, double p, double mu, double sigma,
                              double clamp_eps = kDefaultClampEps);
};

struct MomentSet {
    std::vector<double> mean_x;  // <x>_i = p_i mu
    std::vector<double> var_x;   // p_i (1 - p_i) mu^2 + p_i sigma^2
    std::vector<double> var_n;   // mu (M p)_j + k_j + r^2
};

MomentSet build_moments(const MeasurementMatrix& M, const PriorModel& prior, const NoiseSpec& noise);

/// Moments over the columns `active` of M (strictly ascending); the prior is
/// indexed like `active` and the other columns carry no expected signal.
MomentSet build_moments(const MeasurementMatrix& M, std::span<const std::size_t> active,
                        const PriorModel& prior, const NoiseSpec& noise);

struct NormalSystem {
    SparseSym A;              // M^T Sn^-1 M + Sx^-1
    std::vector<double> rhs;  // M^T Sn^-1 (y - M <x>)
};

NormalSystem assemble_system(const MeasurementMatrix& M, const MomentSet& moments, const Image& y);

/// Same system restricted to the columns `active`, without materializing the
/// column subset of M.
NormalSystem assemble_system(const MeasurementMatrix& M, std::span<const std::size_t> active,
                             const MomentSet& moments, const Image& y);

struct SolverStats {
    std::size_t iterations = 0;
    double residual = 0.0;
    double drop_tol = 0.0;
    std::size_t fill_limit = 0;
    int retries = 0;
};

struct Estimate {
    std::vector<double> xhat;
    SolverStats stats;
};

struct SolverSettings {
    ILUTSettings ilut;
    CGConfig cg;
};

/// x_hat = <x> + A^-1 rhs, solved with Crout-ILUT preconditioned CG.
Estimate wiener_estimate(const Image& y, const MeasurementMatrix& M, const PriorModel& prior,
                         const NoiseSpec& noise, const SolverSettings& settings);

/// Estimate over the columns `active` only; equals wiener_estimate on
/// M.select_columns(active).
Estimate wiener_estimate(const Image& y, const MeasurementMatrix& M, std::span<const std::size_t> active,
                         const PriorModel& prior, const NoiseSpec& noise, const SolverSettings& settings);

inline constexpr std::size_t kDenseOracleMaxSites = 2000;

/// Explicit H = (M^T Sn^-1 M + Sx^-1)^-1 M^T Sn^-1 with dense linear algebra.
Estimate dense_oracle(const Image& y, const MeasurementMatrix& M, const PriorModel& prior,
                      const NoiseSpec& noise);

/// Mean over realizations of ||x_hat - x||^2 / n_sites.
double empirical_mse(std::span<const Estimate> estimates, std::span<const SceneTruth> truths);

}  // namespace mikado
