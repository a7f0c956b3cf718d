#pragma once

// Benchmark harness: scenario construction, the detection path shared with the
// CLI, DER / runtime / tuning studies, DER loci and their CSV and SVG output.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mikado/geometry.hpp"
#include "mikado/simulator.hpp"
#include "mikado/strategy.hpp"
#include "mikado/wiener.hpp"

namespace mikado {

enum class EstimatorId { deconv, apriori, aposteriori, mikado };

std::string_view estimator_name(EstimatorId id);
/// Throws ParameterError for unknown names.
EstimatorId parse_estimator(std::string_view name);

enum class NsrMode { model, measured };

/// Every knob of one simulated operating point.
struct BenchParams {
    std::size_t rows = 50;
    std::size_t cols = 50;
    double a_over_rpsf = 1.25;
    double hwhm_px = 2.0;
    double trunc_factor = 4.0;
    double mu = 500.0;
    double sigma_over_mu = 0.1;
    double p = 0.6;
    double background = 0.0;
    double read_noise_sd = 1.0;
    ShotMode shot_mode = ShotMode::gaussian;

    std::size_t n_steps = 10;
    double t_final_over_mu = 0.4;
    /// optimized: DER-minimizing threshold against the truth (every estimator);
    /// schedule: mikado labels / fixed t_final for the baselines.
    FinalThresholdMode final_mode = FinalThresholdMode::optimized;

    SolverSettings solver{};
    std::vector<double> p_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    double clamp_eps = kDefaultClampEps;
    NsrMode nsr_mode = NsrMode::model;
    double nsr = 0.0;  // > 0 overrides nsr_mode
    double bin_radius_over_a = 0.5;

    std::size_t n_workers = 0;  // 0: hardware concurrency

    double sigma() const { return sigma_over_mu * mu; }
    double spacing_px() const { return a_over_rpsf * hwhm_px; }
    std::size_t n_sites() const { return rows * cols; }
    void validate() const;
};

struct Scenario {
    ArrayGeometry geom;
    PSFModel psf;
    MeasurementMatrix M;
    NoiseSpec noise;
};

/// Margin is ceil(truncation radius) + 2 px.
Scenario make_scenario(const BenchParams& params);

struct Detection {
    std::vector<double> xhat;
    Occupancy occupancy;
    double threshold = 0.0;
    std::vector<MikadoState> trace;  // mikado only
    double chosen_p = 0.0;           // apriori / aposteriori only
};

/// The one detection path used by the CLI and every study. `truth` is
/// required in optimized mode and ignored otherwise.
Detection run_detection(EstimatorId id, const Scenario& scenario, const BenchParams& params,
                        const Image& y, const Occupancy* truth = nullptr, bool keep_trace = false);

struct BenchRecord {
    EstimatorId estimator = EstimatorId::mikado;
    double a_over_rpsf = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double p = 0.0;
    std::size_t n_steps = 0;
    double ilut_tol = 0.0;
    std::size_t ilut_fill = 0;
    std::size_t n_images = 0;
    std::uint64_t seed = 0;
    double der_mean = 0.0;
    double der_sd = 0.0;
    double runtime_mean_s = 0.0;
    double runtime_sd_s = 0.0;
    // trailing columns
    std::size_t n_sites = 0;
    double t_final_over_mu = 0.0;
    FinalThresholdMode final_mode = FinalThresholdMode::optimized;
    double threshold_mean = 0.0;

    std::vector<double> per_image_der;  // not serialized
};

/// Image i uses seed + i. DER is scored per the params' final mode;
/// runtimes cover the estimator only and are measured under the work pool.
BenchRecord run_der_study(EstimatorId id, const BenchParams& params, std::size_t n_images,
                          std::uint64_t seed);

/// One record per site count (square lattices of side round(sqrt(n))).
/// Single-threaded; every image is timed `n_reps` times. The a priori
/// estimate is timed as a single solve at the true p (singleton p grid).
std::vector<BenchRecord> run_runtime_study(EstimatorId id, const std::vector<std::size_t>& site_counts,
                                           const BenchParams& params, std::size_t n_images,
                                           std::size_t n_reps, std::uint64_t seed);

/// DER vs N (optimized final threshold) followed by DER vs t_final / mu
/// (schedule labelling), all with the mikado estimator.
std::vector<BenchRecord> run_tuning_study(const std::vector<std::size_t>& n_steps_grid,
                                          const std::vector<double>& t_final_grid,
                                          const BenchParams& params, std::size_t n_images,
                                          std::uint64_t seed);

struct LocusPoint {
    double a_over_rpsf = 0.0;
    double mu = 0.0;
};

/// der[i][j] is the DER at a_grid[i], mu_grid[j]. For each a, the first
/// crossing of `target` along ascending mu, interpolated linearly in
/// (log mu, log DER); DER values are floored at `der_floor` before the log.
std::vector<LocusPoint> der_locus_from_table(double target, const std::vector<double>& a_grid,
                                             const std::vector<double>& mu_grid,
                                             const std::vector<std::vector<double>>& der,
                                             double der_floor = 1e-6);

/// Runs a DER study per grid point, then extracts the locus.
std::vector<LocusPoint> der_locus(EstimatorId id, double target, const std::vector<double>& a_grid,
                                  const std::vector<double>& mu_grid, const BenchParams& params,
                                  std::size_t n_images, std::uint64_t seed,
                                  std::vector<BenchRecord>* records = nullptr);

/// Smallest mu reaching `target` at the a/r_PSF in `records` closest to
/// `a_over_rpsf`; nullopt when the records never cross the target.
std::optional<double> mu_for_target(const std::vector<BenchRecord>& records, EstimatorId id,
                                    double a_over_rpsf, double target);

std::string bench_csv_header();
std::string to_csv_row(const BenchRecord& r);
void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_bench_csv(const std::string& path);

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> err;  // empty or same length as y
};

/// Minimal standalone SVG line plot.
std::string svg_line_plot(const std::vector<PlotSeries>& series, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel, bool log_x = false,
                          bool log_y = false);

}  // namespace mikado
