#pragma once

// Run configuration: a flat JSON object whose keys mirror the tunables of a
// simulation / detection run. Unknown keys are rejected.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mikado/bench.hpp"

namespace mikado {

struct RunConfig {
    // geometry and PSF
    std::size_t rows = 50;
    std::size_t cols = 50;
    double a_over_rpsf = 1.25;
    double hwhm_px = 2.0;
    double trunc_factor = 4.0;
    // prior
    double p = 0.6;
    double mu = 500.0;
    std::optional<double> sigma;  // mu / 10 when absent
    // noise
    double background = 0.0;
    double read_noise_sd = 1.0;
    ShotMode shot_mode = ShotMode::gaussian;
    // estimator
    EstimatorId estimator = EstimatorId::mikado;
    std::size_t n_steps = 10;
    double t_final_over_mu = 0.4;
    FinalThresholdMode threshold_mode = FinalThresholdMode::schedule;
    double ilut_drop_tol = 1e-3;
    std::size_t ilut_fill_limit = 1000;
    std::size_t ilut_max_retries = 3;
    double cg_rel_tol = 1e-2;
    std::size_t cg_max_iter = 500;
    std::vector<double> p_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    double clamp_eps = 1e-3;
    NsrMode nsr_mode = NsrMode::model;
    double nsr = 0.0;
    double bin_radius_over_a = 0.5;
    // run
    std::uint64_t seed = 1;
    std::size_t n_workers = 0;
    std::string image_out;
    std::string truth_out;
    std::string occupancy_out;
    std::string trace_out;

    double sigma_value() const { return sigma.value_or(mu / 10.0); }
    bool operator==(const RunConfig&) const = default;
};

/// Parses and validates; errors are ConfigError naming the offending key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

/// Validation shared by parse_config and programmatic construction.
void validate_config(const RunConfig& cfg);

BenchParams to_bench_params(const RunConfig& cfg);

}  // namespace mikado
