#pragma once

// The mikado estimate-classify loop: at every step the prior is rebuilt from
// the current labels, a Wiener estimate is computed over the sites not yet
// known to be empty, and sites are labelled empty / filled / unknown against
// two thresholds that converge to a single value at the last step.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mikado/geometry.hpp"
#include "mikado/simulator.hpp"
#include "mikado/wiener.hpp"

namespace mikado {

enum class SiteLabel : std::uint8_t { Empty, Filled, Unknown };

char label_code(SiteLabel label);  // 'e', 'f', 'u'

struct ThresholdSchedule {
    double t_low_1 = 0.0;
    double t_high_1 = 0.0;
    double t_final = 0.0;
    std::size_t n_steps = 10;

    /// t_low_1 = 0, t_high_1 = mu, t_final = 0.4 mu.
    static ThresholdSchedule standard(double mu, std::size_t n_steps);
    void validate() const;
};

/// (t_low, t_high) at step n in [1, N], linearly interpolated from
/// (t_low_1, t_high_1) at n = 1 to (t_final, t_final) at n = N.
std::pair<double, double> thresholds_at(const ThresholdSchedule& schedule, std::size_t n);

/// Labels for one step; `xhat` and `prior_labels` share the same (active) site
/// order. Only Unknown sites are reclassified: x < t_low -> Empty,
/// x >= t_high (when t_low == t_high) or x > t_high -> Filled, else Unknown.
std::vector<SiteLabel> classify(std::span<const double> xhat, double t_low, double t_high,
                                std::span<const SiteLabel> prior_labels);

struct ReducedProblem {
    MeasurementMatrix M_active;
    PriorModel prior;                      // over active sites
    std::vector<std::size_t> active_sites;  // indices into the full site list
    bool complete = false;                  // every site is Empty; nothing left to solve
};

/// Drops Empty columns; Filled sites get p = 1 - clamp_eps, Unknown p = 0.5.
ReducedProblem reduce_and_reprior(const MeasurementMatrix& M, std::span<const SiteLabel> labels,
                                  double mu, double sigma, double clamp_eps = kDefaultClampEps);

struct MikadoState {
    std::size_t step = 0;
    double t_low = 0.0;
    double t_high = 0.0;
    std::vector<SiteLabel> labels;          // full length, after this step's classification
    std::vector<std::size_t> active_sites;  // sites estimated at this step
    Estimate last_estimate;                 // over active_sites
};

enum class FinalThresholdMode { schedule, optimized };

struct MikadoResult {
    Estimate estimate;   // full length; Empty sites carry 0
    Occupancy occupancy;
    std::vector<MikadoState> trace;
    double final_threshold = 0.0;
};

struct MikadoOptions {
    ThresholdSchedule schedule;
    SolverSettings solver;
    double clamp_eps = kDefaultClampEps;
    FinalThresholdMode final_mode = FinalThresholdMode::schedule;
    bool keep_trace = true;
};

/// Runs the N-step loop. In `optimized` mode the final labelling uses the
/// DER-minimizing threshold against `truth` (benchmark use only).
MikadoResult mikado_estimate(const Image& y, const MeasurementMatrix& M, const NoiseSpec& noise,
                             double mu, double sigma, const MikadoOptions& options,
                             const Occupancy* truth = nullptr);

}  // namespace mikado
