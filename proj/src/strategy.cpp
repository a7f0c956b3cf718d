#include "mikado/strategy.hpp"

#include <cmath>
#include <sstream>

#include "mikado/errors.hpp"
#include "mikado/scoring.hpp"

namespace mikado {

char label_code(SiteLabel label) {
    switch (label) {
        case SiteLabel::Empty: return 'e';
        case SiteLabel::Filled: return 'f';
        case SiteLabel::Unknown: return 'u';
    }
    return '?';
}

ThresholdSchedule ThresholdSchedule::standard(double mu, std::size_t n_steps) {
    return {0.0, mu, 0.4 * mu, n_steps};
}

void ThresholdSchedule::validate() const {
    if (n_steps < 2) throw ParameterError("ThresholdSchedule: n_steps must be >= 2");
    if (!(t_low_1 < t_final && t_final < t_high_1))
        throw ParameterError("ThresholdSchedule: need t_low_1 < t_final < t_high_1");
}

std::pair<double, double> thresholds_at(const ThresholdSchedule& schedule, std::size_t n) {
    schedule.validate();
    if (n < 1 || n > schedule.n_steps) {
        std::ostringstream msg;
        msg << "thresholds_at: step " << n << " outside [1, " << schedule.n_steps << "]";
        throw ParameterError(msg.str());
    }
    if (n == schedule.n_steps) return {schedule.t_final, schedule.t_final};
    const double f = static_cast<double>(n - 1) / static_cast<double>(schedule.n_steps - 1);
    return {schedule.t_low_1 + f * (schedule.t_final - schedule.t_low_1),
            schedule.t_high_1 + f * (schedule.t_final - schedule.t_high_1)};
}

std::vector<SiteLabel> classify(std::span<const double> xhat, double t_low, double t_high,
                                std::span<const SiteLabel> prior_labels) {
    if (!(t_low <= t_high)) throw ParameterError("classify: t_low must not exceed t_high");
    if (xhat.size() != prior_labels.size()) throw ContractError("classify: size mismatch");
    const bool coincide = t_low == t_high;
    std::vector<SiteLabel> out(prior_labels.begin(), prior_labels.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] != SiteLabel::Unknown) continue;
        const double x = xhat[i];
        if (x < t_low) out[i] = SiteLabel::Empty;
        else if (x > t_high || (coincide && x >= t_high)) out[i] = SiteLabel::Filled;
    }
    return out;
}

namespace {

// Active sites and their prior; M_active is left empty.
ReducedProblem reprior(std::span<const SiteLabel> labels, double mu, double sigma, double clamp_eps) {
    ReducedProblem out;
    std::vector<double> p;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == SiteLabel::Empty) continue;
        out.active_sites.push_back(i);
        p.push_back(labels[i] == SiteLabel::Filled ? 1.0 - clamp_eps : 0.5);
    }
    if (out.active_sites.empty()) {
        out.complete = true;
        return out;
    }
    out.prior = PriorModel::make(std::move(p), mu, sigma, clamp_eps);
    return out;
}

}  // namespace

ReducedProblem reduce_and_reprior(const MeasurementMatrix& M, std::span<const SiteLabel> labels,
                                  double mu, double sigma, double clamp_eps) {
    if (labels.size() != M.n_sites()) throw ContractError("reduce_and_reprior: label count mismatch");
    ReducedProblem out = reprior(labels, mu, sigma, clamp_eps);
    if (!out.complete)
        out.M_active = out.active_sites.size() == M.n_sites() ? M : M.select_columns(out.active_sites);
    return out;
}

MikadoResult mikado_estimate(const Image& y, const MeasurementMatrix& M, const NoiseSpec& noise,
                             double mu, double sigma, const MikadoOptions& options,
                             const Occupancy* truth) {
    options.schedule.validate();
    if (options.final_mode == FinalThresholdMode::optimized && truth == nullptr)
        throw ParameterError("mikado_estimate: optimized final threshold requires ground truth");

    const std::size_t n_sites = M.n_sites();
    std::vector<SiteLabel> labels(n_sites, SiteLabel::Unknown);
    MikadoResult result;
    result.estimate.xhat.assign(n_sites, 0.0);
    Estimate last;
    std::vector<std::size_t> last_active;

    for (std::size_t step = 1; step <= options.schedule.n_steps; ++step) {
        ReducedProblem red = reprior(labels, mu, sigma, options.clamp_eps);
        if (red.complete) break;
        Estimate est = wiener_estimate(y, M, red.active_sites, red.prior, noise, options.solver);
        const auto [t_low, t_high] = thresholds_at(options.schedule, step);

        std::vector<SiteLabel> active_labels(red.active_sites.size());
        for (std::size_t k = 0; k < red.active_sites.size(); ++k) active_labels[k] = labels[red.active_sites[k]];
        active_labels = classify(est.xhat, t_low, t_high, active_labels);
        for (std::size_t k = 0; k < red.active_sites.size(); ++k) labels[red.active_sites[k]] = active_labels[k];

        if (options.keep_trace) result.trace.push_back({step, t_low, t_high, labels, red.active_sites, est});
        last = std::move(est);
        last_active = std::move(red.active_sites);
        result.final_threshold = t_high;
    }

    // sites eliminated before the last solve keep x_hat = 0
    for (std::size_t k = 0; k < last_active.size(); ++k) result.estimate.xhat[last_active[k]] = last.xhat[k];
    result.estimate.stats = last.stats;

    if (options.final_mode == FinalThresholdMode::optimized) {
        const ThresholdChoice choice = optimal_threshold(result.estimate.xhat, *truth);
        result.final_threshold = choice.threshold;
        result.occupancy = apply_threshold(result.estimate.xhat, choice.threshold);
    } else {
        result.occupancy.assign(n_sites, false);
        for (std::size_t i = 0; i < n_sites; ++i) result.occupancy[i] = labels[i] == SiteLabel::Filled;
    }
    return result;
}

}  // namespace mikado
