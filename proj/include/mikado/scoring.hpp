#pragma once

#include <span>
#include <vector>

#include "mikado/simulator.hpp"

namespace mikado {

/// (false positives + false negatives) / number of sites.
double detection_error_rate(const Occupancy& pred, const Occupancy& truth);

/// Sites with x_hat >= threshold are occupied.
Occupancy apply_threshold(std::span<const double> xhat, double threshold);

struct ThresholdChoice {
    double threshold = 0.0;
    double der = 0.0;
};

/// Threshold minimizing the DER against ground truth.
///
/// Scans every realizable cut of the sorted estimates; ties go to the lowest
/// cut. The reported threshold is the midpoint between the two estimates
/// around the cut, the smallest estimate when every site is occupied, and the
/// next double above the largest estimate when none is.
ThresholdChoice optimal_threshold(std::span<const double> xhat, const Occupancy& truth);

}  // namespace mikado
