#include "mikado/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mikado/errors.hpp"

namespace mikado {

double detection_error_rate(const Occupancy& pred, const Occupancy& truth) {
    if (pred.size() != truth.size()) throw ContractError("detection_error_rate: length mismatch");
    if (truth.empty()) throw ContractError("detection_error_rate: no sites");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) errors += pred[i] != truth[i];
    return static_cast<double>(errors) / static_cast<double>(truth.size());
}

Occupancy apply_threshold(std::span<const double> xhat, double threshold) {
    Occupancy out(xhat.size());
    for (std::size_t i = 0; i < xhat.size(); ++i) out[i] = xhat[i] >= threshold;
    return out;
}

ThresholdChoice optimal_threshold(std::span<const double> xhat, const Occupancy& truth) {
    const std::size_t n = xhat.size();
    if (n == 0) throw ContractError("optimal_threshold: no sites");
    if (truth.size() != n) throw ContractError("optimal_threshold: length mismatch");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xhat[a] < xhat[b]; });

    // cut c: the c smallest estimates are empty, the rest occupied
    std::size_t occupied_total = 0;
    for (bool t : truth) occupied_total += t;
    std::size_t false_neg = 0;                 // occupied among the first c
    std::size_t false_pos = n - occupied_total;  // empty among the last n - c
    std::size_t best_cut = 0;
    std::size_t best_err = false_neg + false_pos;
    for (std::size_t c = 1; c <= n; ++c) {
        if (truth[order[c - 1]]) ++false_neg;
        else --false_pos;
        if (c < n && xhat[order[c - 1]] == xhat[order[c]]) continue;  // not realizable
        if (false_neg + false_pos < best_err) {
            best_err = false_neg + false_pos;
            best_cut = c;
        }
    }

    ThresholdChoice out;
    out.der = static_cast<double>(best_err) / static_cast<double>(n);
    if (best_cut == 0) out.threshold = xhat[order.front()];
    else if (best_cut == n) out.threshold = std::nextafter(xhat[order.back()], std::numeric_limits<double>::infinity());
    else out.threshold = 0.5 * (xhat[order[best_cut - 1]] + xhat[order[best_cut]]);
    return out;
}

}  // namespace mikado
