#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mikado/geometry.hpp"

namespace mikado {

enum class ShotMode { gaussian, poisson };

/// Background, read noise and shot-noise law of the camera model.
struct NoiseSpec {
    double background = 0.0;              // k, photoelectrons per pixel
    std::vector<double> background_map;   // per-pixel k; overrides `background` when non-empty
    double read_noise_sd = 1.0;           // r
    ShotMode shot_mode = ShotMode::gaussian;

    double background_at(std::size_t pixel) const {
        return background_map.empty() ? background : background_map[pixel];
    }
    void validate(std::size_t n_pixels) const;
};

using Occupancy = std::vector<bool>;

struct SceneTruth {
    Occupancy occupied;
    std::vector<double> brightness;  // zero wherever not occupied
    std::uint64_t seed = 0;
};

/// Row-major image in photoelectrons.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool operator==(const Image&) const = default;
};

/// Bernoulli occupancy and truncated-normal brightness (non-positive draws are resampled).
SceneTruth sample_scene(const ArrayGeometry& geom, std::span<const double> p, double mu,
                        double sigma, std::uint64_t seed);
SceneTruth sample_scene(const ArrayGeometry& geom, double p, double mu, double sigma,
                        std::uint64_t seed);

/// M x + k, no noise.
Image render_clean(const MeasurementMatrix& M, const SceneTruth& scene, const NoiseSpec& noise);

/// Adds shot and read noise to a clean rendering (which includes k) and
/// subtracts k, so the result has expectation M x and per-pixel variance
/// (M x)_j + k_j + r^2.
Image corrupt(const Image& clean, const NoiseSpec& noise, std::uint64_t seed);

/// Independent seeds for the scene and the noise of one simulated image.
std::pair<std::uint64_t, std::uint64_t> derive_seeds(std::uint64_t image_seed);

struct SimulatedImage {
    SceneTruth truth;
    Image image;
};

/// sample_scene -> render_clean -> corrupt with seeds derived from `image_seed`.
SimulatedImage simulate_image(const ArrayGeometry& geom, const MeasurementMatrix& M, double p,
                              double mu, double sigma, const NoiseSpec& noise,
                              std::uint64_t image_seed);

}  // namespace mikado
