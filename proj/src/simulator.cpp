#include "mikado/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "mikado/errors.hpp"

namespace mikado {

void NoiseSpec::validate(std::size_t n_pixels) const {
    if (!(background >= 0.0)) throw ParameterError("NoiseSpec: background must be >= 0");
    if (!(read_noise_sd >= 0.0)) throw ParameterError("NoiseSpec: read_noise_sd must be >= 0");
    if (!background_map.empty()) {
        if (background_map.size() != n_pixels)
            throw ContractError("NoiseSpec: background map size does not match the image");
        for (double k : background_map)
            if (!(k >= 0.0)) throw ParameterError("NoiseSpec: background must be >= 0");
    }
}

SceneTruth sample_scene(const ArrayGeometry& geom, std::span<const double> p, double mu,
                        double sigma, std::uint64_t seed) {
    if (p.size() != geom.n_sites()) throw ContractError("sample_scene: p size mismatch");
    if (!(mu > 0.0)) throw ParameterError("sample_scene: mu must be positive");
    if (!(sigma >= 0.0)) throw ParameterError("sample_scene: sigma must be >= 0");
    for (double pi : p)
        if (!(pi >= 0.0 && pi <= 1.0)) throw ParameterError("sample_scene: p must lie in [0, 1]");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> unit(0.0, 1.0);
    SceneTruth scene;
    scene.seed = seed;
    scene.occupied.assign(p.size(), false);
    scene.brightness.assign(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(uniform(rng) < p[i])) continue;
        scene.occupied[i] = true;
        if (sigma == 0.0) {
            scene.brightness[i] = mu;
            continue;
        }
        double x = mu + sigma * unit(rng);
        while (x <= 0.0) x = mu + sigma * unit(rng);
        scene.brightness[i] = x;
    }
    return scene;
}

SceneTruth sample_scene(const ArrayGeometry& geom, double p, double mu, double sigma,
                        std::uint64_t seed) {
    const std::vector<double> pv(geom.n_sites(), p);
    return sample_scene(geom, pv, mu, sigma, seed);
}

Image render_clean(const MeasurementMatrix& M, const SceneTruth& scene, const NoiseSpec& noise) {
    if (scene.brightness.size() != M.n_sites())
        throw ContractError("render_clean: scene does not match the measurement matrix");
    noise.validate(M.n_pixels());
    Image img{M.image_height(), M.image_width(), M.multiply(scene.brightness)};
    for (std::size_t j = 0; j < img.values.size(); ++j) img.values[j] += noise.background_at(j);
    return img;
}

Image corrupt(const Image& clean, const NoiseSpec& noise, std::uint64_t seed) {
    if (clean.values.size() != clean.height * clean.width)
        throw ContractError("corrupt: image size does not match its dimensions");
    noise.validate(clean.values.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double r2 = noise.read_noise_sd * noise.read_noise_sd;
    Image out{clean.height, clean.width, std::vector<double>(clean.values.size())};
    for (std::size_t j = 0; j < clean.values.size(); ++j) {
        const double mean = clean.values[j];
        const double k = noise.background_at(j);
        double v = 0.0;
        if (noise.shot_mode == ShotMode::poisson) {
            if (mean < 0.0) throw ContractError("corrupt: negative clean pixel in poisson mode");
            if (mean > 0.0) {
                std::poisson_distribution<long long> shot(mean);
                v = static_cast<double>(shot(rng));
            }
            if (noise.read_noise_sd > 0.0) v += noise.read_noise_sd * unit(rng);
        } else {
            const double var = std::max(0.0, mean + r2);
            v = mean + (var > 0.0 ? std::sqrt(var) * unit(rng) : 0.0);
        }
        out.values[j] = v - k;
    }
    return out;
}

std::pair<std::uint64_t, std::uint64_t> derive_seeds(std::uint64_t image_seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(image_seed),
                      static_cast<std::uint32_t>(image_seed >> 32), 0x6d696b61u};
    std::array<std::uint32_t, 4> words{};
    seq.generate(words.begin(), words.end());
    return {(std::uint64_t{words[0]} << 32) | words[1], (std::uint64_t{words[2]} << 32) | words[3]};
}

SimulatedImage simulate_image(const ArrayGeometry& geom, const MeasurementMatrix& M, double p,
                              double mu, double sigma, const NoiseSpec& noise,
                              std::uint64_t image_seed) {
    const auto [scene_seed, noise_seed] = derive_seeds(image_seed);
    SimulatedImage sim;
    sim.truth = sample_scene(geom, p, mu, sigma, scene_seed);
    sim.image = corrupt(render_clean(M, sim.truth, noise), noise, noise_seed);
    return sim;
}

}  // namespace mikado
