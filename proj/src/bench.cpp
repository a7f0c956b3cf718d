#include "mikado/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "mikado/baselines.hpp"
#include "mikado/errors.hpp"
#include "mikado/scoring.hpp"

namespace mikado {

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kFixedColumns[] = {"estimator", "a_over_rpsf", "mu",        "sigma",
                                         "p",         "n_steps",     "ilut_tol",  "ilut_fill",
                                         "n_images",  "seed",        "der_mean",  "der_sd",
                                         "runtime_mean_s", "runtime_sd_s"};
constexpr const char* kTrailingColumns[] = {"n_sites", "t_final_over_mu", "final_mode", "threshold_mean"};

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// sample standard deviation; 0 for fewer than two values
double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs body(i) for i in [0, n) on a small pool; the first exception wins.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F body) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

BenchRecord blank_record(EstimatorId id, const BenchParams& params, std::size_t n_images,
                         std::uint64_t seed) {
    BenchRecord r;
    r.estimator = id;
    r.a_over_rpsf = params.a_over_rpsf;
    r.mu = params.mu;
    r.sigma = params.sigma();
    r.p = params.p;
    r.n_steps = params.n_steps;
    r.ilut_tol = params.solver.ilut.drop_tol;
    r.ilut_fill = params.solver.ilut.fill_limit;
    r.n_images = n_images;
    r.seed = seed;
    r.n_sites = params.n_sites();
    r.t_final_over_mu = params.t_final_over_mu;
    r.final_mode = params.final_mode;
    return r;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string_view estimator_name(EstimatorId id) {
    switch (id) {
        case EstimatorId::deconv: return "deconv";
        case EstimatorId::apriori: return "apriori";
        case EstimatorId::aposteriori: return "aposteriori";
        case EstimatorId::mikado: return "mikado";
    }
    return "unknown";
}

EstimatorId parse_estimator(std::string_view name) {
    for (EstimatorId id : {EstimatorId::deconv, EstimatorId::apriori, EstimatorId::aposteriori,
                           EstimatorId::mikado})
        if (estimator_name(id) == name) return id;
    throw ParameterError("unknown estimator '" + std::string(name) +
                         "' (expected deconv, apriori, aposteriori or mikado)");
}

void BenchParams::validate() const {
    if (rows == 0 || cols == 0) throw ParameterError("BenchParams: rows and cols must be positive");
    if (!(a_over_rpsf > 0.0)) throw ParameterError("BenchParams: a_over_rpsf must be positive");
    if (!(hwhm_px > 0.0)) throw ParameterError("BenchParams: hwhm_px must be positive");
    if (!(trunc_factor >= 3.0)) throw ParameterError("BenchParams: trunc_factor must be >= 3");
    if (!(mu > 0.0)) throw ParameterError("BenchParams: mu must be positive");
    if (!(sigma_over_mu >= 0.0)) throw ParameterError("BenchParams: sigma must be >= 0");
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("BenchParams: p must lie in [0, 1]");
    if (!(background >= 0.0)) throw ParameterError("BenchParams: background must be >= 0");
    if (!(read_noise_sd >= 0.0)) throw ParameterError("BenchParams: read_noise_sd must be >= 0");
    ThresholdSchedule{0.0, mu, t_final_over_mu * mu, n_steps}.validate();
    solver.ilut.validate();
    solver.cg.validate();
    if (p_grid.empty()) throw ParameterError("BenchParams: p_grid must not be empty");
    for (double q : p_grid)
        if (!(q > 0.0 && q < 1.0)) throw ParameterError("BenchParams: p_grid values must lie in (0, 1)");
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ParameterError("BenchParams: clamp_eps must lie in (0, 0.5)");
    if (!(nsr >= 0.0)) throw ParameterError("BenchParams: nsr must be >= 0");
    if (!(bin_radius_over_a > 0.0)) throw ParameterError("BenchParams: bin_radius_over_a must be positive");
}

Scenario make_scenario(const BenchParams& params) {
    params.validate();
    Scenario s;
    s.psf = PSFModel::gaussian(params.hwhm_px, params.trunc_factor);
    const double margin = std::ceil(s.psf.truncation_radius_px) + 2.0;
    s.geom = build_geometry(params.rows, params.cols, params.spacing_px(), margin);
    s.M = build_measurement_matrix(s.geom, s.psf);
    s.noise.background = params.background;
    s.noise.read_noise_sd = params.read_noise_sd;
    s.noise.shot_mode = params.shot_mode;
    return s;
}

Detection run_detection(EstimatorId id, const Scenario& scenario, const BenchParams& params,
                        const Image& y, const Occupancy* truth, bool keep_trace) {
    const bool optimized = params.final_mode == FinalThresholdMode::optimized;
    if (optimized && truth == nullptr)
        throw ParameterError("run_detection: optimized threshold mode requires ground truth");
    if (truth != nullptr && truth->size() != scenario.M.n_sites())
        throw ContractError("run_detection: truth does not match the site count");
    const double mu = params.mu;
    const double sigma = params.sigma();
    Detection d;

    switch (id) {
        case EstimatorId::deconv: {
            double nsr = params.nsr;
            if (nsr <= 0.0)
                nsr = params.nsr_mode == NsrMode::model
                          ? model_nsr(scenario.M, params.p, mu, sigma, scenario.noise)
                          : measured_nsr(y, scenario.noise.read_noise_sd);
            d.xhat = deconvolve_and_bin(y, scenario.psf, scenario.geom, nsr,
                                        params.bin_radius_over_a * params.spacing_px());
            break;
        }
        case EstimatorId::apriori: {
            AprioriResult r = apriori_estimate(y, scenario.M, scenario.noise, mu, sigma, params.p_grid,
                                               params.solver, params.clamp_eps);
            d.xhat = std::move(r.estimate.xhat);
            d.chosen_p = r.chosen_p;
            break;
        }
        case EstimatorId::aposteriori: {
            const AprioriResult r = apriori_estimate(y, scenario.M, scenario.noise, mu, sigma, params.p_grid,
                                                     params.solver, params.clamp_eps);
            d.xhat = aposteriori_from(r, y, scenario.M, scenario.noise, mu, sigma, params.solver,
                                      params.clamp_eps)
                         .xhat;
            d.chosen_p = r.chosen_p;
            break;
        }
        case EstimatorId::mikado: {
            MikadoOptions opt;
            opt.schedule = {0.0, mu, params.t_final_over_mu * mu, params.n_steps};
            opt.solver = params.solver;
            opt.clamp_eps = params.clamp_eps;
            opt.final_mode = params.final_mode;
            opt.keep_trace = keep_trace;
            MikadoResult r = mikado_estimate(y, scenario.M, scenario.noise, mu, sigma, opt,
                                             optimized ? truth : nullptr);
            d.xhat = std::move(r.estimate.xhat);
            d.occupancy = std::move(r.occupancy);
            d.threshold = r.final_threshold;
            d.trace = std::move(r.trace);
            return d;
        }
    }
    d.threshold = optimized ? optimal_threshold(d.xhat, *truth).threshold : params.t_final_over_mu * mu;
    d.occupancy = apply_threshold(d.xhat, d.threshold);
    return d;
}

BenchRecord run_der_study(EstimatorId id, const BenchParams& params, std::size_t n_images,
                          std::uint64_t seed) {
    if (n_images == 0) throw ParameterError("run_der_study: n_images must be >= 1");
    const Scenario sc = make_scenario(params);
    std::vector<double> der(n_images), runtime(n_images), threshold(n_images);
    parallel_for(n_images, params.n_workers, [&](std::size_t i) {
        const SimulatedImage sim = simulate_image(sc.geom, sc.M, params.p, params.mu, params.sigma(), sc.noise,
                                                  seed + i);
        const auto t0 = Clock::now();
        const Detection det = run_detection(id, sc, params, sim.image, &sim.truth.occupied);
        runtime[i] = seconds_since(t0);
        der[i] = detection_error_rate(det.occupancy, sim.truth.occupied);
        threshold[i] = det.threshold;
    });
    BenchRecord r = blank_record(id, params, n_images, seed);
    r.der_mean = mean_of(der);
    r.der_sd = sd_of(der);
    r.runtime_mean_s = mean_of(runtime);
    r.runtime_sd_s = sd_of(runtime);
    r.threshold_mean = mean_of(threshold);
    r.per_image_der = std::move(der);
    return r;
}

std::vector<BenchRecord> run_runtime_study(EstimatorId id, const std::vector<std::size_t>& site_counts,
                                           const BenchParams& params, std::size_t n_images,
                                           std::size_t n_reps, std::uint64_t seed) {
    if (n_images == 0 || n_reps == 0) throw ParameterError("run_runtime_study: n_images and n_reps must be >= 1");
    if (!std::is_sorted(site_counts.begin(), site_counts.end()))
        throw ParameterError("run_runtime_study: site_counts must be ascending");
    std::vector<BenchRecord> out;
    for (std::size_t count : site_counts) {
        if (count == 0) throw ParameterError("run_runtime_study: site counts must be positive");
        BenchParams pr = params;
        pr.rows = pr.cols = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(count))));
        if (id == EstimatorId::apriori || id == EstimatorId::aposteriori) pr.p_grid = {params.p};
        const Scenario sc = make_scenario(pr);
        std::vector<double> der, runtime;
        for (std::size_t i = 0; i < n_images; ++i) {
            const SimulatedImage sim = simulate_image(sc.geom, sc.M, pr.p, pr.mu, pr.sigma(), sc.noise, seed + i);
            for (std::size_t rep = 0; rep < n_reps; ++rep) {
                const auto t0 = Clock::now();
                const Detection det = run_detection(id, sc, pr, sim.image, &sim.truth.occupied);
                runtime.push_back(seconds_since(t0));
                if (rep == 0) der.push_back(detection_error_rate(det.occupancy, sim.truth.occupied));
            }
        }
        BenchRecord r = blank_record(id, pr, n_images, seed);
        r.der_mean = mean_of(der);
        r.der_sd = sd_of(der);
        r.runtime_mean_s = mean_of(runtime);
        r.runtime_sd_s = sd_of(runtime);
        r.per_image_der = std::move(der);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<BenchRecord> run_tuning_study(const std::vector<std::size_t>& n_steps_grid,
                                          const std::vector<double>& t_final_grid,
                                          const BenchParams& params, std::size_t n_images,
                                          std::uint64_t seed) {
    if (n_steps_grid.empty() || t_final_grid.empty())
        throw ParameterError("run_tuning_study: grids must not be empty");
    std::vector<BenchRecord> out;
    for (std::size_t n : n_steps_grid) {
        BenchParams pr = params;
        pr.n_steps = n;
        pr.final_mode = FinalThresholdMode::optimized;
        out.push_back(run_der_study(EstimatorId::mikado, pr, n_images, seed));
    }
    for (double t : t_final_grid) {
        BenchParams pr = params;
        pr.t_final_over_mu = t;
        pr.final_mode = FinalThresholdMode::schedule;
        out.push_back(run_der_study(EstimatorId::mikado, pr, n_images, seed));
    }
    return out;
}

std::vector<LocusPoint> der_locus_from_table(double target, const std::vector<double>& a_grid,
                                             const std::vector<double>& mu_grid,
                                             const std::vector<std::vector<double>>& der, double der_floor) {
    if (der.size() != a_grid.size()) throw ContractError("der_locus: table rows do not match a_grid");
    if (!std::is_sorted(a_grid.begin(), a_grid.end()) || !std::is_sorted(mu_grid.begin(), mu_grid.end()))
        throw ParameterError("der_locus: grids must be sorted ascending");
    if (!(der_floor > 0.0)) throw ParameterError("der_locus: der_floor must be positive");
    std::vector<LocusPoint> out;
    const double lt = std::log(std::max(target, der_floor));
    for (std::size_t i = 0; i < a_grid.size(); ++i) {
        const auto& row = der[i];
        if (row.size() != mu_grid.size()) throw ContractError("der_locus: table row does not match mu_grid");
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] == target) {
                out.push_back({a_grid[i], mu_grid[j]});
                break;
            }
            if (j + 1 == row.size()) break;
            if ((row[j] - target) * (row[j + 1] - target) >= 0.0) continue;
            const double l0 = std::log(std::max(row[j], der_floor));
            const double l1 = std::log(std::max(row[j + 1], der_floor));
            const double f = l1 == l0 ? 0.5 : (lt - l0) / (l1 - l0);
            const double lm = std::log(mu_grid[j]) + f * (std::log(mu_grid[j + 1]) - std::log(mu_grid[j]));
            out.push_back({a_grid[i], std::exp(lm)});
            break;
        }
    }
    return out;
}

std::vector<LocusPoint> der_locus(EstimatorId id, double target, const std::vector<double>& a_grid,
                                  const std::vector<double>& mu_grid, const BenchParams& params,
                                  std::size_t n_images, std::uint64_t seed, std::vector<BenchRecord>* records) {
    std::vector<std::vector<double>> table(a_grid.size(), std::vector<double>(mu_grid.size()));
    for (std::size_t i = 0; i < a_grid.size(); ++i) {
        for (std::size_t j = 0; j < mu_grid.size(); ++j) {
            BenchParams pr = params;
            pr.a_over_rpsf = a_grid[i];
            pr.mu = mu_grid[j];
            BenchRecord r = run_der_study(id, pr, n_images, seed);
            table[i][j] = r.der_mean;
            if (records) records->push_back(std::move(r));
        }
    }
    return der_locus_from_table(target, a_grid, mu_grid, table);
}

std::optional<double> mu_for_target(const std::vector<BenchRecord>& records, EstimatorId id,
                                    double a_over_rpsf, double target) {
    std::optional<double> best_a;
    for (const auto& r : records) {
        if (r.estimator != id) continue;
        if (!best_a || std::abs(r.a_over_rpsf - a_over_rpsf) < std::abs(*best_a - a_over_rpsf))
            best_a = r.a_over_rpsf;
    }
    if (!best_a) return std::nullopt;
    std::vector<std::pair<double, double>> curve;
    for (const auto& r : records)
        if (r.estimator == id && r.a_over_rpsf == *best_a) curve.emplace_back(r.mu, r.der_mean);
    std::sort(curve.begin(), curve.end());
    if (curve.front().second <= target) return curve.front().first;
    std::vector<double> mus, ders;
    for (const auto& [m, d] : curve) {
        mus.push_back(m);
        ders.push_back(d);
    }
    const auto locus = der_locus_from_table(target, {*best_a}, mus, {ders});
    if (locus.empty()) return std::nullopt;
    return locus.front().mu;
}

std::string bench_csv_header() {
    std::string h;
    for (const char* c : kFixedColumns) h += std::string(h.empty() ? "" : ",") + c;
    for (const char* c : kTrailingColumns) h += std::string(",") + c;
    return h;
}

std::string to_csv_row(const BenchRecord& r) {
    std::ostringstream s;
    s << estimator_name(r.estimator) << ',' << format_double(r.a_over_rpsf) << ',' << format_double(r.mu) << ','
      << format_double(r.sigma) << ',' << format_double(r.p) << ',' << r.n_steps << ','
      << format_double(r.ilut_tol) << ',' << r.ilut_fill << ',' << r.n_images << ',' << r.seed << ','
      << format_double(r.der_mean) << ',' << format_double(r.der_sd) << ',' << format_double(r.runtime_mean_s)
      << ',' << format_double(r.runtime_sd_s) << ',' << r.n_sites << ',' << format_double(r.t_final_over_mu)
      << ',' << (r.final_mode == FinalThresholdMode::optimized ? "optimized" : "schedule") << ','
      << format_double(r.threshold_mean);
    return s.str();
}

void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << bench_csv_header() << '\n';
    for (const auto& r : records) out << to_csv_row(r) << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<BenchRecord> read_bench_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    std::map<std::string, std::size_t> col;
    const auto names = split_csv_line(line);
    for (std::size_t k = 0; k < names.size(); ++k) col[names[k]] = k;
    for (const char* c : kFixedColumns)
        if (!col.count(c)) throw IoError(path + ": missing column '" + c + "'");

    std::vector<BenchRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != names.size())
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(names.size()) +
                          " fields");
        auto get = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
        BenchRecord r;
        try {
            r.estimator = parse_estimator(get("estimator"));
            r.a_over_rpsf = std::stod(get("a_over_rpsf"));
            r.mu = std::stod(get("mu"));
            r.sigma = std::stod(get("sigma"));
            r.p = std::stod(get("p"));
            r.n_steps = std::stoull(get("n_steps"));
            r.ilut_tol = std::stod(get("ilut_tol"));
            r.ilut_fill = std::stoull(get("ilut_fill"));
            r.n_images = std::stoull(get("n_images"));
            r.seed = std::stoull(get("seed"));
            r.der_mean = std::stod(get("der_mean"));
            r.der_sd = std::stod(get("der_sd"));
            r.runtime_mean_s = std::stod(get("runtime_mean_s"));
            r.runtime_sd_s = std::stod(get("runtime_sd_s"));
            if (col.count("n_sites")) r.n_sites = std::stoull(get("n_sites"));
            if (col.count("t_final_over_mu")) r.t_final_over_mu = std::stod(get("t_final_over_mu"));
            if (col.count("final_mode"))
                r.final_mode = get("final_mode") == "schedule" ? FinalThresholdMode::schedule
                                                                : FinalThresholdMode::optimized;
            if (col.count("threshold_mean")) r.threshold_mean = std::stod(get("threshold_mean"));
        } catch (const std::logic_error& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string svg_line_plot(const std::vector<PlotSeries>& series, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel, bool log_x, bool log_y) {
    constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
    auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!log_x || x > 0) && (!log_y || y > 0);
    };

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
            if (!usable(s.x[k], s.y[k])) continue;
            x0 = std::min(x0, tx(s.x[k]));
            x1 = std::max(x1, tx(s.x[k]));
            y0 = std::min(y0, ty(s.y[k]));
            y1 = std::max(y1, ty(s.y[k]));
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x0 == x1) x0 -= 0.5, x1 += 0.5;
    if (y0 == y1) y0 -= 0.5, y1 += 0.5;
    auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4.0;
        const double fy = y0 + (y1 - y0) * k / 4.0;
        const double vx = log_x ? std::pow(10.0, fx) : fx;
        const double vy = log_y ? std::pow(10.0, fy) : fy;
        s << "<text x=\"" << px(vx) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
          << format_double(std::round(vx * 1e4) / 1e4) << "</text>\n"
          << "<text x=\"" << L - 6 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
          << format_double(std::round(vy * 1e6) / 1e6) << "</text>\n";
    }
    s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << xml_escape(xlabel) << "</text>\n"
      << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& sr = series[i];
        const char* color = colors[i % std::size(colors)];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < sr.x.size() && k < sr.y.size(); ++k)
            if (usable(sr.x[k], sr.y[k])) s << px(sr.x[k]) << ',' << py(sr.y[k]) << ' ';
        s << "\"/>\n";
        for (std::size_t k = 0; k < sr.x.size() && k < sr.y.size(); ++k) {
            if (!usable(sr.x[k], sr.y[k])) continue;
            s << "<circle cx=\"" << px(sr.x[k]) << "\" cy=\"" << py(sr.y[k]) << "\" r=\"3\" fill=\"" << color
              << "\"/>\n";
            if (k < sr.err.size() && sr.err[k] > 0) {
                const double lo = sr.y[k] - sr.err[k], hi = sr.y[k] + sr.err[k];
                if (log_y && lo <= 0) continue;
                s << "<line x1=\"" << px(sr.x[k]) << "\" y1=\"" << py(lo) << "\" x2=\"" << px(sr.x[k])
                  << "\" y2=\"" << py(hi) << "\" stroke=\"" << color << "\"/>\n";
            }
        }
        s << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (i + 1) << "\" font-size=\"12\" fill=\"" << color
          << "\">" << xml_escape(sr.name) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace mikado
