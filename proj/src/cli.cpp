#include "mikado/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mikado/bench.hpp"
#include "mikado/config.hpp"
#include "mikado/errors.hpp"
#include "mikado/geometry.hpp"
#include "mikado/io.hpp"
#include "mikado/scoring.hpp"

namespace mikado {

namespace {

namespace fs = std::filesystem;

bool same_path(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) return false;
    std::error_code ec;
    if (fs::exists(a, ec) && fs::exists(b, ec)) return fs::equivalent(a, b, ec);
    return fs::weakly_canonical(a, ec) == fs::weakly_canonical(b, ec);
}

void require_distinct(const std::vector<std::pair<std::string, std::string>>& named_paths) {
    for (std::size_t i = 0; i < named_paths.size(); ++i)
        for (std::size_t j = i + 1; j < named_paths.size(); ++j)
            if (same_path(named_paths[i].second, named_paths[j].second))
                throw ParameterError(named_paths[i].first + " and " + named_paths[j].first +
                                     " refer to the same file");
}

RunConfig config_from(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

FinalThresholdMode parse_mode(const std::string& s) {
    if (s == "schedule") return FinalThresholdMode::schedule;
    if (s == "optimized") return FinalThresholdMode::optimized;
    throw ParameterError("threshold mode must be 'schedule' or 'optimized'");
}

std::vector<EstimatorId> parse_estimators(const std::vector<std::string>& names) {
    std::vector<EstimatorId> ids;
    for (const auto& n : names) ids.push_back(parse_estimator(n));
    return ids;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

struct Args {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string plot;
    std::optional<std::size_t> workers;
    std::optional<std::string> threshold_mode;

    // simulate
    std::string truth_out;
    std::string format = "binary";
    // detect
    std::string image;
    std::optional<std::string> estimator;
    std::string truth_in;
    std::string trace;
    // bench
    std::vector<std::string> estimators{"deconv", "apriori", "aposteriori", "mikado"};
    std::vector<double> a_grid;
    std::vector<double> mu_grid;
    std::size_t n_images = 25;
    std::vector<std::size_t> sites{100, 400, 900, 2500, 4900, 10000};
    std::size_t reps = 10;
    std::vector<std::size_t> n_steps_grid{2, 5, 10};
    std::vector<double> t_final_grid{0.2, 0.3, 0.4, 0.5, 0.6};
    std::optional<double> locus_target;
    std::string locus_plot;
    // use-case
    double wavelength = 0.0;
    double na = 0.0;
    double spacing = 0.0;
    std::string bench_csv;
    double target_der = 1e-3;
    std::string use_case_estimator = "mikado";
};

int run_simulate(const Args& a, std::ostream& out) {
    RunConfig cfg = config_from(a.config);
    const std::uint64_t seed = a.seed.value_or(cfg.seed);
    const std::string image_path = a.out.empty() ? cfg.image_out : a.out;
    if (image_path.empty()) throw ParameterError("simulate: no output image path (--out or image_out)");
    std::string truth_path = a.truth_out.empty() ? cfg.truth_out : a.truth_out;
    if (truth_path.empty()) truth_path = image_path + ".truth.csv";
    require_distinct({{"--out", image_path}, {"--truth", truth_path}, {"--config", a.config}});
    if (a.format != "binary" && a.format != "csv") throw ParameterError("--format must be 'binary' or 'csv'");

    const BenchParams params = to_bench_params(cfg);
    const Scenario sc = make_scenario(params);
    const SimulatedImage sim = simulate_image(sc.geom, sc.M, params.p, params.mu, params.sigma(), sc.noise, seed);
    save_image(image_path, sim.image, a.format == "csv" ? ImageFormat::csv : ImageFormat::binary);
    save_truth_csv(truth_path, sim.truth);
    std::size_t filled = 0;
    for (bool b : sim.truth.occupied) filled += b;
    out << "simulated " << sim.image.height << "x" << sim.image.width << " image, " << filled << "/"
        << sim.truth.occupied.size() << " sites occupied, seed " << seed << "\n"
        << "image: " << image_path << "\ntruth: " << truth_path << "\n";
    return 0;
}

int run_detect(const Args& a, std::ostream& out) {
    RunConfig cfg = config_from(a.config);
    if (a.estimator) cfg.estimator = parse_estimator(*a.estimator);
    if (a.threshold_mode) cfg.threshold_mode = parse_mode(*a.threshold_mode);
    const std::string occ_path = a.out.empty() ? cfg.occupancy_out : a.out;
    if (occ_path.empty()) throw ParameterError("detect: no occupancy output path (--out or occupancy_out)");
    const std::string trace_path = a.trace.empty() ? cfg.trace_out : a.trace;
    require_distinct({{"--out", occ_path}, {"--trace", trace_path}, {"--image", a.image},
                      {"--config", a.config}, {"--truth", a.truth_in}});

    const BenchParams params = to_bench_params(cfg);
    const Scenario sc = make_scenario(params);
    const Image y = load_image(a.image);
    if (y.height != sc.geom.image_height || y.width != sc.geom.image_width)
        throw ParameterError("detect: image is " + std::to_string(y.height) + "x" + std::to_string(y.width) +
                             " but the configured geometry needs " + std::to_string(sc.geom.image_height) + "x" +
                             std::to_string(sc.geom.image_width));
    std::optional<SceneTruth> truth;
    if (!a.truth_in.empty()) {
        truth = load_truth_csv(a.truth_in);
        if (truth->occupied.size() != sc.geom.n_sites())
            throw ParameterError("detect: truth CSV has " + std::to_string(truth->occupied.size()) +
                                 " sites, geometry has " + std::to_string(sc.geom.n_sites()));
    }
    if (params.final_mode == FinalThresholdMode::optimized && !truth)
        throw ParameterError("detect: threshold mode 'optimized' needs --truth");

    const bool want_trace = cfg.estimator == EstimatorId::mikado && !trace_path.empty();
    const Detection det =
        run_detection(cfg.estimator, sc, params, y, truth ? &truth->occupied : nullptr, want_trace);
    save_occupancy_csv(occ_path, sc.geom, det.occupancy, det.xhat);
    if (want_trace) save_trace_csv(trace_path, det.trace);

    std::size_t filled = 0;
    for (bool b : det.occupancy) filled += b;
    out << estimator_name(cfg.estimator) << ": " << filled << "/" << det.occupancy.size()
        << " sites occupied, threshold " << det.threshold << "\n";
    if (truth) out << "DER " << detection_error_rate(det.occupancy, truth->occupied) << "\n";
    out << "occupancy: " << occ_path << "\n";
    if (want_trace) out << "trace: " << trace_path << "\n";
    return 0;
}

BenchParams bench_params(const Args& a, RunConfig cfg) {
    if (a.workers) cfg.n_workers = *a.workers;
    BenchParams p = to_bench_params(cfg);
    p.final_mode = a.threshold_mode ? parse_mode(*a.threshold_mode) : FinalThresholdMode::optimized;
    return p;
}

int run_bench_der(const Args& a, std::ostream& out) {
    const RunConfig cfg = config_from(a.config);
    const BenchParams base = bench_params(a, cfg);
    const std::uint64_t seed = a.seed.value_or(cfg.seed);
    if (a.out.empty()) throw ParameterError("bench-der: --out is required");
    const auto ids = parse_estimators(a.estimators);
    const std::vector<double> a_grid = a.a_grid.empty() ? std::vector<double>{base.a_over_rpsf} : a.a_grid;
    const std::vector<double> mu_grid = a.mu_grid.empty() ? std::vector<double>{base.mu} : a.mu_grid;

    std::vector<BenchRecord> records;
    std::vector<PlotSeries> der_series;
    std::vector<PlotSeries> locus_series;
    for (EstimatorId id : ids) {
        std::vector<std::vector<double>> table;
        for (double ar : a_grid) {
            PlotSeries s{std::string(estimator_name(id)) + " a=" + std::to_string(ar).substr(0, 4), {}, {}, {}};
            table.emplace_back();
            for (double mu : mu_grid) {
                BenchParams p = base;
                p.a_over_rpsf = ar;
                p.mu = mu;
                BenchRecord r = run_der_study(id, p, a.n_images, seed);
                out << estimator_name(id) << " a/r_PSF=" << ar << " mu=" << mu << " DER=" << r.der_mean
                    << " +- " << r.der_sd << "\n";
                s.x.push_back(mu);
                s.y.push_back(r.der_mean);
                s.err.push_back(r.der_sd);
                table.back().push_back(r.der_mean);
                records.push_back(std::move(r));
            }
            der_series.push_back(std::move(s));
        }
        if (a.locus_target) {
            PlotSeries ls{std::string(estimator_name(id)), {}, {}, {}};
            for (const auto& pt : der_locus_from_table(*a.locus_target, a_grid, mu_grid, table)) {
                out << "locus " << estimator_name(id) << " a/r_PSF=" << pt.a_over_rpsf << " mu=" << pt.mu << "\n";
                ls.x.push_back(pt.a_over_rpsf);
                ls.y.push_back(pt.mu);
            }
            locus_series.push_back(std::move(ls));
        }
    }
    write_bench_csv(a.out, records);
    if (!a.plot.empty()) write_text(a.plot, svg_line_plot(der_series, "DER vs mu", "mu", "DER", true, true));
    if (!a.locus_plot.empty() && a.locus_target)
        write_text(a.locus_plot, svg_line_plot(locus_series, "DER = " + std::to_string(*a.locus_target) + " locus",
                                               "a / r_PSF", "mu", false, true));
    out << "wrote " << records.size() << " records to " << a.out << "\n";
    return 0;
}

int run_bench_runtime(const Args& a, std::ostream& out) {
    const RunConfig cfg = config_from(a.config);
    const BenchParams base = bench_params(a, cfg);
    const std::uint64_t seed = a.seed.value_or(cfg.seed);
    if (a.out.empty()) throw ParameterError("bench-runtime: --out is required");
    std::vector<BenchRecord> records;
    std::vector<PlotSeries> series;
    for (EstimatorId id : parse_estimators(a.estimators)) {
        PlotSeries s{std::string(estimator_name(id)), {}, {}, {}};
        for (auto& r : run_runtime_study(id, a.sites, base, a.n_images, a.reps, seed)) {
            out << estimator_name(id) << " sites=" << r.n_sites << " runtime=" << r.runtime_mean_s << " s +- "
                << r.runtime_sd_s << "\n";
            s.x.push_back(static_cast<double>(r.n_sites));
            s.y.push_back(r.runtime_mean_s);
            s.err.push_back(r.runtime_sd_s);
            records.push_back(std::move(r));
        }
        series.push_back(std::move(s));
    }
    write_bench_csv(a.out, records);
    if (!a.plot.empty())
        write_text(a.plot, svg_line_plot(series, "runtime vs sites", "sites", "seconds", true, true));
    out << "wrote " << records.size() << " records to " << a.out << "\n";
    return 0;
}

int run_bench_tuning(const Args& a, std::ostream& out) {
    const RunConfig cfg = config_from(a.config);
    const BenchParams base = bench_params(a, cfg);
    const std::uint64_t seed = a.seed.value_or(cfg.seed);
    if (a.out.empty()) throw ParameterError("bench-tuning: --out is required");
    const auto records = run_tuning_study(a.n_steps_grid, a.t_final_grid, base, a.n_images, seed);
    PlotSeries by_n{"DER vs N", {}, {}, {}}, by_t{"DER vs t_final/mu", {}, {}, {}};
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        const bool n_sweep = k < a.n_steps_grid.size();
        out << (n_sweep ? "N=" + std::to_string(r.n_steps) : "t_final/mu=" + std::to_string(r.t_final_over_mu))
            << " DER=" << r.der_mean << " +- " << r.der_sd << "\n";
        PlotSeries& s = n_sweep ? by_n : by_t;
        s.x.push_back(n_sweep ? static_cast<double>(r.n_steps) : r.t_final_over_mu);
        s.y.push_back(r.der_mean);
        s.err.push_back(r.der_sd);
    }
    write_bench_csv(a.out, records);
    if (!a.plot.empty()) {
        const fs::path p(a.plot);
        const std::string stem = (p.parent_path() / p.stem()).string();
        write_text(stem + "_steps.svg", svg_line_plot({by_n}, "DER vs number of steps", "N", "DER"));
        write_text(stem + "_tfinal.svg", svg_line_plot({by_t}, "DER vs final threshold", "t_final / mu", "DER"));
    }
    out << "wrote " << records.size() << " records to " << a.out << "\n";
    return 0;
}

int run_use_case(const Args& a, std::ostream& out) {
    const double ratio = diffraction_ratio(a.wavelength, a.na, a.spacing);
    out << std::setprecision(4) << "a/r_PSF = " << ratio << "\n";
    if (!a.bench_csv.empty()) {
        const EstimatorId id = parse_estimator(a.use_case_estimator);
        const auto records = read_bench_csv(a.bench_csv);
        const auto mu = mu_for_target(records, id, ratio, a.target_der);
        if (mu)
            out << "mu for DER " << a.target_der << " (" << estimator_name(id) << "): " << *mu << "\n";
        else
            out << "DER " << a.target_der << " not reached by " << estimator_name(id) << " in " << a.bench_csv
                << "\n";
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Site occupancy detection in images of microtrap arrays", "mikado"};
    app.require_subcommand(1);
    Args a;

    auto* sim = app.add_subcommand("simulate", "Simulate an image and its ground truth");
    sim->add_option("--config", a.config, "JSON run configuration");
    sim->add_option("--seed", a.seed, "Image seed (overrides the config)");
    sim->add_option("--out", a.out, "Output image path");
    sim->add_option("--truth", a.truth_out, "Output truth CSV (default <out>.truth.csv)");
    sim->add_option("--format", a.format, "binary or csv");

    auto* det = app.add_subcommand("detect", "Estimate site occupancy from an image");
    det->add_option("--config", a.config, "JSON run configuration");
    det->add_option("--image", a.image, "Input image")->required();
    det->add_option("--estimator", a.estimator, "deconv, apriori, aposteriori or mikado");
    det->add_option("--threshold-mode", a.threshold_mode, "schedule or optimized (needs --truth)");
    det->add_option("--truth", a.truth_in, "Truth CSV; enables DER reporting");
    det->add_option("--out", a.out, "Output occupancy CSV");
    det->add_option("--trace", a.trace, "Per-step trace CSV (mikado)");

    auto add_bench_common = [&](CLI::App* sc) {
        sc->add_option("--config", a.config, "JSON run configuration");
        sc->add_option("--seed", a.seed, "First image seed; image i uses seed + i");
        sc->add_option("--n-images", a.n_images, "Images per grid point");
        sc->add_option("--out", a.out, "Output CSV");
        sc->add_option("--plot", a.plot, "Optional SVG plot");
        sc->add_option("--workers", a.workers, "Worker threads (default: available cores)");
        sc->add_option("--threshold-mode", a.threshold_mode, "optimized (default) or schedule");
    };
    auto* bder = app.add_subcommand("bench-der", "DER study over a/r_PSF and mu grids");
    add_bench_common(bder);
    bder->add_option("--estimators", a.estimators, "Comma-separated estimators")->delimiter(',');
    bder->add_option("--a-grid", a.a_grid, "a/r_PSF values")->delimiter(',');
    bder->add_option("--mu-grid", a.mu_grid, "mu values")->delimiter(',');
    bder->add_option("--locus-target", a.locus_target, "Report the DER locus for this target");
    bder->add_option("--locus-plot", a.locus_plot, "SVG plot of the loci");

    auto* brt = app.add_subcommand("bench-runtime", "Runtime vs number of sites");
    add_bench_common(brt);
    brt->add_option("--estimators", a.estimators, "Comma-separated estimators")->delimiter(',');
    brt->add_option("--sites", a.sites, "Site counts (ascending)")->delimiter(',');
    brt->add_option("--reps", a.reps, "Repetitions per image");

    auto* btu = app.add_subcommand("bench-tuning", "DER vs number of steps and final threshold");
    add_bench_common(btu);
    btu->add_option("--n-steps", a.n_steps_grid, "Step counts")->delimiter(',');
    btu->add_option("--t-final", a.t_final_grid, "Final thresholds over mu")->delimiter(',');

    auto* uc = app.add_subcommand("use-case", "Spacing ratio of an experiment and the mu it needs");
    uc->add_option("--wavelength", a.wavelength, "Wavelength (m)")->required();
    uc->add_option("--na", a.na, "Numerical aperture")->required();
    uc->add_option("--spacing", a.spacing, "Trap spacing (m)")->required();
    uc->add_option("--bench-csv", a.bench_csv, "bench-der CSV to look up");
    uc->add_option("--target-der", a.target_der, "Target DER");
    uc->add_option("--estimator", a.use_case_estimator, "Estimator to look up");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (sim->parsed()) return run_simulate(a, out);
        if (det->parsed()) return run_detect(a, out);
        if (bder->parsed()) return run_bench_der(a, out);
        if (brt->parsed()) return run_bench_runtime(a, out);
        if (btu->parsed()) return run_bench_tuning(a, out);
        if (uc->parsed()) return run_use_case(a, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace mikado
