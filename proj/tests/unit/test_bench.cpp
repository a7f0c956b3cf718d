#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "mikado/bench.hpp"
#include "mikado/errors.hpp"
#include "mikado/scoring.hpp"

using namespace mikado;

namespace {

/// Minimum DER over every threshold placed at or just above the values.
double exhaustive_min_der(const std::vector<double>& x, const Occupancy& truth) {
    std::vector<double> cand(x);
    cand.push_back(std::nextafter(*std::max_element(x.begin(), x.end()), INFINITY));
    double best = 2.0;
    for (double t : cand) {
        Occupancy pred(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) pred[i] = x[i] >= t;
        best = std::min(best, detection_error_rate(pred, truth));
    }
    return best;
}

BenchParams small_params(std::size_t side = 10) {
    BenchParams p;
    p.rows = p.cols = side;
    p.n_workers = 1;
    return p;
}

}  // namespace

TEST(Der, Examples) {
    const Occupancy t{true, false, true, true};
    EXPECT_EQ(detection_error_rate(t, t), 0.0);
    Occupancy neg(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) neg[i] = !t[i];
    EXPECT_EQ(detection_error_rate(neg, t), 1.0);
    Occupancy big(2500, false), pred(2500, false);
    pred[3] = pred[700] = pred[2499] = true;
    EXPECT_DOUBLE_EQ(detection_error_rate(pred, big), 0.0012);
    EXPECT_THROW(detection_error_rate(Occupancy{true}, Occupancy{true, false}), ContractError);
}

TEST(Der, PermutationInvariant) {
    std::mt19937_64 rng(3);
    std::bernoulli_distribution b(0.5);
    Occupancy pred(200), truth(200);
    for (std::size_t i = 0; i < 200; ++i) {
        pred[i] = b(rng);
        truth[i] = b(rng);
    }
    std::vector<std::size_t> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Occupancy pp(200), tp(200);
    for (std::size_t i = 0; i < 200; ++i) {
        pp[i] = pred[perm[i]];
        tp[i] = truth[perm[i]];
    }
    EXPECT_EQ(detection_error_rate(pred, truth), detection_error_rate(pp, tp));
}

TEST(OptimalThreshold, SeparableMidpoint) {
    const auto c = optimal_threshold(std::vector<double>{0, 500}, Occupancy{false, true});
    EXPECT_EQ(c.threshold, 250.0);
    EXPECT_EQ(c.der, 0.0);
}

TEST(OptimalThreshold, AllEmptyTruth) {
    const std::vector<double> x{3, -1, 7, 2};
    const auto c = optimal_threshold(x, Occupancy(4, false));
    EXPECT_GT(c.threshold, 7.0);
    EXPECT_EQ(c.der, 0.0);
    EXPECT_EQ(apply_threshold(x, c.threshold), Occupancy(4, false));
}

TEST(OptimalThreshold, AllFilledTruth) {
    const std::vector<double> x{3, -1, 7, 2};
    const auto c = optimal_threshold(x, Occupancy(4, true));
    EXPECT_EQ(c.threshold, -1.0);
    EXPECT_EQ(c.der, 0.0);
}

TEST(OptimalThreshold, MatchesExhaustiveScan) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0, 1);
    std::bernoulli_distribution b(0.5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = trial < 100 ? 20 : 1000;
        std::vector<double> x(n);
        Occupancy t(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = b(rng);
            x[i] = std::round((g(rng) + (t[i] ? 1.0 : 0.0)) * 4) / 4;  // ties included
        }
        const auto c = optimal_threshold(x, t);
        EXPECT_DOUBLE_EQ(c.der, exhaustive_min_der(x, t));
        EXPECT_DOUBLE_EQ(detection_error_rate(apply_threshold(x, c.threshold), t), c.der);
    }
}

TEST(Estimators, NamesRoundTrip) {
    for (auto id : {EstimatorId::deconv, EstimatorId::apriori, EstimatorId::aposteriori, EstimatorId::mikado})
        EXPECT_EQ(parse_estimator(estimator_name(id)), id);
    EXPECT_THROW(parse_estimator("median"), ParameterError);
}

TEST(Locus, LogLinearInterpolation) {
    const auto pts = der_locus_from_table(1e-3, {1.0}, {100.0, 1000.0}, {{0.01, 0.0001}});
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_NEAR(pts[0].mu, std::sqrt(1e5), 1e-9);
    EXPECT_NEAR(pts[0].mu, 316.0, 0.5);
}

TEST(Locus, NoCrossingGivesEmptyLocus) {
    EXPECT_TRUE(der_locus_from_table(0.5, {1.0, 2.0}, {100, 1000}, {{0.4, 0.4}, {0.4, 0.4}}).empty());
}

TEST(Locus, CrossingsOnlyWhereTheyExist) {
    const auto pts =
        der_locus_from_table(1e-3, {1.0, 1.5, 2.0}, {100, 1000, 10000}, {{0.5, 0.1, 0.01}, {0.1, 1e-2, 0.0}, {0.0, 0.0, 0.0}});
    // a = 1.0 never reaches the target; a = 2.0 is below it over the whole grid
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0].a_over_rpsf, 1.5);
    EXPECT_GT(pts[0].mu, 1000.0);
    EXPECT_LT(pts[0].mu, 10000.0);
}

TEST(DerStudy, ReproducibleAndSeeded) {
    auto p = small_params();
    const auto a = run_der_study(EstimatorId::mikado, p, 3, 42);
    const auto b = run_der_study(EstimatorId::mikado, p, 3, 42);
    EXPECT_EQ(a.der_mean, b.der_mean);
    EXPECT_EQ(a.per_image_der, b.per_image_der);
    EXPECT_EQ(a.seed, 42u);
    EXPECT_EQ(a.n_images, 3u);
    p.n_workers = 3;
    const auto c = run_der_study(EstimatorId::mikado, p, 3, 42);
    EXPECT_EQ(a.per_image_der, c.per_image_der);
}

TEST(DerStudy, HighPhotonCountResolvedRegimeIsErrorFree) {
    auto p = small_params();
    p.a_over_rpsf = 2.5;
    p.mu = 1e6;
    for (auto id : {EstimatorId::deconv, EstimatorId::apriori, EstimatorId::aposteriori, EstimatorId::mikado}) {
        const auto r = run_der_study(id, p, 3, 7);
        EXPECT_EQ(r.der_mean, 0.0) << estimator_name(id);
    }
}

TEST(DerStudy, SingleImageMatchesDirectDetection) {
    const auto p = small_params(12);
    const auto rec = run_der_study(EstimatorId::aposteriori, p, 1, 9);
    const auto sc = make_scenario(p);
    const auto sim = simulate_image(sc.geom, sc.M, p.p, p.mu, p.sigma(), sc.noise, 9);
    const auto d = run_detection(EstimatorId::aposteriori, sc, p, sim.image, &sim.truth.occupied);
    EXPECT_EQ(rec.der_mean, detection_error_rate(d.occupancy, sim.truth.occupied));
}

TEST(RuntimeStudy, RecordsPerSiteCount) {
    auto p = small_params();
    p.n_steps = 5;
    const auto recs = run_runtime_study(EstimatorId::mikado, {100, 400}, p, 1, 2, 1);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].n_sites, 100u);
    EXPECT_EQ(recs[1].n_sites, 400u);
    EXPECT_GT(recs[0].runtime_mean_s, 0.0);
    EXPECT_GT(recs[1].runtime_mean_s, recs[0].runtime_mean_s);
}

TEST(TuningStudy, SweepsStepsThenFinalThreshold) {
    const auto p = small_params();
    const auto recs = run_tuning_study({2, 5}, {0.3, 0.5}, p, 2, 1);
    ASSERT_EQ(recs.size(), 4u);
    EXPECT_EQ(recs[0].n_steps, 2u);
    EXPECT_EQ(recs[1].n_steps, 5u);
    EXPECT_EQ(recs[0].final_mode, FinalThresholdMode::optimized);
    EXPECT_EQ(recs[2].t_final_over_mu, 0.3);
    EXPECT_EQ(recs[3].t_final_over_mu, 0.5);
    EXPECT_EQ(recs[2].final_mode, FinalThresholdMode::schedule);
}

TEST(BenchCsv, RoundTripAndLookup) {
    std::vector<BenchRecord> recs;
    for (double a : {1.0, 1.5})
        for (double mu : {100.0, 1000.0}) {
            BenchRecord r;
            r.estimator = EstimatorId::apriori;
            r.a_over_rpsf = a;
            r.mu = mu;
            r.sigma = mu / 10;
            r.p = 0.6;
            r.n_steps = 10;
            r.ilut_tol = 1e-3;
            r.ilut_fill = 1000;
            r.n_images = 5;
            r.seed = 17;
            r.der_mean = mu == 100.0 ? 0.01 : 0.0001;
            r.der_sd = 0.1234567890123;
            r.runtime_mean_s = 0.5;
            r.n_sites = 2500;
            r.t_final_over_mu = 0.4;
            recs.push_back(r);
        }
    const auto path = (std::filesystem::temp_directory_path() / "mikado_bench_roundtrip.csv").string();
    write_bench_csv(path, recs);
    const auto back = read_bench_csv(path);
    std::filesystem::remove(path);
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(to_csv_row(back[i]), to_csv_row(recs[i]));
    EXPECT_EQ(bench_csv_header().rfind("estimator,a_over_rpsf,mu,sigma,p,n_steps,ilut_tol,ilut_fill,n_images,seed,", 0), 0u);

    const auto mu = mu_for_target(back, EstimatorId::apriori, 1.1, 1e-3);
    ASSERT_TRUE(mu.has_value());
    EXPECT_NEAR(*mu, std::sqrt(1e5), 1e-6);
    EXPECT_FALSE(mu_for_target(back, EstimatorId::mikado, 1.1, 1e-3).has_value());
}

TEST(Plot, SvgIsWellFormed) {
    const auto svg = svg_line_plot({{"a", {1, 2, 3}, {0.1, 0.01, 0.001}, {}}}, "t", "x", "y", false, true);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
