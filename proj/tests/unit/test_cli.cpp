#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mikado/bench.hpp"
#include "mikado/cli.hpp"
#include "mikado/config.hpp"
#include "mikado/io.hpp"
#include "mikado/scoring.hpp"

using namespace mikado;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "mikado");
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mikado_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
        std::ofstream(path("c.cfg")) << R"({"rows": 12, "cols": 12, "a_over_rpsf": 1.25, "mu": 500})";
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateIsDeterministic) {
    const auto a = run({"simulate", "--config", path("c.cfg"), "--seed", "7", "--out", path("a.bin")});
    const auto b = run({"simulate", "--config", path("c.cfg"), "--seed", "7", "--out", path("b.bin")});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(path("a.bin")), slurp(path("b.bin")));
    EXPECT_EQ(slurp(path("a.bin.truth.csv")), slurp(path("b.bin.truth.csv")));
    EXPECT_FALSE(slurp(path("a.bin")).empty());
}

TEST_F(Cli, DetectMatchesBenchPath) {
    const std::uint64_t seed = 11;
    ASSERT_EQ(run({"simulate", "--config", path("c.cfg"), "--seed", std::to_string(seed), "--out", path("img.bin")}).code, 0);
    const auto d = run({"detect", "--config", path("c.cfg"), "--image", path("img.bin"), "--estimator", "mikado",
                        "--threshold-mode", "optimized", "--truth", path("img.bin.truth.csv"), "--out",
                        path("occ.csv"), "--trace", path("trace.csv")});
    ASSERT_EQ(d.code, 0) << d.err;
    const auto occ = load_occupancy_csv(path("occ.csv"));
    const auto truth = load_truth_csv(path("img.bin.truth.csv"));
    const double cli_der = detection_error_rate(occ, truth.occupied);

    RunConfig cfg = load_config(path("c.cfg"));
    cfg.threshold_mode = FinalThresholdMode::optimized;
    BenchParams p = to_bench_params(cfg);
    p.n_workers = 1;
    const auto rec = run_der_study(EstimatorId::mikado, p, 1, seed);
    EXPECT_EQ(cli_der, rec.der_mean);
    EXPECT_EQ(slurp(path("trace.csv")).rfind("step,t_low,t_high,site_index,label,xhat\n", 0), 0u);
}

TEST_F(Cli, DetectScheduleModeWithoutTruth) {
    ASSERT_EQ(run({"simulate", "--config", path("c.cfg"), "--out", path("img.bin")}).code, 0);
    for (const char* est : {"deconv", "apriori", "aposteriori", "mikado"}) {
        const auto d = run({"detect", "--config", path("c.cfg"), "--image", path("img.bin"), "--estimator", est,
                            "--out", path(std::string(est) + ".csv")});
        EXPECT_EQ(d.code, 0) << est << ": " << d.err;
        EXPECT_EQ(load_occupancy_csv(path(std::string(est) + ".csv")).size(), 144u);
    }
}

TEST_F(Cli, UseCaseRatio) {
    const auto r = run({"use-case", "--wavelength", "401e-9", "--na", "0.85", "--spacing", "266e-9"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto pos = r.out.find("a/r_PSF = ");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_NEAR(std::stod(r.out.substr(pos + 10)), 1.1, 0.01);
}

TEST_F(Cli, BenchDerWritesCsvAndUseCaseReadsIt) {
    const auto b = run({"bench-der", "--config", path("c.cfg"), "--estimators", "mikado", "--a-grid", "1.1",
                        "--mu-grid", "100,1000", "--n-images", "2", "--workers", "1", "--out", path("d.csv"),
                        "--plot", path("d.svg")});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(read_bench_csv(path("d.csv")).size(), 2u);
    EXPECT_EQ(slurp(path("d.svg")).rfind("<svg", 0), 0u);
    const auto u = run({"use-case", "--wavelength", "401e-9", "--na", "0.85", "--spacing", "266e-9", "--bench-csv",
                        path("d.csv"), "--target-der", "0.5"});
    ASSERT_EQ(u.code, 0) << u.err;
    EXPECT_NE(u.out.find("mu for DER"), std::string::npos);
}

TEST_F(Cli, ErrorsReturnNonzeroWithMessage) {
    std::ofstream(path("bad.cfg")) << R"({"a_over_rpsf": -1})";
    const auto r = run({"simulate", "--config", path("bad.cfg"), "--out", path("x.bin")});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("a_over_rpsf"), std::string::npos);
    EXPECT_NE(run({"frobnicate"}).code, 0);
    EXPECT_NE(run({"detect", "--image", path("missing.bin"), "--out", path("o.csv")}).code, 0);
    // input and output must differ
    ASSERT_EQ(run({"simulate", "--config", path("c.cfg"), "--out", path("img.bin")}).code, 0);
    const auto before = slurp(path("img.bin"));
    EXPECT_NE(run({"detect", "--config", path("c.cfg"), "--image", path("img.bin"), "--out", path("img.bin")}).code, 0);
    EXPECT_EQ(slurp(path("img.bin")), before);
}
