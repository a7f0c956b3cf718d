#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <cstring>
#include <random>

#include "mikado/config.hpp"
#include "mikado/errors.hpp"
#include "mikado/io.hpp"

using namespace mikado;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mikado_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
}

std::string key_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

}  // namespace

TEST(Config, MinimalDocumentGetsDefaults) {
    const auto c = parse_config(R"({"rows":50, "cols":50, "a_over_rpsf":1.25, "mu":500})");
    EXPECT_EQ(c.rows, 50u);
    EXPECT_EQ(c.sigma_value(), 50.0);
    EXPECT_EQ(c.read_noise_sd, 1.0);
    EXPECT_EQ(c.background, 0.0);
    EXPECT_EQ(c.hwhm_px, 2.0);
    const auto b = to_bench_params(c);
    EXPECT_DOUBLE_EQ(b.sigma(), 50.0);
    EXPECT_DOUBLE_EQ(b.spacing_px(), 2.5);
}

TEST(Config, ErrorsNameTheKey) {
    EXPECT_EQ(key_of(R"({"a_over_rpsf": -1})"), "a_over_rpsf");
    EXPECT_EQ(key_of(R"({"foo": 1})"), "foo");
    EXPECT_EQ(key_of(R"({"rows": "ten"})"), "rows");
    EXPECT_EQ(key_of(R"({"rows": -3})"), "rows");
    EXPECT_EQ(key_of(R"({"p": 1.5})"), "p");
    EXPECT_EQ(key_of(R"({"shot_mode": "laser"})"), "shot_mode");
    EXPECT_EQ(key_of(R"({"estimator": "median"})"), "estimator");
    EXPECT_EQ(key_of(R"({"p_grid": [0.5, 1.0]})"), "p_grid");
    EXPECT_EQ(key_of(R"({"n_steps": 1})"), "n_steps");
    EXPECT_EQ(key_of("[1, 2]"), "<document>");
    EXPECT_EQ(key_of("{not json"), "<document>");
}

TEST(Config, CommentsAreAccepted) {
    const auto c = parse_config("{\n  // spacing\n  \"a_over_rpsf\": 1.1\n}");
    EXPECT_EQ(c.a_over_rpsf, 1.1);
}

TEST(Config, RoundTrip) {
    RunConfig c;
    c.rows = 7;
    c.cols = 9;
    c.a_over_rpsf = 1.1;
    c.mu = 123.456789012345;
    c.sigma = 0.0;
    c.shot_mode = ShotMode::poisson;
    c.estimator = EstimatorId::aposteriori;
    c.threshold_mode = FinalThresholdMode::optimized;
    c.p_grid = {0.25, 0.75};
    c.nsr_mode = NsrMode::measured;
    c.seed = 18446744073709551615ull;
    c.image_out = "a.bin";
    EXPECT_EQ(parse_config(serialize_config(c)), c);
    EXPECT_EQ(parse_config(serialize_config(RunConfig{})), RunConfig{});
}

TEST_F(TempDir, ZeroImageFileLayout) {
    const Image img{2, 3, std::vector<double>(6, 0.0)};
    save_image(path("z.bin"), img);
    const auto bytes = slurp(path("z.bin"));
    const std::string header = R"({"height":2,"width":3,"dtype":"f64","endian":"little","version":1})";
    ASSERT_EQ(bytes.size(), header.size() + 1 + 48);
    EXPECT_EQ(bytes.substr(0, header.size() + 1), header + "\n");
    EXPECT_EQ(load_image(path("z.bin")), img);
}

TEST_F(TempDir, RandomImageRoundTripIsBitExact) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 1e3);
    Image img{17, 23, {}};
    for (int i = 0; i < 17 * 23; ++i) img.values.push_back(g(rng));
    img.values[5] = -0.0;
    img.values[6] = 5e-324;
    save_image(path("r.bin"), img);
    const auto back = load_image(path("r.bin"));
    ASSERT_EQ(back.values.size(), img.values.size());
    EXPECT_EQ(std::memcmp(back.values.data(), img.values.data(), img.values.size() * 8), 0);
    save_image(path("r.csv"), img, ImageFormat::csv);
    EXPECT_EQ(load_image(path("r.csv")), img);
}

TEST_F(TempDir, CorruptImagesAreRejected) {
    const Image img{2, 3, std::vector<double>(6, 1.0)};
    save_image(path("g.bin"), img);
    const auto bytes = slurp(path("g.bin"));

    spit(path("t.bin"), bytes.substr(0, bytes.size() - 8));
    try {
        load_image(path("t.bin"));
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    }

    std::string v2 = bytes;
    v2.replace(v2.find("\"version\":1"), 11, "\"version\":2");
    spit(path("v.bin"), v2);
    EXPECT_THROW(load_image(path("v.bin")), IoError);

    spit(path("h.bin"), "{\"height\":2,\"width\":3\n" + bytes.substr(bytes.find('\n') + 1));
    EXPECT_THROW(load_image(path("h.bin")), IoError);

    spit(path("x.bin"), bytes + "extra");
    EXPECT_THROW(load_image(path("x.bin")), IoError);

    EXPECT_THROW(load_image(path("missing.bin")), IoError);
}

TEST_F(TempDir, TruthAndOccupancyTables) {
    SceneTruth t{{true, false, true}, {512.25, 0.0, 1e-3}, 0};
    save_truth_csv(path("t.csv"), t);
    const auto back = load_truth_csv(path("t.csv"));
    EXPECT_EQ(back.occupied, t.occupied);
    EXPECT_EQ(back.brightness, t.brightness);

    const auto g = build_geometry(1, 3, 2.5, 10.0);
    save_occupancy_csv(path("o.csv"), g, Occupancy{false, true, true}, {1.0, 2.0, 3.0});
    EXPECT_EQ(load_occupancy_csv(path("o.csv")), (Occupancy{false, true, true}));
    EXPECT_EQ(slurp(path("o.csv")).substr(0, 33), "site_index,row,col,occupied,xhat\n");

    spit(path("bad.csv"), "site_index,occupied,brightness\n0,2,1.0\n");
    EXPECT_THROW(load_truth_csv(path("bad.csv")), IoError);
}
