#include <gtest/gtest.h>

#include <cmath>

#include "mikado/errors.hpp"
#include "mikado/geometry.hpp"
#include "test_support.hpp"

using namespace mikado;
using mikado::testing::dense_measurement;
using mikado::testing::to_eigen;

TEST(Geometry, SingleSiteFrame) {
    const auto g = build_geometry(1, 1, 2.5, 10.0);
    ASSERT_EQ(g.n_sites(), 1u);
    EXPECT_EQ(g.site_centers[0], (SiteCenter{10.0, 10.0}));
    EXPECT_EQ(g.image_height, 21u);
    EXPECT_EQ(g.image_width, 21u);
}

TEST(Geometry, FiftyByFiftyLattice) {
    const auto g = build_geometry(50, 50, 2.5, 10.0);
    ASSERT_EQ(g.n_sites(), 2500u);
    EXPECT_DOUBLE_EQ(g.site_centers[1].col - g.site_centers[0].col, 2.5);
    EXPECT_DOUBLE_EQ(g.site_centers[50].row - g.site_centers[0].row, 2.5);
}

TEST(Geometry, LatticeArithmetic) {
    const auto g = build_geometry(2, 3, 4.0, 8.0);
    ASSERT_EQ(g.n_sites(), 6u);
    EXPECT_EQ(g.site_centers[g.site_index(1, 2)], (SiteCenter{12.0, 16.0}));
}

TEST(Geometry, RejectsBadParameters) {
    EXPECT_THROW(build_geometry(0, 3, 4.0, 8.0), ParameterError);
    EXPECT_THROW(build_geometry(2, 3, -1.0, 8.0), ParameterError);
}

TEST(Psf, WeightValues) {
    const auto psf = PSFModel::gaussian(2.0, 4.0);
    EXPECT_DOUBLE_EQ(psf_weight(psf, 0, 0), 1.0);
    EXPECT_NEAR(psf_weight(psf, 2, 0), 0.5, 1e-15);
    EXPECT_EQ(psf_weight(psf, 30, 0), 0.0);
}

TEST(MeasurementMatrix, SingleColumnSumsToOne) {
    for (double h : {0.7, 2.0, 3.3}) {
        const auto psf = PSFModel::gaussian(h, 4.0);
        const auto g = build_geometry(1, 1, 1.0, std::ceil(psf.truncation_radius_px) + 2);
        const auto M = build_measurement_matrix(g, psf);
        double s = 0.0;
        for (double v : M.col_values()) s += v;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(MeasurementMatrix, ColumnsNonnegativeUnitSumAndBoundedSupport) {
    const auto s = mikado::testing::small_scene(6);
    const auto M = s.M;
    const auto cp = M.col_ptr();
    const double bound = M_PI * std::pow(s.psf.truncation_radius_px + 1.0, 2);
    for (std::size_t j = 0; j < M.n_sites(); ++j) {
        double sum = 0.0;
        for (std::size_t q = cp[j]; q < cp[j + 1]; ++q) {
            EXPECT_GE(M.col_values()[q], 0.0);
            sum += M.col_values()[q];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_LE(static_cast<double>(cp[j + 1] - cp[j]), bound);
    }
}

TEST(MeasurementMatrix, DistantSitesHaveDisjointSupport) {
    const auto psf = PSFModel::gaussian(2.0, 4.0);
    const auto g = build_geometry(1, 2, 40.0, 10.0);
    const auto M = build_measurement_matrix(g, psf);
    const auto D = to_eigen(M.to_dense(), M.n_pixels(), M.n_sites());
    const Eigen::MatrixXd G = D.transpose() * D;
    EXPECT_NEAR(G(0, 1), 0.0, 1e-12);
    EXPECT_GT(G(0, 0), 0.0);
}

TEST(MeasurementMatrix, GramMatchesDenseGaussianConstruction) {
    const auto s = mikado::testing::small_scene(3);
    const auto D = to_eigen(s.M.to_dense(), s.M.n_pixels(), s.M.n_sites());
    const auto O = dense_measurement(s.geom, 2.0, s.psf.truncation_radius_px);
    EXPECT_LT((D - O).cwiseAbs().maxCoeff(), 1e-14);
    const Eigen::MatrixXd G = D.transpose() * D;
    const Eigen::MatrixXd GO = O.transpose() * O;
    EXPECT_GT(G(4, 1), 0.0);  // center and its upper neighbour overlap
    EXPECT_NEAR(G(4, 1), GO(4, 1), 1e-14);
    EXPECT_LT((G - GO).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MeasurementMatrix, RowAndColumnViewsAgree) {
    const auto s = mikado::testing::small_scene(4);
    const auto& M = s.M;
    std::vector<double> x(M.n_sites());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + 0.1 * static_cast<double>(i);
    const auto y = M.multiply(x);
    const auto D = to_eigen(M.to_dense(), M.n_pixels(), M.n_sites());
    const Eigen::VectorXd yo = D * mikado::testing::to_vec(x);
    for (std::size_t j = 0; j < y.size(); ++j) EXPECT_NEAR(y[j], yo(static_cast<Eigen::Index>(j)), 1e-12);
    const auto z = M.multiply_transpose(y);
    const Eigen::VectorXd zo = D.transpose() * yo;
    for (std::size_t j = 0; j < z.size(); ++j) EXPECT_NEAR(z[j], zo(static_cast<Eigen::Index>(j)), 1e-12);
    const auto pos = M.col_to_row_position();
    for (std::size_t j = 0; j < M.n_sites(); ++j)
        for (std::size_t q = M.col_ptr()[j]; q < M.col_ptr()[j + 1]; ++q) {
            EXPECT_EQ(M.row_sites()[pos[q]], j);
            EXPECT_EQ(M.row_values()[pos[q]], M.col_values()[q]);
        }
}

TEST(MeasurementMatrix, IntegerShiftPermutesRowsOnly) {
    const auto psf = PSFModel::gaussian(2.0, 4.0);
    const auto a = build_measurement_matrix(build_geometry(3, 3, 2.5, 10.0), psf);
    const auto b = build_measurement_matrix(build_geometry(3, 3, 2.5, 13.0), psf);
    ASSERT_EQ(a.n_sites(), b.n_sites());
    for (std::size_t j = 0; j < a.n_sites(); ++j) {
        std::vector<double> ca(a.col_values().begin() + a.col_ptr()[j], a.col_values().begin() + a.col_ptr()[j + 1]);
        std::vector<double> cb(b.col_values().begin() + b.col_ptr()[j], b.col_values().begin() + b.col_ptr()[j + 1]);
        std::sort(ca.begin(), ca.end());
        std::sort(cb.begin(), cb.end());
        EXPECT_EQ(ca, cb);
    }
}

TEST(MeasurementMatrix, TruncationLeavingFrameIsGeometryError) {
    const auto psf = PSFModel::gaussian(2.0, 4.0);
    EXPECT_THROW(build_measurement_matrix(build_geometry(2, 2, 2.5, 3.0), psf), GeometryError);
}

TEST(MeasurementMatrix, SelectColumnsKeepsChosenSites) {
    const auto s = mikado::testing::small_scene(3);
    const std::vector<std::size_t> keep{1, 4, 8};
    const auto sub = s.M.select_columns(keep);
    const auto D = to_eigen(s.M.to_dense(), s.M.n_pixels(), s.M.n_sites());
    const auto S = to_eigen(sub.to_dense(), sub.n_pixels(), sub.n_sites());
    for (std::size_t k = 0; k < keep.size(); ++k)
        EXPECT_EQ((S.col(static_cast<Eigen::Index>(k)) - D.col(static_cast<Eigen::Index>(keep[k]))).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DiffractionRatio, Values) {
    EXPECT_NEAR(diffraction_ratio(401e-9, 0.85, 266e-9), 1.1, 0.01);
    const double lambda = 780e-9, na = 0.7;
    EXPECT_NEAR(diffraction_ratio(lambda, na, 0.514 * lambda / na), 1.0, 1e-12);
    EXPECT_NEAR(diffraction_ratio(500e-9, 0.5, 514e-9), 1.0, 1e-12);
    EXPECT_THROW(diffraction_ratio(500e-9, 1.2, 514e-9), ParameterError);
    EXPECT_THROW(diffraction_ratio(-1.0, 0.5, 514e-9), ParameterError);
}
