#include <gtest/gtest.h>

#include <random>

#include "mikado/errors.hpp"
#include "mikado/sparse.hpp"
#include "test_support.hpp"

using namespace mikado;
using mikado::testing::random_spd_dense;
using mikado::testing::to_eigen;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    return v;
}

double rel_residual(const SparseSym& A, const std::vector<double>& x, const std::vector<double>& b) {
    const auto ax = A.multiply(x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        num += (ax[i] - b[i]) * (ax[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST(SparseSym, FromDenseRoundTripAndAccess) {
    const auto d = random_spd_dense(12, 0.3, 4);
    const auto A = SparseSym::from_dense(d, 12);
    EXPECT_EQ(A.to_dense(), d);
    EXPECT_EQ(A.at(3, 3), d[3 * 12 + 3]);
    EXPECT_EQ(A.diagonal(5), d[5 * 12 + 5]);
}

TEST(SparseSym, RejectsAsymmetricPattern) {
    // row 0 stores (0,1) but row 1 does not store (1,0)
    EXPECT_THROW(SparseSym(2, {0, 2, 3}, {0, 1, 1}, {2.0, 1.0, 2.0}), ContractError);
}

TEST(CroutIlut, DiagonalMatrix) {
    std::vector<double> d(16, 0.0);
    for (int i = 0; i < 4; ++i) d[i * 5] = 1.0 + i;
    const auto F = crout_ilut(SparseSym::from_dense(d, 4), 1e-2, 10);
    const auto L = F.dense_l();
    const auto U = F.dense_u();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            EXPECT_EQ(L[i * 4 + j], i == j ? 1.0 : 0.0);
            EXPECT_EQ(U[i * 4 + j], i == j ? 1.0 + i : 0.0);
        }
}

TEST(CroutIlut, NoDroppingEqualsDenseLu) {
    const std::size_t n = 20;
    const auto d = random_spd_dense(n, 0.25, 17);
    const auto F = crout_ilut(SparseSym::from_dense(d, n), 0.0, n);
    const auto L = to_eigen(F.dense_l(), n, n);
    const auto U = to_eigen(F.dense_u(), n, n);
    const auto A = to_eigen(d, n, n);
    // unpivoted Doolittle factors from Eigen's LLT: A = C C^T, so U = D C^T, L = C D^-1
    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    const Eigen::MatrixXd C = llt.matrixL();
    const Eigen::VectorXd diag = C.diagonal();
    const Eigen::MatrixXd Lref = C * diag.asDiagonal().inverse();
    const Eigen::MatrixXd Uref = diag.asDiagonal() * C.transpose();
    EXPECT_LT((L - Lref).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((U - Uref).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((L * U - A).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CroutIlut, TridiagonalIsExactUnderAnySettings) {
    const std::size_t n = 15;
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d[i * n + i] = 4.0;
        if (i + 1 < n) d[i * n + i + 1] = d[(i + 1) * n + i] = -1.0;
    }
    for (double tol : {0.0, 1e-3, 1e-1}) {
        for (std::size_t fill : {std::size_t{2}, std::size_t{5}, n}) {
            const auto F = crout_ilut(SparseSym::from_dense(d, n), tol, fill);
            const auto L = to_eigen(F.dense_l(), n, n);
            const auto U = to_eigen(F.dense_u(), n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    if (i > j + 1) {
                        EXPECT_EQ(L(i, j), 0.0);
                    }
                    if (j > i + 1) {
                        EXPECT_EQ(U(i, j), 0.0);
                    }
                }
            EXPECT_LT((L * U - to_eigen(d, n, n)).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(CroutIlut, FillLimitBoundsRowsAndColumns) {
    const std::size_t n = 40;
    const auto d = random_spd_dense(n, 0.5, 3);
    const std::size_t fill = 4;
    const auto F = crout_ilut(SparseSym::from_dense(d, n), 0.0, fill);
    for (std::size_t k = 0; k < n; ++k) {
        EXPECT_LE(F.u_row_ptr[k + 1] - F.u_row_ptr[k], fill);
        EXPECT_LE(F.l_col_ptr[k + 1] - F.l_col_ptr[k] + 1, fill);
    }
}

TEST(CroutIlut, NonPositivePivotReportsRow) {
    // symmetric indefinite: second pivot is 1 - 4 < 0
    const std::vector<double> d{1.0, 2.0, 2.0, 1.0};
    try {
        crout_ilut(SparseSym::from_dense(d, 2), 0.0, 2);
        FAIL() << "expected FactorizationError";
    } catch (const FactorizationError& e) {
        EXPECT_EQ(e.row(), 1u);
    }
}

TEST(CroutIlut, Deterministic) {
    const auto d = random_spd_dense(30, 0.3, 8);
    const auto A = SparseSym::from_dense(d, 30);
    const auto F1 = crout_ilut(A, 1e-2, 6);
    const auto F2 = crout_ilut(A, 1e-2, 6);
    EXPECT_EQ(F1.l_val, F2.l_val);
    EXPECT_EQ(F1.u_val, F2.u_val);
}

TEST(Pcg, IdentitySystem) {
    std::vector<double> d(25, 0.0);
    for (int i = 0; i < 5; ++i) d[i * 6] = 1.0;
    const auto A = SparseSym::from_dense(d, 5);
    const auto F = crout_ilut(A, 0.0, 5);
    const std::vector<double> b{1, -2, 3, 0.5, 7};
    const auto r = pcg_solve(A, b, F, CGConfig{1e-12, 10});
    EXPECT_LE(r.iterations, 1u);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.x[i], b[i], 1e-12);
}

TEST(Pcg, TwoByTwo) {
    const std::vector<double> d{2, 1, 1, 2};
    const auto A = SparseSym::from_dense(d, 2);
    // an inexact (diagonal) preconditioner still reaches the tolerance
    const auto F = crout_ilut(A, 0.9, 1);
    const double tol = 1e-8;
    const auto r = pcg_solve(A, std::vector<double>{3, 3}, F, CGConfig{tol, 50});
    EXPECT_NEAR(r.x[0], 1.0, 1e-7);
    EXPECT_NEAR(r.x[1], 1.0, 1e-7);
    EXPECT_LE(r.residual, tol);
}

TEST(Pcg, MatchesDenseSolve) {
    const std::size_t n = 100;
    const auto d = random_spd_dense(n, 0.05, 99);
    const auto A = SparseSym::from_dense(d, n);
    const auto b = random_vector(n, 5);
    const double tol = 1e-6;
    const auto F = crout_ilut(A, 1e-2, 5);
    const auto r = pcg_solve(A, b, F, CGConfig{tol, 500});
    const Eigen::VectorXd ref = to_eigen(d, n, n).ldlt().solve(mikado::testing::to_vec(b));
    const Eigen::VectorXd x = mikado::testing::to_vec(r.x);
    EXPECT_LE((x - ref).norm() / ref.norm(), 10 * tol);
}

TEST(Pcg, ExactPreconditionerConvergesInTwoIterations) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t n = 25;
        const auto d = random_spd_dense(n, 0.3, seed);
        const auto A = SparseSym::from_dense(d, n);
        const auto F = crout_ilut(A, 0.0, n);
        const auto r = pcg_solve(A, random_vector(n, seed + 100), F, CGConfig{1e-10, 50});
        EXPECT_LE(r.iterations, 2u);
    }
}

TEST(Pcg, ResidualContractOnEveryReturn) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 60;
        const auto d = random_spd_dense(n, 0.1, seed + 50);
        const auto A = SparseSym::from_dense(d, n);
        const auto b = random_vector(n, seed);
        for (double tol : {1e-2, 1e-6}) {
            const auto r = pcg_solve(A, b, crout_ilut(A, 5e-2, 3), CGConfig{tol, 1000});
            const double res = rel_residual(A, r.x, b);
            EXPECT_LE(res, tol);
            EXPECT_DOUBLE_EQ(res, r.residual);
        }
    }
}

TEST(Pcg, NonConvergenceCarriesResidual) {
    const std::size_t n = 80;
    const auto d = random_spd_dense(n, 0.2, 1);
    const auto A = SparseSym::from_dense(d, n);
    const auto F = crout_ilut(A, 0.5, 1);
    try {
        pcg_solve(A, random_vector(n, 2), F, CGConfig{1e-14, 1});
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_GT(e.residual(), 1e-14);
        EXPECT_EQ(e.iterations(), 1u);
    }
}

TEST(Pcg, ZeroRightHandSide) {
    const auto d = random_spd_dense(10, 0.3, 1);
    const auto A = SparseSym::from_dense(d, 10);
    const auto r = pcg_solve(A, std::vector<double>(10, 0.0), crout_ilut(A, 0.0, 10), CGConfig{});
    for (double v : r.x) EXPECT_EQ(v, 0.0);
}

TEST(SolveSpd, RetryLadderRecordsSettings) {
    const std::size_t n = 80;
    const auto d = random_spd_dense(n, 0.2, 1);
    const auto A = SparseSym::from_dense(d, n);
    const auto b = random_vector(n, 3);
    const auto r = solve_spd(A, b, ILUTSettings{1e-3, 1000, 3}, CGConfig{1e-8, 500});
    EXPECT_LE(r.solve.residual, 1e-8);
    EXPECT_EQ(r.retries, 0);
    EXPECT_EQ(r.drop_tol, 1e-3);
}
