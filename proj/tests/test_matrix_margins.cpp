#include <algorithm>
#include <complex>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "resilnet/error.hpp"
#include "resilnet/matrix_margins.hpp"

using namespace resilnet;

TEST(Lyapunov, ScalarAcademic)
{
    const auto c = solve_lyapunov(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0));
    EXPECT_NEAR(c.P(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(c.alpha, 1.0, 1e-14);
}

TEST(Lyapunov, DiagonalCase)
{
    const auto c = solve_lyapunov(-Matrix::Identity(2, 2));
    EXPECT_TRUE(c.P.isApprox(0.5 * Matrix::Identity(2, 2), 1e-14));
    EXPECT_NEAR(c.alpha, 1.0, 1e-14);
}

TEST(Lyapunov, AcademicHealthyBlockMatchesVecOracle)
{
    const Matrix A{{-1.0, 0.3}, {0.3, -1.0}};
    const auto c = solve_lyapunov(A);
    const Matrix P = oracle::vec_lyapunov(A, Matrix::Identity(2, 2));
    EXPECT_LE((c.P - P).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(c.alpha, 0.7, 1e-12);
}

TEST(Lyapunov, RandomMatchesVecOracle)
{
    oracle::Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = rng.integer(1, 6);
        const Matrix A = rng.hurwitz(n, rng.uniform(0.05, 2.0));
        const Matrix Q = rng.spd(n);
        const auto c = solve_lyapunov(A, Q);
        const Matrix P = oracle::vec_lyapunov(A, Q);
        EXPECT_LE((c.P - P).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, P.norm()));
        EXPECT_LE(lyapunov_residual(A, c), 1e-8 * Q.norm());
        EXPECT_LE((c.P - c.P.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_GT(c.alpha, 0.0);
        EXPECT_TRUE(is_hurwitz(A));
    }
}

TEST(Lyapunov, RejectsNonHurwitz)
{
    EXPECT_THROW(solve_lyapunov(Matrix::Constant(1, 1, 0.0)), NotHurwitz);
    EXPECT_THROW(solve_lyapunov(Matrix{{0.0, 1.0}, {-1.0, 0.0}}), NotHurwitz);
}

TEST(Hurwitz, Examples)
{
    EXPECT_TRUE(is_hurwitz(Matrix::Constant(1, 1, -1.0)));
    EXPECT_TRUE(is_hurwitz(Matrix{{0.0, 1.0}, {-18.63, -11.22}}));
    oracle::Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix M = rng.matrix(4, 4);
        const double a = M.eigenvalues().real().maxCoeff();
        M -= (a - 0.5) * Matrix::Identity(4, 4);
        EXPECT_FALSE(is_hurwitz(M));
        EXPECT_NEAR(spectral_abscissa(M), 0.5, 1e-8);
    }
}

TEST(CtrbRank, Examples)
{
    EXPECT_EQ(ctrb_rank(Matrix::Zero(2, 2), Matrix::Identity(2, 2)), 2);
    EXPECT_EQ(ctrb_rank(Matrix{{-1.0, 0.3}, {0.3, -1.0}}, 2.0 * Matrix::Identity(2, 2)), 2);
    EXPECT_EQ(ctrb_rank(Matrix{{-1.0, 0.3}, {0.3, -1.0}}, Matrix{{2.0}, {0.0}}), 2);
}

TEST(CtrbRank, BlockTriangularUncontrollable)
{
    oracle::Rng rng(19);
    for (int trial = 0; trial < 30; ++trial) {
        const int n1 = rng.integer(1, 3), n2 = rng.integer(1, 3), m = rng.integer(1, 2);
        Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
        A.topLeftCorner(n1, n1) = rng.matrix(n1, n1);
        A.topRightCorner(n1, n2) = rng.matrix(n1, n2);
        A.bottomRightCorner(n2, n2) = rng.matrix(n2, n2);
        Matrix B = Matrix::Zero(n1 + n2, m);
        B.topRows(n1) = rng.matrix(n1, m);
        // random orthogonal change of basis hides the structure
        const Matrix T = Eigen::HouseholderQR<Matrix>(rng.matrix(n1 + n2, n1 + n2)).householderQ();
        const Matrix At = T * A * T.transpose(), Bt = T * B;
        EXPECT_LT(ctrb_rank(At, Bt), n1 + n2);
        EXPECT_LE(ctrb_rank(At, Bt), n1);
        EXPECT_EQ(ctrb_rank(At, Bt), kalman_rank(At, Bt));
    }
}

TEST(Uncontrollability, Examples)
{
    const auto e = distance_to_uncontrollability(-Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    EXPECT_NEAR(e.mu, 1.0, 1e-6);
    const auto z = distance_to_uncontrollability(Matrix::Constant(1, 1, -1.0), Matrix::Zero(1, 1));
    EXPECT_NEAR(z.mu, 0.0, 1e-8);
}

TEST(Uncontrollability, DenseGridOracle)
{
    oracle::Rng rng(23);
    auto sigma = [](const Matrix& A, const Matrix& B, std::complex<double> s) {
        const Index n = A.rows();
        Eigen::MatrixXcd M(n, n + B.cols());
        M.leftCols(n) = A.cast<std::complex<double>>() - s * Eigen::MatrixXcd::Identity(n, n);
        M.rightCols(B.cols()) = B.cast<std::complex<double>>();
        return Eigen::JacobiSVD<Eigen::MatrixXcd>(M).singularValues()(n - 1);
    };
    for (int trial = 0; trial < 3; ++trial) {
        const Matrix A = rng.matrix(3, 3), B = rng.matrix(3, 1);
        const auto e = distance_to_uncontrollability(A, B);
        EXPECT_NEAR(sigma(A, B, e.s), e.mu, 1e-12);
        // the minimizer satisfies |s| <= ||A|| + ||B||; coarse grid, then zoom around the best cells
        const double R = Eigen::JacobiSVD<Matrix>(A).singularValues()(0) + B.norm();
        const int G = 200;
        const double h = 2 * R / (G - 1);
        std::vector<std::pair<double, Vector>> cells;
        for (int i = 0; i < G; ++i)
            for (int j = 0; j < G; ++j) {
                const Vector c = (Vector(2) << -R + h * i, -R + h * j).finished();
                cells.push_back({sigma(A, B, {c(0), c(1)}), c});
            }
        std::partial_sort(cells.begin(), cells.begin() + 20, cells.end(),
                          [](const auto& a, const auto& b) { return a.first < b.first; });
        double best = cells.front().first;
        for (int k = 0; k < 20; ++k) {
            const Vector c = cells[k].second;
            best = std::min(best, oracle::zoom_grid_min([&](const Vector& x) { return sigma(A, B, {x(0), x(1)}); },
                                                        c.array() - 2 * h, c.array() + 2 * h, 21, 10));
        }
        EXPECT_LE(e.mu, best + 1e-9);
        EXPECT_NEAR(e.mu, best, 1e-3);
    }
}

TEST(Uncontrollability, OnlyAPerturbationsNeverBeatMu)
{
    // mu(A,B) <= ||dA|| for every dA that makes (A + dA, B) uncontrollable.
    oracle::Rng rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix A = rng.matrix(2, 2), B = rng.matrix(2, 1);
        const double mu = distance_to_uncontrollability(A, B).mu;
        // dA moving a left eigenvector v of A to be orthogonal to B: choose v orth to B,
        // then dA = v (lambda v^T - v^T A) with ||v|| = 1 makes v a left eigenvector.
        Vector v(2);
        v << -B(1, 0), B(0, 0);
        v.normalize();
        const double lambda = v.dot(A * v);
        const Matrix dA = v * (lambda * v.transpose() - v.transpose() * A);
        ASSERT_LT(ctrb_rank(A + dA, B), 2);
        EXPECT_LE(mu, Eigen::JacobiSVD<Matrix>(dA).singularValues()(0) + 1e-9);
    }
}

TEST(StabilityRadius, Examples)
{
    EXPECT_NEAR(real_stability_radius_lb(Matrix::Constant(1, 1, -1.0)).value, 1.0, 1e-9);
    EXPECT_NEAR(real_stability_radius_lb(Matrix{{-1.0, 0.0}, {0.0, -2.0}}).value, 1.0, 1e-9);
    EXPECT_THROW(real_stability_radius_lb(Matrix::Constant(1, 1, 1.0)), NotHurwitz);
}

TEST(StabilityRadius, RandomFalsification)
{
    oracle::Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix A = rng.hurwitz(4, 0.3);
        const double b = real_stability_radius_lb(A).value;
        for (int k = 0; k < 100; ++k) {
            Matrix dA = rng.matrix(4, 4);
            dA *= 0.99 * b / Eigen::JacobiSVD<Matrix>(dA).singularValues()(0);
            EXPECT_TRUE(is_hurwitz(A + dA));
        }
    }
}

TEST(PNorm, GammaGainAcademic)
{
    const Matrix P_hat = oracle::vec_lyapunov(Matrix{{-1.0, 0.3}, {0.3, -1.0}}, Matrix::Identity(2, 2));
    const Matrix PN = Matrix::Constant(1, 1, 0.5);
    EXPECT_NEAR(gamma_gain(Matrix::Constant(2, 1, 0.3), P_hat, PN), 0.51, 0.005);
    EXPECT_NEAR(gamma_gain(Matrix::Identity(3, 3), Matrix::Identity(3, 3), Matrix::Identity(3, 3)), 1.0, 1e-14);
    EXPECT_THROW(gamma_gain(Matrix::Identity(2, 2), -Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
                 ValidationError);
}

TEST(PNorm, Lemma3GainInequality)
{
    oracle::Rng rng(37);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix D = rng.matrix(3, 2), Po = rng.spd(3), Qi = rng.spd(2);
        const double g = gamma_gain(D, Po, Qi);
        for (int k = 0; k < 10; ++k) {
            const Vector x = rng.vector(2);
            EXPECT_LE(oracle::pnorm(D * x, Po), g * oracle::pnorm(x, Qi) * (1 + 1e-12) + 1e-15);
        }
    }
}

TEST(PNorm, Lemma4CauchySchwarz)
{
    oracle::Rng rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = rng.integer(1, 5);
        const Matrix P = rng.spd(n);
        const Vector x = rng.vector(n), y = rng.vector(n);
        EXPECT_LE(x.dot(P * y), p_norm(x, P) * p_norm(y, P) + 1e-12);
    }
}
