#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "resilnet/bounds.hpp"
#include "resilnet/error.hpp"
#include "resilnet/input_sets.hpp"

using namespace resilnet;
using fixture::scalar;

namespace {

BoundParams make_params(double alpha, double alpha_N, double gamma, double gamma_N, double z, double b, double y0,
                        double yN0, ActuationMode mode = ActuationMode::FullyActuated,
                        std::optional<Regime> force = std::nullopt)
{
    BoundParams bp;
    bp.alpha = alpha;
    bp.alpha_N = alpha_N;
    bp.gamma = gamma;
    bp.gamma_N = gamma_N;
    bp.z_max = z;
    bp.b_min = b;
    bp.chi0_norm = y0;
    bp.xN0_norm = yN0;
    bp.mode = mode;
    const Lemma6 c = lemma6_coefficients(alpha, alpha_N, gamma, gamma_N, z, b, y0, yN0, force);
    bp.regime = c.regime;
    bp.r_plus = c.r_plus;
    bp.r_minus = c.r_minus;
    bp.p = c.p;
    bp.h_plus = c.h_plus;
    bp.h_minus = c.h_minus;
    bp.diverging = gamma * gamma_N >= alpha * alpha_N;
    return bp;
}

// RK4 solution of the linear comparison system y' = -a y - b + g yN, yN' = -aN yN + z + gN y.
std::pair<double, double> comparison_ode(const BoundParams& bp, double t, int steps = 20000)
{
    Eigen::Vector2d s(bp.chi0_norm, bp.xN0_norm);
    auto f = [&](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(-bp.alpha * x(0) - bp.b_min + bp.gamma * x(1),
                               -bp.alpha_N * x(1) + bp.z_max + bp.gamma_N * x(0));
    };
    const double h = t / steps;
    for (int k = 0; k < steps; ++k) {
        const Eigen::Vector2d k1 = f(s), k2 = f(s + 0.5 * h * k1), k3 = f(s + 0.5 * h * k2), k4 = f(s + h * k3);
        s += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return {s(0), s(1)};
}

// Composite Simpson rule on n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

struct Academic {
    PartitionedNetwork pn = fixture::academic_pn();
    BoundParams bp = constants_fully_actuated(pn, Vector::Ones(2), Vector::Zero(1));
};

NetworkSpec decoupled_lossy_node()
{
    NetworkSpec s = fixture::academic();
    for (auto& sub : s.subsystems) {
        if (sub.id == 3)
            sub.couplings.clear();
        else
            sub.couplings.erase(3);
    }
    return s;
}

}  // namespace

TEST(Constants, AcademicFullyActuated)
{
    const Academic a;
    const auto& bp = a.bp;
    const Matrix P_hat = oracle::vec_lyapunov(a.pn.Ahat + a.pn.Dhat, Matrix::Identity(2, 2));
    const Matrix P_N = oracle::vec_lyapunov(a.pn.A_N, Matrix::Identity(1, 1));
    EXPECT_LE((bp.P_hat - P_hat).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(bp.P_N(0, 0), 0.5, 1e-14);

    Eigen::SelfAdjointEigenSolver<Matrix> eP(P_hat);
    const double lmin = eP.eigenvalues().minCoeff(), lmax = eP.eigenvalues().maxCoeff();
    const Matrix Dm = a.pn.D_minus_N, Dn = a.pn.D_N_minus;
    const double gamma = std::sqrt((Dm.transpose() * P_hat * Dm)(0, 0) / P_N(0, 0));
    const double gamma_N =
        std::sqrt(Eigen::SelfAdjointEigenSolver<Matrix>(Dn.transpose() * P_N * Dn).eigenvalues().maxCoeff() / lmin);

    EXPECT_NEAR(bp.alpha_N, 1.0, 1e-12);
    EXPECT_NEAR(bp.alpha, 1.0 / (2.0 * lmax), 1e-12);
    EXPECT_NEAR(bp.alpha, 0.7, 1e-12);
    EXPECT_NEAR(bp.gamma, gamma, 1e-12);
    EXPECT_NEAR(bp.gamma_N, gamma_N, 1e-12);
    EXPECT_NEAR(bp.gamma, 0.51, 0.005);
    EXPECT_NEAR(bp.gamma_N, 0.48, 0.005);
    EXPECT_NEAR(bp.coupling_product(), 0.25, 0.005);
    EXPECT_NEAR(bp.decay_product(), 0.7, 1e-12);
    // P-weighted definitions: the residual 1 is measured in the P_N = 0.5 norm
    EXPECT_NEAR(bp.z_max, oracle::z_max(a.pn.B_N, a.pn.C_N, P_N).value, 1e-9);
    EXPECT_NEAR(bp.z_max, std::sqrt(0.5), 1e-9);
    EXPECT_NEAR(bp.b_min, oracle::b_min(a.pn.Bhat, P_hat), 1e-6);
    EXPECT_NEAR(bp.chi0_norm, oracle::pnorm(Vector::Ones(2), P_hat), 1e-12);
    EXPECT_EQ(bp.regime, Regime::Generic);
    EXPECT_FALSE(bp.diverging);
    EXPECT_FALSE(bp.vacuous);
    EXPECT_LE(bp.root_residual(), 1e-10);
    EXPECT_LE(bp.initial_condition_residual(), 1e-9);
}

TEST(Constants, DecoupledRoots)
{
    const auto pn = partition(decoupled_lossy_node(), fixture::lose(3, {1}));
    const auto bp = constants_fully_actuated(pn, Vector::Ones(2), Vector::Zero(1));
    EXPECT_EQ(bp.gamma, 0.0);
    EXPECT_EQ(bp.gamma_N, 0.0);
    // r^2 + (alpha - alpha_N) r = 0 has roots 0 and alpha_N - alpha
    EXPECT_NEAR(bp.r_plus, std::max(0.0, bp.alpha_N - bp.alpha), 1e-12);
    EXPECT_NEAR(bp.r_minus, std::min(0.0, bp.alpha_N - bp.alpha), 1e-12);
    EXPECT_LE(bp.r_minus, bp.r_plus);
    // envelope exponents are the decay rates of the two decoupled parts
    std::vector<double> exps{bp.r_plus - bp.alpha_N, bp.r_minus - bp.alpha_N};
    std::sort(exps.begin(), exps.end());
    EXPECT_NEAR(exps[0], -std::max(bp.alpha, bp.alpha_N), 1e-12);
    EXPECT_NEAR(exps[1], -std::min(bp.alpha, bp.alpha_N), 1e-12);
}

TEST(Constants, RejectsUnstableMalfunction)
{
    NetworkSpec s = fixture::academic();
    s.subsystems[2].A = scalar(0.5);
    EXPECT_THROW(constants_fully_actuated(partition(s, fixture::lose(3, {1})), Vector::Ones(2), Vector::Zero(1)),
                 NotHurwitz);
    EXPECT_THROW(constants_fully_actuated(fixture::academic_pn(true), Vector::Ones(2), Vector::Zero(1)),
                 NotFullRowRank);
}

TEST(Constants, VacuousWhenMalfunctionIsCounteracted)
{
    NetworkSpec s = fixture::academic();
    s.subsystems[2].B = Matrix{{2.0, 0.5}};
    const auto bp = constants_fully_actuated(partition(s, fixture::lose(3, {1})), Vector::Ones(2), Vector::Zero(1));
    EXPECT_TRUE(bp.vacuous);
    EXPECT_NEAR(bp.z_max, 0.0, 1e-7);
    EXPECT_FALSE(bp.notices.empty());
}

TEST(Lemma6, RandomResiduals)
{
    oracle::Rng rng(71);
    for (int trial = 0; trial < 200; ++trial) {
        const auto bp = make_params(rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0), rng.uniform(0.0, 2.0),
                                    rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0),
                                    rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0),
                                    trial % 2 ? ActuationMode::FullyActuated : ActuationMode::Underactuated);
        EXPECT_LE(bp.root_residual(), 1e-10 * (1.0 + bp.r_plus * bp.r_plus));
        const double scale = 1.0 + std::abs(bp.p) + std::abs(bp.h_plus) + std::abs(bp.h_minus);
        EXPECT_LE(bp.initial_condition_residual(), 1e-9 * scale);
        EXPECT_LE(bp.r_minus, bp.r_plus);
        if (bp.regime == Regime::Generic) {
            EXPECT_NEAR(bp.p * (bp.decay_product() - bp.coupling_product()),
                        bp.gamma * bp.z_max - bp.alpha_N * bp.b_min, 1e-9 * scale);
        }
    }
}

TEST(Lemma6, ClosedFormSolvesComparisonSystem)
{
    oracle::Rng rng(73);
    for (int trial = 0; trial < 30; ++trial) {
        const double a = rng.uniform(0.3, 2.0), aN = rng.uniform(0.3, 2.0);
        double g = rng.uniform(0.2, 1.0), gN = rng.uniform(0.0, 1.0);
        std::optional<Regime> force;
        if (trial % 5 == 0) {
            gN = a * aN / g;  // exactly degenerate
            force = Regime::Degenerate;
        }
        const auto bp = make_params(a, aN, g, gN, rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                                    rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), ActuationMode::FullyActuated, force);
        const ChiEnvelope env(bp);
        for (double t : {0.5, 1.0, 3.0}) {
            const auto [y, yN] = comparison_ode(bp, t);
            EXPECT_NEAR(env.raw(t), y, 1e-7 * (1.0 + std::abs(y))) << "t = " << t << " trial " << trial;
            EXPECT_NEAR(std::exp(-bp.alpha_N * t) * bp.xN0_norm + m_function(bp, t), yN, 1e-7 * (1.0 + std::abs(yN)));
        }
    }
}

TEST(Lemma6, DegenerateBracketedByGeneric)
{
    // alpha alpha_N = gamma gamma_N = 2 exactly
    const double a = 1.0, aN = 2.0, g = 1.0, gN = 2.0, z = 0.3, b = 0.8, y0 = 1.2, yN0 = 0.4;
    const auto deg = make_params(a, aN, g, gN, z, b, y0, yN0);
    ASSERT_EQ(deg.regime, Regime::Degenerate);
    const auto lo = make_params(a, aN, g, gN * (1 - 1e-9), z, b, y0, yN0);
    const auto hi = make_params(a, aN, g, gN * (1 + 1e-9), z, b, y0, yN0);
    ASSERT_EQ(lo.regime, Regime::Generic);
    ASSERT_EQ(hi.regime, Regime::Generic);
    const ChiEnvelope ed(deg), el(lo), eh(hi);
    for (int k = 0; k <= 100; ++k) {
        const double t = 10.0 / a * k / 100;
        const double yd = ed.raw(t), yl = el.raw(t), yh = eh.raw(t);
        const double tol = 1e-5 * (1.0 + std::abs(yd));
        EXPECT_GE(yd, std::min(yl, yh) - tol) << t;
        EXPECT_LE(yd, std::max(yl, yh) + tol) << t;
    }
}

TEST(Theorem7, Verdicts)
{
    const Academic a;
    const auto v = theorem7_verdict(a.bp);
    EXPECT_EQ(v.conclusion, Conclusion::ResilientlyStabilizable);
    EXPECT_EQ(v.sufficiency, Sufficiency::SufficientOnly);
    ASSERT_EQ(v.basis.size(), 2u);
    EXPECT_NEAR(v.basis[1].value, a.bp.gamma * a.bp.z_max, 1e-12);
    EXPECT_NEAR(v.basis[1].threshold, a.bp.alpha_N * a.bp.b_min, 1e-12);

    const auto pn = partition(decoupled_lossy_node(), fixture::lose(3, {1}));
    EXPECT_TRUE(theorem7_verdict(constants_fully_actuated(pn, Vector::Ones(2), Vector::Zero(1))).positive());

    const auto grid = make_params(5.7e-3, 1.0, 6.3e4, 1.0, 0.1, 0.0, 1.0, 1.0, ActuationMode::Underactuated);
    const auto nd = theorem7_verdict(grid);
    EXPECT_EQ(nd.conclusion, Conclusion::NotDetermined);
    EXPECT_FALSE(nd.basis[0].passed);
    EXPECT_TRUE(grid.diverging);
}

TEST(ChiEnvelope, AcademicReachesZero)
{
    const Academic a;
    const ChiEnvelope env(a.bp);
    EXPECT_NEAR(env(0.0), a.bp.chi0_norm, 1e-12);
    ASSERT_TRUE(env.finite_time());
    ASSERT_TRUE(env.zero_time());
    const double T = *env.zero_time();
    EXPECT_GT(T, 0.0);
    EXPECT_NEAR(env.raw(T), 0.0, 1e-8);
    EXPECT_GT(env.raw(T - 1e-6), 0.0);
    double prev = env(0.0);
    for (int k = 1; k <= 1000; ++k) {
        const double t = T * k / 1000;
        EXPECT_LE(env(t), prev + 1e-15);
        prev = env(t);
    }
    for (double t : {T, T + 0.1, 2 * T, 100.0})
        EXPECT_EQ(env(t), 0.0);
}

TEST(ChiEnvelope, ZeroStartStaysZero)
{
    const auto bp = make_params(0.7, 1.0, 0.5, 0.5, 0.5, 2.0, 0.0, 0.0);
    ASSERT_GT(bp.b_min, bp.gamma * bp.z_max / bp.alpha_N);
    const ChiEnvelope env(bp);
    EXPECT_EQ(*env.zero_time(), 0.0);
    for (double t : {0.0, 0.1, 1.0, 10.0})
        EXPECT_EQ(env(t), 0.0);
}

TEST(MFunction, DecoupledConstantBeta)
{
    const auto bp = make_params(0.7, 1.3, 0.0, 0.0, 0.4, 1.0, 1.0, 0.0);
    for (double t : {0.0, 0.3, 2.0, 8.0})
        EXPECT_NEAR(m_function(bp, t), 0.4 / 1.3 * (1.0 - std::exp(-1.3 * t)), 1e-14);
}

TEST(MFunction, MatchesQuadratureOfDefinition)
{
    oracle::Rng rng(79);
    for (int trial = 0; trial < 20; ++trial) {
        const auto bp = make_params(rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0), rng.uniform(0.0, 1.0),
                                    rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                                    rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
        const ChiEnvelope env(bp);
        for (double t : {0.7, 2.5}) {
            const double q = simpson(
                [&](double s) { return std::exp(-bp.alpha_N * (t - s)) * (bp.z_max + bp.gamma_N * env.raw(s)); }, 0.0,
                t, 2000);
            EXPECT_NEAR(m_function(bp, t), q, 1e-10);
        }
    }
}

TEST(MFunction, TinyRootMatchesSeries)
{
    auto bp = make_params(0.7, 1.0, 0.3, 0.3, 0.2, 0.0, 1.0, 0.0, ActuationMode::Underactuated);
    bp.h_plus = 0.0;
    bp.h_minus = 0.8;
    bp.p = 0.0;
    for (double r : {1e-13, 1e-9, 1e-7}) {
        bp.r_minus = r;
        for (double t : {0.5, 3.0}) {
            // e^{-aN t} (e^{r t} - 1) / r = e^{-aN t} (t + r t^2 / 2 + r^2 t^3 / 6 + ...)
            const double series = std::exp(-bp.alpha_N * t) * (t + r * t * t / 2 + r * r * t * t * t / 6);
            const double want = bp.z_max / bp.alpha_N * (1 - std::exp(-bp.alpha_N * t)) + bp.gamma_N * 0.8 * series;
            EXPECT_NEAR(m_function(bp, t), want, 1e-9) << r;
        }
    }
}

TEST(XnIntegral, ConstantBetaClosedForm)
{
    const auto bp = make_params(0.7, 1.0, 0.5, 0.5, 0.6, 1.0, 1.0, 0.0);
    std::vector<double> times, zero;
    for (int k = 0; k <= 5000; ++k) {
        times.push_back(k * 1e-3);
        zero.push_back(0.0);
    }
    const auto I = xN_integral_bound(times, zero, bp);
    for (std::size_t k = 0; k < times.size(); k += 250)
        EXPECT_NEAR(I[k], 0.6 * (1.0 - std::exp(-times[k])), 1e-6);
    EXPECT_THROW(xN_integral_bound(times, std::vector<double>(3), bp), DimensionError);
}

TEST(XnIntegral, TrapezoidAgainstRefinedQuadrature)
{
    oracle::Rng rng(83);
    for (int trial = 0; trial < 5; ++trial) {
        const double c0 = rng.uniform(0.0, 1.0), c1 = rng.uniform(0.5, 4.0), c2 = rng.uniform(0.0, 1.0);
        auto beta = [&](double t) { return c0 + c2 * std::pow(std::sin(c1 * t), 2); };
        const auto bp = make_params(0.7, rng.uniform(0.3, 2.0), 0.5, 0.5, 0.3, 1.0, 1.0, rng.uniform(0.0, 1.0));
        std::vector<double> times, chan;
        for (int k = 0; k <= 5000; ++k) {
            times.push_back(k * 1e-3);
            chan.push_back(beta(times.back()));
        }
        const auto I = xN_integral_bound(times, chan, bp);
        for (std::size_t k = 500; k < times.size(); k += 500) {
            const double t = times[k];
            const double ref =
                std::exp(-bp.alpha_N * t) * bp.xN0_norm +
                simpson([&](double s) { return std::exp(-bp.alpha_N * (t - s)) * (bp.z_max + beta(s)); }, 0.0, t,
                        static_cast<int>(10 * k));
            EXPECT_NEAR(I[k], ref, 1e-6);
        }
    }
}

TEST(XnClosed, AcademicSwitch)
{
    const Academic a;
    const ChiEnvelope chi(a.bp);
    const XnClosedEnvelope env(a.bp, chi.zero_time());
    const double T = *chi.zero_time();
    EXPECT_EQ(env.branch(T - 1e-9), 0);
    EXPECT_EQ(env.branch(T), 1);
    const double ss = a.bp.z_max / a.bp.alpha_N;
    for (double t : {T, T + 0.5, T + 3.0})
        EXPECT_NEAR(env(t), ss + (env.pre_switch(T) - ss) * std::exp(-a.bp.alpha_N * (t - T)), 1e-12);
    const double unanchored = ss + (a.bp.xN0_norm - ss) * std::exp(-a.bp.alpha_N * T);
    EXPECT_NEAR(env.jump(), unanchored - env.pre_switch(T), 1e-12);
    EXPECT_NE(env.jump(), 0.0);
    for (double t : {0.0, 0.2, 0.5})
        EXPECT_NEAR(env(t), std::max(0.0, std::exp(-t) * a.bp.xN0_norm + m_function(a.bp, t)), 1e-14);
}

TEST(XnClosed, DecoupledSaturation)
{
    const auto bp = make_params(0.7, 1.3, 0.0, 0.0, 0.4, 0.0, 1.0, 2.0, ActuationMode::Underactuated);
    const XnClosedEnvelope env(bp, std::nullopt);
    for (double t : {0.0, 1.0, 50.0})
        EXPECT_NEAR(env(t), 0.4 / 1.3 + (2.0 - 0.4 / 1.3) * std::exp(-1.3 * t), 1e-12);
    EXPECT_EQ(env.branch(100.0), 0);
}

TEST(Riccati, ScalarClosedForm)
{
    const auto s = solve_care(scalar(-1.0), scalar(1.0), scalar(1.0), scalar(1.0));
    // 2 a s - s^2 + 1 = 0 with a = -1 gives s = -1 + sqrt(2)
    EXPECT_NEAR(s.S(0, 0), -1.0 + std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(s.K(0, 0), -1.0 + std::sqrt(2.0), 1e-12);
    EXPECT_LE(s.residual, 1e-10);
}

TEST(Riccati, KleinmanOracle)
{
    oracle::Rng rng(89);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rng.integer(1, 4), m = rng.integer(1, 2);
        const Matrix A = rng.hurwitz(n, 0.2), B = rng.matrix(n, m), Q = rng.spd(n), R = rng.spd(m, 0.5);
        Matrix K = Matrix::Zero(m, n), P;
        for (int it = 0; it < 60; ++it) {
            P = oracle::vec_lyapunov(A - B * K, Q + K.transpose() * R * K);
            K = R.llt().solve(B.transpose() * P);
        }
        const auto s = solve_care(A, B, Q, R);
        EXPECT_LE((s.S - P).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + P.norm()));
        EXPECT_LE((s.K - K).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + K.norm()));
    }
}

TEST(Riccati, UnderactuatedAcademicGain)
{
    const auto pn = fixture::academic_pn(true);
    const Matrix K = synthesize_gain(pn);
    ASSERT_EQ(K.rows(), 1);
    ASSERT_EQ(K.cols(), 2);
    EXPECT_NEAR(K(0, 0), 0.6383, 1e-3);
    EXPECT_NEAR(K(0, 1), 0.1521, 1e-3);
    EXPECT_TRUE(is_hurwitz(pn.Ahat + pn.Dhat - pn.Bhat * K));
}

TEST(Riccati, UncontrollableRejected)
{
    EXPECT_THROW(solve_care(Matrix{{-1.0, 0.0}, {0.0, -2.0}}, Matrix{{1.0}, {0.0}}, Matrix::Identity(2, 2), scalar(1.0)),
                 NotControllable);
}

TEST(Underactuated, AcademicAdmissibility)
{
    const auto pn = fixture::academic_pn(true);
    const Matrix K = synthesize_gain(pn);
    const auto bp = constants_underactuated(pn, K, Vector::Ones(2), Vector::Zero(1));
    EXPECT_EQ(bp.mode, ActuationMode::Underactuated);
    EXPECT_EQ(bp.b_min, 0.0);
    EXPECT_NEAR(bp.coupling_product(), 0.24, 0.01);
    EXPECT_NEAR(bp.decay_product(), 0.98, 0.01);
    EXPECT_NEAR(bp.p, bp.gamma * bp.z_max / (bp.decay_product() - bp.coupling_product()), 1e-12);
    const Matrix Pc = oracle::vec_lyapunov(pn.Ahat + pn.Dhat - pn.Bhat * K, Matrix::Identity(2, 2));
    EXPECT_LE((bp.P_hat - Pc).cwiseAbs().maxCoeff(), 1e-12);

    const auto adm = admissibility(bp);
    EXPECT_FALSE(adm.unbounded);
    EXPECT_NEAR(adm.sup_b, bp.chi0_norm, 1e-12);
    EXPECT_EQ(adm.t_sup, 0.0);
    EXPECT_NEAR(adm.sup_b, 0.9, 0.01);
    EXPECT_NEAR(adm.threshold, std::sqrt(Eigen::SelfAdjointEigenSolver<Matrix>(Pc).eigenvalues().minCoeff()) /
                                   Eigen::JacobiSVD<Matrix>(K).singularValues()(0),
                1e-12);
    EXPECT_NEAR(adm.threshold, 0.71, 0.01);
    EXPECT_FALSE(adm.passed);

    // sup over a dense grid never exceeds the analytic value
    const ChiEnvelope env(bp);
    for (int k = 0; k <= 2000; ++k)
        EXPECT_LE(env.raw(k * 0.01), adm.sup_b + 1e-12);
}

TEST(Underactuated, RestStartIdentity)
{
    const auto pn = fixture::academic_pn(true);
    const auto bp = constants_underactuated(pn, synthesize_gain(pn), Vector::Zero(2), Vector::Zero(1));
    EXPECT_LT(bp.h_plus, 0.0);
    EXPECT_GT(bp.h_minus, 0.0);
    const double aa = bp.decay_product(), gg = bp.coupling_product();
    const double disc = std::sqrt((bp.alpha_N - bp.alpha) * (bp.alpha_N - bp.alpha) + 4 * gg);
    // y(0) = 0 and y'(0) = 0 with b = 0 fix h_+ = p (r_- - alpha_N) / (r_+ - r_-)
    const double want = (bp.alpha_N - bp.r_minus) * bp.gamma * bp.z_max / ((aa - gg) * disc);
    EXPECT_NEAR(-bp.h_plus, want, 1e-12);
    EXPECT_NEAR(bp.p + bp.h_minus, want, 1e-12);
}

TEST(Underactuated, AnalyticSupremumAgainstGrid)
{
    oracle::Rng rng(97);
    for (int trial = 0; trial < 100; ++trial) {
        auto bp = make_params(rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0), rng.uniform(0.0, 1.0),
                              rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), 0.0, rng.uniform(0.0, 2.0),
                              rng.uniform(0.0, 2.0), ActuationMode::Underactuated);
        bp.P_hat = Matrix::Identity(1, 1);
        bp.K = Matrix::Identity(1, 1);
        const auto adm = admissibility(bp);
        const ChiEnvelope env(bp);
        double grid = -1e300;
        for (int k = 0; k <= 20000; ++k)
            grid = std::max(grid, env.raw(k * 1e-3));
        if (adm.unbounded) {
            EXPECT_TRUE(bp.diverging);
            continue;
        }
        EXPECT_GE(adm.sup_b, grid - 1e-12);
        if (adm.t_sup < 20.0) {
            EXPECT_NEAR(adm.sup_b, grid, 1e-5);
        }
    }
}
