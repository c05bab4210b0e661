#include <random>

#include <benchmark/benchmark.h>

#include "resilnet/bounds.hpp"
#include "resilnet/input_sets.hpp"
#include "resilnet/matrix_margins.hpp"
#include "resilnet/scenario.hpp"
#include "resilnet/simulator.hpp"

using namespace resilnet;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed)
{
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix M(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j)
            M(i, j) = n(eng);
    return M;
}

Matrix random_hurwitz(Index n, std::uint64_t seed)
{
    Matrix A = random_matrix(n, n, seed);
    return A - (A.eigenvalues().real().maxCoeff() + 0.5) * Matrix::Identity(n, n);
}

const Scenario& ieee39()
{
    static const Scenario s = parse_scenario(std::string(RESILNET_SCENARIO_DIR) + "/ieee39.scn");
    return s;
}

}  // namespace

static void BM_Lyapunov(benchmark::State& state)
{
    const Matrix A = random_hurwitz(state.range(0), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_lyapunov(A));
}
BENCHMARK(BM_Lyapunov)->Arg(2)->Arg(8)->Arg(48);

static void BM_CtrbRank(benchmark::State& state)
{
    const Index n = state.range(0);
    const Matrix A = random_hurwitz(n, 2), B = random_matrix(n, 2, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(ctrb_rank(A, B));
}
BENCHMARK(BM_CtrbRank)->Arg(8)->Arg(48);

static void BM_ZMax(benchmark::State& state)
{
    const int p = static_cast<int>(state.range(0));
    const Matrix B = random_matrix(3, 3, 4), C = random_matrix(3, p, 5);
    const Matrix P = Matrix::Identity(3, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(z_max(B, C, P));
}
BENCHMARK(BM_ZMax)->Arg(1)->Arg(4)->Arg(8);

static void BM_BMin(benchmark::State& state)
{
    const Matrix B = random_matrix(2, 3, 6), P = Matrix::Identity(2, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(b_min(B, P));
}
BENCHMARK(BM_BMin);

static void BM_BuildZ(benchmark::State& state)
{
    const Matrix B = random_matrix(3, 4, 7);
    const Matrix C = 0.3 * B.col(0);
    for (auto _ : state)
        benchmark::DoNotOptimize(build_Z(B, C));
}
BENCHMARK(BM_BuildZ);

static void BM_Riccati(benchmark::State& state)
{
    const Index n = state.range(0);
    const Matrix A = random_hurwitz(n, 8), B = random_matrix(n, 2, 9);
    const Matrix Q = Matrix::Identity(n, n), R = Matrix::Identity(2, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_care(A, B, Q, R));
}
BENCHMARK(BM_Riccati)->Arg(4)->Arg(46);

static void BM_SimulateIeee39(benchmark::State& state)
{
    const Scenario& s = ieee39();
    const PartitionedNetwork pn = partition(s.network, s.loss);
    const Matrix K = synthesize_gain(pn);
    const Vector X0 = Vector::Ones(pn.n_total);
    const BoundParams bp = constants_underactuated(pn, K, X0.head(pn.n_hat()), X0.tail(pn.n_N));
    SimSetup setup;
    setup.hat = {PolicyKind::LinearFeedback, {}};
    setup.uN = {PolicyKind::Zero, {}};
    setup.w = {PolicyKind::ConstantVertex, Vector::Ones(pn.p_N)};
    setup.P_hat = bp.P_hat;
    setup.P_N = bp.P_N;
    setup.K = K;
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate(pn, setup, X0, 1.0, 1e-3));
}
BENCHMARK(BM_SimulateIeee39)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
