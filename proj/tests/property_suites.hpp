#pragma once

// Randomized property suites shared by the unit tests and the acceptance
// binary. Each suite runs a fixed-seed batch and reports how many instances
// failed together with the worst observed value of its checked quantity.

#include <algorithm>
#include <cmath>
#include <string>

#include "fixtures.hpp"
#include "sim_fixtures.hpp"
#include "oracles.hpp"
#include "resilnet/bounds.hpp"
#include "resilnet/error.hpp"
#include "resilnet/input_sets.hpp"
#include "resilnet/matrix_margins.hpp"
#include "resilnet/simulator.hpp"
#include "resilnet/verdicts.hpp"

namespace suite {

using namespace resilnet;

struct Outcome {
    int instances = 0;
    int failures = 0;
    double worst = 0.0;  // largest violation measure seen (0 when none)
    std::string note;

    bool ok(int required) const { return failures == 0 && instances >= required; }
    void record(bool pass, double measure = 0.0)
    {
        ++instances;
        failures += !pass;
        worst = std::max(worst, measure);
    }
};

// ||D x||_{P_out} <= gamma ||x||_{Q_in}; measure is the relative excess.
inline Outcome lemma3_gain(std::uint64_t seed = 1, int n = 100)
{
    oracle::Rng rng(seed);
    Outcome o;
    for (int i = 0; i < n; ++i) {
        const Matrix D = rng.matrix(3, 2), Po = rng.spd(3), Qi = rng.spd(2);
        const double g = gamma_gain(D, Po, Qi);
        double excess = 0.0;
        for (int k = 0; k < 20; ++k) {
            const Vector x = rng.vector(2);
            excess = std::max(excess, oracle::pnorm(D * x, Po) - g * oracle::pnorm(x, Qi));
        }
        o.record(excess <= 1e-12, std::max(0.0, excess));
    }
    return o;
}

inline Outcome lemma4_cauchy_schwarz(std::uint64_t seed = 2, int n = 1000)
{
    oracle::Rng rng(seed);
    Outcome o;
    for (int i = 0; i < n; ++i) {
        const int d = rng.integer(1, 5);
        const Matrix P = rng.spd(d);
        const Vector x = rng.vector(d), y = rng.vector(d);
        const double excess = x.dot(P * y) - p_norm(x, P) * p_norm(y, P);
        o.record(excess <= 1e-12, std::max(0.0, excess));
    }
    return o;
}

// contains_negCW_in_BU <=> z_max < 1e-7.
inline Outcome lemma5_equivalence(std::uint64_t seed = 3, int n = 200)
{
    oracle::Rng rng(seed);
    Outcome o;
    int contained = 0;
    for (int i = 0; i < n; ++i) {
        const int rows = rng.integer(1, 2), m = rng.integer(rows, 3), p = rng.integer(1, 2);
        const Matrix B = rng.matrix(rows, m), P = rng.spd(rows);
        const Matrix C = rng.uniform(0.05, 1.5) * rng.matrix(rows, p);
        const bool in = contains_negCW_in_BU(B, C);
        const double zm = z_max(B, C, P).value;
        contained += in;
        o.record(in == (zm < 1e-7), in ? zm : 0.0);
    }
    o.note = std::to_string(contained) + " contained";
    return o;
}

// Stacked-network trajectories equal the original ones after un-permuting.
inline Outcome lemma1_stacking(std::uint64_t seed = 4, int n = 100)
{
    oracle::Rng rng(seed);
    Outcome o;
    for (int i = 0; i < n; ++i) {
        const int N = rng.integer(3, 4);
        std::vector<int> dims, inputs;
        for (int k = 0; k < N; ++k) {
            dims.push_back(rng.integer(1, 2));
            inputs.push_back(rng.integer(1, 2));
        }
        NetworkSpec spec = oracle::random_network(rng, dims, inputs);
        LossSpec l;
        const int a = rng.integer(1, N - 1), b = a + 1;
        l.losses = {{a, {0}}, {b, {inputs[b - 1] - 1}}};
        const StackedNetwork st = stack_losses(spec, l);
        const Assembly a0 = assemble(spec), a1 = assemble(st.spec);
        const Vector X0 = rng.vector(spec.total_states());
        const int m = spec.total_inputs();
        const Vector phase = rng.vector(m);
        auto u_user = [&](double t) {
            Vector u(m);
            for (int j = 0; j < m; ++j)
                u(j) = std::sin((j + 1) * t + phase(j));
            return u;
        };
        auto u_stacked = [&](double t) { return st.record.to_stacked_inputs(u_user(t)); };
        const auto x0 = simulate_open_loop(a0.A + a0.D, a0.Bbar, X0, u_user, 5.0, 1e-3);
        const auto x1 =
            simulate_open_loop(a1.A + a1.D, a1.Bbar, st.record.to_stacked_states(X0), u_stacked, 5.0, 1e-3);
        double err = 0.0;
        for (std::size_t k = 0; k < x0.size(); ++k)
            err = std::max(err, (st.record.to_user_states(x1[k]) - x0[k]).cwiseAbs().maxCoeff());
        o.record(err <= 1e-10, err);
    }
    return o;
}

// Root and initial-condition identities of the Lemma 6 coefficients.
inline Outcome lemma6_residuals(std::uint64_t seed = 5, int n = 200)
{
    oracle::Rng rng(seed);
    Outcome o;
    for (int i = 0; i < n; ++i) {
        BoundParams bp;
        bp.alpha = rng.uniform(0.1, 3.0);
        bp.alpha_N = rng.uniform(0.1, 3.0);
        bp.gamma = rng.uniform(0.0, 2.0);
        bp.gamma_N = i % 10 == 0 ? bp.alpha * bp.alpha_N / std::max(bp.gamma, 1e-3) : rng.uniform(0.0, 2.0);
        bp.z_max = rng.uniform(0.0, 2.0);
        bp.b_min = i % 2 ? rng.uniform(0.0, 2.0) : 0.0;
        bp.chi0_norm = rng.uniform(0.0, 3.0);
        bp.xN0_norm = rng.uniform(0.0, 3.0);
        const Lemma6 c = lemma6_coefficients(bp.alpha, bp.alpha_N, bp.gamma, bp.gamma_N, bp.z_max, bp.b_min,
                                             bp.chi0_norm, bp.xN0_norm,
                                             i % 10 == 0 ? std::optional<Regime>(Regime::Degenerate) : std::nullopt);
        bp.regime = c.regime;
        bp.r_plus = c.r_plus;
        bp.r_minus = c.r_minus;
        bp.p = c.p;
        bp.h_plus = c.h_plus;
        bp.h_minus = c.h_minus;
        const double scale = 1.0 + std::abs(bp.p) + std::abs(bp.h_plus) + std::abs(bp.h_minus) +
                             bp.r_plus * bp.r_plus;
        const double res = std::max(bp.root_residual(), bp.initial_condition_residual()) / scale;
        o.record(res <= 1e-9, res);
    }
    return o;
}

// Membership in product_Z agrees with build_Z on the assembled matrices.
inline Outcome prop4_product(std::uint64_t seed = 6, int n = 100)
{
    oracle::Rng rng(seed);
    Outcome o;
    for (int i = 0; i < n; ++i) {
        const int n1 = rng.integer(1, 2), nN = rng.integer(1, 2);
        const Matrix B1 = rng.matrix(n1, rng.integer(1, 2)), BN = rng.matrix(nN, rng.integer(nN, 3));
        const Matrix CN = rng.uniform(0.05, 0.6) * rng.matrix(nN, 1);
        const ZSet Z = product_Z({B1}, build_Z(BN, CN));
        Matrix B = Matrix::Zero(n1 + nN, B1.cols() + BN.cols()), C = Matrix::Zero(n1 + nN, 1);
        B.topLeftCorner(n1, B1.cols()) = B1;
        B.bottomRightCorner(nN, BN.cols()) = BN;
        C.bottomRows(nN) = CN;
        const ZSet J = build_Z(B, C);
        int disagree = Z.contains_origin != J.contains_origin;
        for (int k = 0; k < 20; ++k) {
            const Vector z = 0.7 * rng.vector(n1 + nN);
            disagree += Z.contains(z) != J.contains(z);
        }
        o.record(disagree == 0, disagree);
    }
    return o;
}

// resilient_NS agrees with brammer when span Z equals the range of B.
inline Outcome cor1_pairing(std::uint64_t seed = 7, int n = 100)
{
    oracle::Rng rng(seed);
    Outcome o;
    int negatives = 0;
    for (int trial = 0; o.instances < n && trial < 20 * n; ++trial) {
        const int d = rng.integer(1, 3), m = rng.integer(1, 2);
        Matrix A = rng.matrix(d, d);
        if (trial % 2)
            A -= (A.eigenvalues().real().maxCoeff() + 0.2) * Matrix::Identity(d, d);
        const Matrix B = rng.matrix(d, m);
        const Matrix C = 0.1 * B.col(0);
        const ZSet Z = build_Z(B, C);
        if (!Z.contains_origin || Z.dim != numerical_rank(B))
            continue;
        const Verdict r = resilient_NS(A, Z), b = brammer(A, B);
        const bool agree = r.positive() == b.positive() &&
                           (r.conclusion == Conclusion::Negative) == (b.conclusion == Conclusion::Negative);
        negatives += r.conclusion == Conclusion::Negative;
        o.record(agree, agree ? 0.0 : 1.0);
    }
    o.note = std::to_string(negatives) + " negative";
    return o;
}

inline Outcome zprime_dominates(std::uint64_t seed = 8, int n = 100)
{
    oracle::Rng rng(seed);
    Outcome o;
    for (int i = 0; i < n; ++i) {
        const int rows = rng.integer(1, 2);
        const Matrix B = rng.matrix(rows, rng.integer(1, 2)), C = rng.matrix(rows, rng.integer(1, 2));
        const Matrix P = rng.spd(rows);
        const double gap = z_max(B, C, P).value - z_prime(B, C, P).value;
        o.record(gap <= 1e-8, std::max(0.0, gap));
    }
    return o;
}

// Fully actuated random network for which Theorem 7 passes.
struct Instance {
    PartitionedNetwork pn;
    BoundParams bp;
    Vector X0;
};

inline std::optional<Instance> random_theorem7_instance(oracle::Rng& rng)
{
    const int healthy = rng.integer(1, 2);
    std::vector<int> dims, inputs;
    for (int k = 0; k < healthy; ++k) {
        dims.push_back(rng.integer(1, 2));
        inputs.push_back(dims.back() + rng.integer(0, 1));
    }
    dims.push_back(rng.integer(1, 2));
    inputs.push_back(dims.back() + 1);
    NetworkSpec spec = oracle::random_network(rng, dims, inputs, rng.uniform(0.02, 0.15), rng.uniform(0.5, 1.5));
    for (int k = 0; k < healthy; ++k) {
        Subsystem& s = spec.subsystems[k];
        s.B.leftCols(s.states()) += 2.0 * Matrix::Identity(s.states(), s.states());
    }
    Subsystem& lossy = spec.subsystems.back();
    lossy.B.col(lossy.inputs() - 1) *= rng.uniform(0.5, 2.0);
    const int id = lossy.id;
    Instance inst;
    try {
        inst.pn = partition(spec, fixture::lose(id, {lossy.inputs() - 1}));
        inst.X0 = rng.vector(inst.pn.n_total);
        inst.bp = constants_fully_actuated(inst.pn, inst.X0.head(inst.pn.n_hat()), inst.X0.tail(inst.pn.n_N));
    } catch (const Error&) {
        return std::nullopt;
    }
    if (!theorem7_verdict(inst.bp).positive())
        return std::nullopt;
    return inst;
}

struct Domination {
    Outcome chi, integral, closed;
    int attempts = 0;
};

// Simulated norms against the chi envelope, the integral bound and the closed x_N envelope.
inline Domination domination_chain(std::uint64_t seed = 9, int n = 50, double atol = 1e-6)
{
    oracle::Rng rng(seed);
    Domination d;
    while (d.chi.instances < n && d.attempts < 50 * n) {
        ++d.attempts;
        auto inst = random_theorem7_instance(rng);
        if (!inst)
            continue;
        const BoundParams& bp = inst->bp;
        SimSetup s;
        s.hat = {PolicyKind::NormDirection, {}};
        s.uN = {PolicyKind::BestResponse, {}};
        s.w = rng.integer(0, 1) ? Policy{PolicyKind::WorstVertex, {}}
                                : Policy{PolicyKind::ConstantVertex, oracle::vertex(inst->pn.p_N, rng.integer(0, 1))};
        s.P_hat = bp.P_hat;
        s.P_N = bp.P_N;
        s.b_min = bp.b_min;
        const ChiEnvelope chi(bp);
        const double T = chi.zero_time().value_or(5.0);
        Trajectory tr;
        try {
            tr = simulate(inst->pn, s, inst->X0, std::min(T + 3.0, 15.0), 1e-3);
        } catch (const PolicyInfeasible&) {
            // the norm-direction target left the healthy input image; not a bound failure
            continue;
        }
        const XnClosedEnvelope closed(bp, chi.zero_time());
        const auto integral = xN_integral_bound(tr.times, tr.DN_chi_PN, bp);
        double e_chi = 0.0, e_int = 0.0, e_closed = 0.0;
        for (std::size_t k = 0; k < tr.size(); ++k) {
            const double t = tr.times[k];
            e_chi = std::max(e_chi, tr.chi_Pnorm[k] - chi(t));
            e_int = std::max(e_int, tr.xN_Pnorm[k] - integral[k]);
            e_closed = std::max(e_closed, integral[k] - closed(t));
        }
        d.chi.record(e_chi <= atol, std::max(0.0, e_chi));
        d.integral.record(e_int <= atol, std::max(0.0, e_int));
        d.closed.record(e_closed <= atol, std::max(0.0, e_closed));
    }
    return d;
}

}  // namespace suite
