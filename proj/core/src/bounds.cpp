#include "resilnet/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "resilnet/error.hpp"
#include "resilnet/input_sets.hpp"

namespace resilnet {

const char* to_string(Regime r)
{
    return r == Regime::Generic ? "Generic" : "Degenerate";
}

const char* to_string(ActuationMode m)
{
    return m == ActuationMode::FullyActuated ? "FullyActuated" : "Underactuated";
}

Lemma6 lemma6_coefficients(double alpha, double alpha_N, double gamma, double gamma_N, double z, double b, double y0,
                           double yN0, std::optional<Regime> force)
{
    Lemma6 c;
    const double aa = alpha * alpha_N, gg = gamma * gamma_N;
    const bool degenerate = force ? *force == Regime::Degenerate
                                  : std::abs(aa - gg) <= 1e-12 * std::max(aa, gg);
    const double disc = std::sqrt((alpha - alpha_N) * (alpha - alpha_N) + 4.0 * gg);
    c.r_plus = 0.5 * (alpha_N - alpha + disc);
    c.r_minus = 0.5 * (alpha_N - alpha - disc);
    // Right-hand side of the derivative condition at t = 0.
    const double slope = (alpha_N - alpha) * y0 - b + gamma * yN0;
    if (!degenerate) {
        c.regime = Regime::Generic;
        c.p = (gamma * z - alpha_N * b) / (aa - gg);
        // h_+ + h_- = y0 - p,  h_+ r_+ + h_- r_- = slope - alpha_N p
        const double s0 = y0 - c.p;
        const double s1 = slope - alpha_N * c.p;
        c.h_plus = (s1 - c.r_minus * s0) / (c.r_plus - c.r_minus);
        c.h_minus = s0 - c.h_plus;
    } else {
        c.regime = Regime::Degenerate;
        c.r_plus = alpha_N;
        c.r_minus = -alpha;
        c.p = (gamma * z - alpha_N * b) / (alpha + alpha_N);
        // h_+ + h_- = y0,  p + alpha_N h_+ - alpha h_- = slope
        c.h_plus = (alpha * y0 + slope - c.p) / (alpha + alpha_N);
        c.h_minus = y0 - c.h_plus;
    }
    return c;
}

Lemma6 BoundParams::coefficients() const
{
    Lemma6 c;
    c.regime = regime;
    c.r_plus = r_plus;
    c.r_minus = r_minus;
    c.p = p;
    c.h_plus = h_plus;
    c.h_minus = h_minus;
    return c;
}

double BoundParams::root_residual() const
{
    auto f = [&](double r) { return r * r + (alpha - alpha_N) * r - gamma * gamma_N; };
    return std::max(std::abs(f(r_plus)), std::abs(f(r_minus)));
}

double BoundParams::initial_condition_residual() const
{
    const double slope = (alpha_N - alpha) * chi0_norm - b_min + gamma * xN0_norm;
    if (regime == Regime::Generic) {
        const double e1 = p + h_plus + h_minus - chi0_norm;
        const double e2 = alpha_N * p + h_plus * r_plus + h_minus * r_minus - slope;
        return std::max(std::abs(e1), std::abs(e2));
    }
    const double e1 = h_plus + h_minus - chi0_norm;
    const double e2 = p + alpha_N * h_plus - alpha * h_minus - slope;
    return std::max(std::abs(e1), std::abs(e2));
}

namespace {

void fill_lemma6(BoundParams& bp)
{
    Lemma6 c = lemma6_coefficients(bp.alpha, bp.alpha_N, bp.gamma, bp.gamma_N, bp.z_max, bp.b_min, bp.chi0_norm,
                                   bp.xN0_norm);
    bp.regime = c.regime;
    bp.r_plus = c.r_plus;
    bp.r_minus = c.r_minus;
    bp.p = c.p;
    bp.h_plus = c.h_plus;
    bp.h_minus = c.h_minus;
    const double aa = bp.decay_product(), gg = bp.coupling_product();
    bp.near_degenerate = std::abs(aa - gg) <= 1e-6 * std::max(aa, gg);
    if (bp.near_degenerate) {
        const Regime other = c.regime == Regime::Generic ? Regime::Degenerate : Regime::Generic;
        if (other == Regime::Generic && aa == gg) {
            bp.other_branch.reset();
        } else {
            bp.other_branch = lemma6_coefficients(bp.alpha, bp.alpha_N, bp.gamma, bp.gamma_N, bp.z_max, bp.b_min,
                                                  bp.chi0_norm, bp.xN0_norm, other);
        }
        bp.notices.push_back("near-degenerate regime: both Lemma 6 branches reported");
    }
    bp.diverging = gg >= aa;
    if (bp.diverging)
        bp.notices.push_back("stability condition gamma*gamma_N < alpha*alpha_N violated; envelopes diverge");
}

void common_constants(BoundParams& bp, const PartitionedNetwork& pn, const LyapunovCertificate& cert_N,
                      const Vector& chi0, const Vector& xN0)
{
    if (chi0.size() != pn.n_hat() || xN0.size() != pn.n_N)
        throw DimensionError("bounds: initial state dimensions do not match the partition");
    if (!is_hurwitz(pn.A_N))
        throw NotHurwitz("bounds: A_N is not Hurwitz", spectral_abscissa(pn.A_N));
    bp.P_N = cert_N.P;
    bp.Q_N = cert_N.Q;
    bp.alpha_N = cert_N.alpha;
    bp.alpha = lambda_min_sym(bp.Q_hat) / (2.0 * lambda_max_sym(bp.P_hat));
    bp.gamma = gamma_gain(pn.D_minus_N, bp.P_hat, bp.P_N);
    bp.gamma_N = gamma_gain(pn.D_N_minus, bp.P_N, bp.P_hat);
    const ZMaxResult zm = z_max(pn.B_N, pn.C_N, bp.P_N);
    bp.z_max = zm.value;
    bp.worst_w = zm.w;
    bp.z_prime = z_prime(pn.B_N, pn.C_N, bp.P_N).value;
    bp.vacuous = contains_negCW_in_BU(pn.B_N, pn.C_N);
    if (bp.vacuous)
        bp.notices.push_back("-C_N W_N is contained in B_N U_N: the malfunctioning subsystem is resilient and the "
                             "destabilization analysis is vacuous");
    bp.chi0_norm = p_norm(chi0, bp.P_hat);
    bp.xN0_norm = p_norm(xN0, bp.P_N);
}

}  // namespace

BoundParams constants_fully_actuated(const PartitionedNetwork& pn, const LyapunovCertificate& cert_N,
                                     const LyapunovCertificate& cert_hat, const Vector& chi0, const Vector& xN0)
{
    BoundParams bp;
    bp.mode = ActuationMode::FullyActuated;
    const Matrix AD = pn.Ahat + pn.Dhat;
    if (!is_hurwitz(AD))
        throw NotHurwitz("bounds: Ahat + Dhat is not Hurwitz", spectral_abscissa(AD));
    if (pn.Bhat.cols() == 0 || numerical_rank(pn.Bhat) < pn.n_hat())
        throw NotFullRowRank("bounds: Bhat must have full row rank in the fully actuated case");
    bp.P_hat = cert_hat.P;
    bp.Q_hat = cert_hat.Q;
    common_constants(bp, pn, cert_N, chi0, xN0);
    bp.b_min = b_min(pn.Bhat, bp.P_hat).value;
    fill_lemma6(bp);
    return bp;
}

BoundParams constants_fully_actuated(const PartitionedNetwork& pn, const Vector& chi0, const Vector& xN0)
{
    return constants_fully_actuated(pn, solve_lyapunov(pn.A_N), solve_lyapunov(pn.Ahat + pn.Dhat), chi0, xN0);
}

BoundParams constants_underactuated(const PartitionedNetwork& pn, const Matrix& K, const LyapunovCertificate& cert_N,
                                    const Matrix& Q_hat, const Vector& chi0, const Vector& xN0)
{
    BoundParams bp;
    bp.mode = ActuationMode::Underactuated;
    if (K.rows() != pn.Bhat.cols() || K.cols() != pn.n_hat())
        throw DimensionError("bounds: gain K must be m_hat x n_hat");
    const Matrix Acl = pn.Ahat + pn.Dhat - pn.Bhat * K;
    LyapunovCertificate cert_hat = solve_lyapunov(Acl, Q_hat);
    bp.P_hat = cert_hat.P;
    bp.Q_hat = cert_hat.Q;
    bp.K = K;
    common_constants(bp, pn, cert_N, chi0, xN0);
    bp.b_min = 0.0;
    fill_lemma6(bp);
    return bp;
}

BoundParams constants_underactuated(const PartitionedNetwork& pn, const Matrix& K, const Vector& chi0,
                                    const Vector& xN0)
{
    return constants_underactuated(pn, K, solve_lyapunov(pn.A_N),
                                   Matrix::Identity(pn.n_hat(), pn.n_hat()), chi0, xN0);
}

Verdict theorem7_verdict(const BoundParams& bp)
{
    Verdict v;
    v.test = "theorem7";
    v.sufficiency = Sufficiency::SufficientOnly;
    const double gg = bp.coupling_product(), aa = bp.decay_product();
    const double lhs = bp.gamma * bp.z_max, rhs = bp.alpha_N * bp.b_min;
    std::ostringstream c1, c2;
    c1 << "gamma*gamma_N = " << gg << " <= alpha*alpha_N = " << aa;
    c2 << "gamma*z_max = " << lhs << " < alpha_N*b_min = " << rhs;
    const bool ok1 = gg <= aa, ok2 = lhs < rhs;
    v.basis.push_back({"gamma*gamma_N <= alpha*alpha_N", ok1, gg, aa, c1.str()});
    v.basis.push_back({"gamma*z_max < alpha_N*b_min", ok2, lhs, rhs, c2.str()});
    v.conclusion = (ok1 && ok2 && bp.mode == ActuationMode::FullyActuated) ? Conclusion::ResilientlyStabilizable
                                                                          : Conclusion::NotDetermined;
    return v;
}

ChiEnvelope::ChiEnvelope(const BoundParams& bp)
    : c_(bp.coefficients()), alpha_(bp.alpha), alpha_N_(bp.alpha_N)
{
    finite_time_ = bp.mode == ActuationMode::FullyActuated && bp.coupling_product() <= bp.decay_product() &&
                   bp.gamma * bp.z_max < bp.alpha_N * bp.b_min;
    // First zero crossing: bracket on a uniform scan, then bisect to 1e-10.
    if (raw(0.0) <= 0.0) {
        zero_time_ = 0.0;
        return;
    }
    double rate = std::max({std::abs(c_.r_plus - alpha_N_), std::abs(c_.r_minus - alpha_N_), alpha_ + alpha_N_});
    double slow = std::min(std::abs(c_.r_plus - alpha_N_) > 1e-12 ? std::abs(c_.r_plus - alpha_N_) : rate,
                           std::abs(c_.r_minus - alpha_N_));
    const double horizon = 60.0 / std::max(slow, 1e-9);
    const int steps = 200000;
    const double h = horizon / steps;
    double prev = 0.0;
    for (int k = 1; k <= steps; ++k) {
        const double t = k * h;
        if (raw(t) <= 0.0) {
            double lo = prev, hi = t;
            while (hi - lo > 1e-10) {
                const double mid = 0.5 * (lo + hi);
                (raw(mid) <= 0.0 ? hi : lo) = mid;
            }
            zero_time_ = hi;
            return;
        }
        prev = t;
    }
}

double ChiEnvelope::raw(double t) const
{
    if (c_.regime == Regime::Generic)
        return c_.p + c_.h_plus * std::exp((c_.r_plus - alpha_N_) * t) +
               c_.h_minus * std::exp((c_.r_minus - alpha_N_) * t);
    return c_.p * t + c_.h_plus + c_.h_minus * std::exp(-(alpha_ + alpha_N_) * t);
}

double ChiEnvelope::operator()(double t) const
{
    if (finite_time_ && zero_time_ && t >= *zero_time_)
        return 0.0;
    return std::max(0.0, raw(t));
}

namespace {

// e^{-a t} (e^{r t} - 1) / r with the r -> 0 limit.
double damped_phi(double r, double a, double t)
{
    if (std::abs(r) < 1e-12)
        return t * std::exp(-a * t);
    return std::exp(-a * t) * std::expm1(r * t) / r;
}

}  // namespace

double m_function(const BoundParams& bp, double t)
{
    const double aN = bp.alpha_N, gN = bp.gamma_N, z = bp.z_max;
    const double decay = -std::expm1(-aN * t);  // 1 - e^{-alpha_N t}
    if (bp.regime == Regime::Generic) {
        return ((z + gN * bp.p) / aN) * decay +
               gN * (bp.h_plus * damped_phi(bp.r_plus, aN, t) + bp.h_minus * damped_phi(bp.r_minus, aN, t));
    }
    const double a = bp.alpha;
    return (z + gN * bp.h_plus - gN * bp.p / aN) * decay / aN + (gN * bp.p / aN) * t +
           gN * bp.h_minus * std::exp(-aN * t) * (-std::expm1(-a * t)) / a;
}

XnClosedEnvelope::XnClosedEnvelope(const BoundParams& bp, std::optional<double> switch_time)
    : bp_(bp), switch_(switch_time)
{
    if (switch_) {
        anchor_ = pre_switch(*switch_);
        const double ss = bp_.z_max / bp_.alpha_N;
        // Gap to the post-switch formula anchored at x_N(0) instead of x_N(t_switch).
        const double paper_form = ss + (bp_.xN0_norm - ss) * std::exp(-bp_.alpha_N * *switch_);
        jump_ = paper_form - anchor_;
    }
}

double XnClosedEnvelope::pre_switch(double t) const
{
    return std::max(0.0, std::exp(-bp_.alpha_N * t) * bp_.xN0_norm + m_function(bp_, t));
}

double XnClosedEnvelope::operator()(double t) const
{
    if (!switch_ || t < *switch_)
        return pre_switch(t);
    const double ss = bp_.z_max / bp_.alpha_N;
    return ss + (anchor_ - ss) * std::exp(-bp_.alpha_N * (t - *switch_));
}

std::vector<double> xN_integral_bound(const std::vector<double>& times, const std::vector<double>& DN_chi_PN,
                                      const BoundParams& bp)
{
    if (times.size() != DN_chi_PN.size())
        throw DimensionError("xN_integral_bound: channel length does not match the time grid");
    std::vector<double> out(times.size());
    if (times.empty())
        return out;
    const double aN = bp.alpha_N;
    // I(t) = int_0^t e^{-alpha_N (t - tau)} beta(tau) dtau, advanced step by step.
    double I = 0.0;
    out[0] = std::exp(-aN * times[0]) * bp.xN0_norm;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double h = times[k] - times[k - 1];
        const double e = std::exp(-aN * h);
        const double b0 = bp.z_max + DN_chi_PN[k - 1], b1 = bp.z_max + DN_chi_PN[k];
        I = e * I + 0.5 * h * (e * b0 + b1);
        out[k] = std::exp(-aN * times[k]) * bp.xN0_norm + I;
    }
    return out;
}

AdmissibilityCheck admissibility(const BoundParams& bp)
{
    AdmissibilityCheck out;
    const double knorm = spectral_norm(bp.K);
    out.threshold = knorm > 0.0 ? std::sqrt(lambda_min_sym(bp.P_hat)) / knorm : std::numeric_limits<double>::infinity();
    ChiEnvelope env(bp);
    auto b = [&](double t) { return env.raw(t); };

    std::vector<std::pair<double, double>> cand{{0.0, b(0.0)}};
    std::optional<double> crit;
    double curvature = 0.0;
    double limit = 0.0;
    if (bp.regime == Regime::Generic) {
        const double a = bp.r_plus - bp.alpha_N, c = bp.r_minus - bp.alpha_N;
        const double hp = bp.h_plus, hm = bp.h_minus;
        if (hp * a != 0.0) {
            const double arg = -hm * c / (hp * a);
            if (arg > 0.0 && a != c) {
                const double t = std::log(arg) / (a - c);
                if (t > 0.0) {
                    crit = t;
                    curvature = hp * a * a * std::exp(a * t) + hm * c * c * std::exp(c * t);
                }
            }
        }
        if (a > 1e-14 && hp > 0.0)
            out.unbounded = true;
        else if (a > 1e-14)
            limit = -std::numeric_limits<double>::infinity();
        else if (std::abs(a) <= 1e-14)
            limit = bp.p + hp;
        else
            limit = bp.p;
    } else {
        const double k = bp.alpha + bp.alpha_N;
        if (bp.p != 0.0) {
            const double arg = k * bp.h_minus / bp.p;
            if (arg > 0.0) {
                const double t = std::log(arg) / k;
                if (t > 0.0) {
                    crit = t;
                    curvature = bp.h_minus * k * k * std::exp(-k * t);
                }
            }
        }
        if (bp.p > 0.0)
            out.unbounded = true;
        else if (bp.p < 0.0)
            limit = -std::numeric_limits<double>::infinity();
        else
            limit = bp.h_plus;
    }
    if (crit) {
        cand.emplace_back(*crit, b(*crit));
        if (curvature > 0.0) {
            out.t_min = *crit;
            out.b_at_min = b(*crit);
        }
    }
    if (out.unbounded) {
        out.sup_b = std::numeric_limits<double>::infinity();
        out.t_sup = std::numeric_limits<double>::infinity();
    } else {
        cand.emplace_back(std::numeric_limits<double>::infinity(), limit);
        auto best = std::max_element(cand.begin(), cand.end(),
                                     [](const auto& x, const auto& y) { return x.second < y.second; });
        out.sup_b = best->second;
        out.t_sup = best->first;
    }
    out.passed = out.sup_b <= out.threshold;
    return out;
}

RiccatiSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R)
{
    const Index n = A.rows(), m = B.cols();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || R.rows() != m)
        throw DimensionError("solve_care: inconsistent dimensions");
    if (ctrb_rank(A, B) < n)
        throw NotControllable("solve_care: pair (A, B) is not controllable");
    require_spd(R, "solve_care: R");
    const Matrix Rinv = R.inverse();
    const Matrix G = B * Rinv * B.transpose();

    Matrix H(2 * n, 2 * n);
    H << A, -G, -Q, -A.transpose();
    Eigen::EigenSolver<Matrix> es(H);
    if (es.info() != Eigen::Success)
        throw RiccatiFailure("solve_care: Hamiltonian eigendecomposition failed");
    Eigen::MatrixXcd X(2 * n, n);
    Index k = 0;
    for (Index i = 0; i < 2 * n; ++i) {
        const auto l = es.eigenvalues()(i);
        if (std::abs(l.real()) < 1e-10 * std::max(1.0, std::abs(l)))
            throw RiccatiFailure("solve_care: Hamiltonian has eigenvalues on the imaginary axis");
        if (l.real() < 0.0) {
            if (k >= n)
                throw RiccatiFailure("solve_care: stable subspace has the wrong dimension");
            X.col(k++) = es.eigenvectors().col(i);
        }
    }
    if (k != n)
        throw RiccatiFailure("solve_care: stable subspace has the wrong dimension");
    Eigen::MatrixXcd X1 = X.topRows(n), X2 = X.bottomRows(n);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(X1);
    if (!lu.isInvertible())
        throw RiccatiFailure("solve_care: stable invariant subspace is not a graph");
    Matrix S = (X2 * lu.inverse()).real();
    S = 0.5 * (S + S.transpose());

    auto residual = [&](const Matrix& P) {
        return (A.transpose() * P + P * A - P * G * P + Q).norm();
    };
    // Newton-Kleinman polish on the Lyapunov solver.
    for (int it = 0; it < 4; ++it) {
        Matrix K = Rinv * B.transpose() * S;
        Matrix Acl = A - B * K;
        if (!is_hurwitz(Acl))
            break;
        Matrix Qk = Q + K.transpose() * R * K;
        Qk = 0.5 * (Qk + Qk.transpose());
        Matrix Sn;
        try {
            Sn = solve_lyapunov(Acl, Qk).P;
        } catch (const Error&) {
            break;
        }
        if (residual(Sn) > residual(S))
            break;
        S = Sn;
    }

    RiccatiSolution out;
    out.S = S;
    out.K = Rinv * B.transpose() * S;
    out.residual = residual(S);
    if (!is_hurwitz(A - B * out.K))
        throw RiccatiFailure("solve_care: closed loop A - B K is not Hurwitz");
    return out;
}

Matrix synthesize_gain(const PartitionedNetwork& pn, const Matrix& Q, const Matrix& R)
{
    return solve_care(pn.Ahat + pn.Dhat, pn.Bhat, Q, R).K;
}

Matrix synthesize_gain(const PartitionedNetwork& pn)
{
    const Index n = pn.n_hat(), m = pn.Bhat.cols();
    return synthesize_gain(pn, Matrix::Identity(n, n), Matrix::Identity(m, m));
}

}  // namespace resilnet
