#include "resilnet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "resilnet/box_qp.hpp"
#include "resilnet/error.hpp"
#include "resilnet/input_sets.hpp"
#include "resilnet/lp.hpp"
#include "resilnet/matrix_margins.hpp"

namespace resilnet {

const char* to_string(PolicyKind k)
{
    switch (k) {
    case PolicyKind::Zero: return "zero";
    case PolicyKind::NormDirection: return "norm_direction";
    case PolicyKind::LinearFeedback: return "linear_feedback";
    case PolicyKind::ConstantVertex: return "constant";
    case PolicyKind::BestResponse: return "best_response";
    case PolicyKind::WorstVertex: return "worst_vertex";
    }
    return "?";
}

PolicyKind policy_from_string(const std::string& name)
{
    for (PolicyKind k : {PolicyKind::Zero, PolicyKind::NormDirection, PolicyKind::LinearFeedback,
                         PolicyKind::ConstantVertex, PolicyKind::BestResponse, PolicyKind::WorstVertex})
        if (name == to_string(k))
            return k;
    throw ValidationError("unknown policy '" + name + "'");
}

double Trajectory::max_K_chi_inf() const
{
    double m = 0.0;
    for (double v : K_chi_inf)
        m = std::max(m, v);
    return m;
}

std::optional<double> Trajectory::first_time_chi_below(double level) const
{
    for (std::size_t k = 0; k < times.size(); ++k)
        if (chi_Pnorm[k] <= level)
            return times[k];
    return std::nullopt;
}

namespace {

// Near the origin NormDirection switches to exact compensation of the drift
// plus the constant velocity -chi_k/dt, chi_k being the state at step start,
// so every RK4 step lands on chi = 0.
void check_cube(const Vector& v, Index dim, const char* what)
{
    if (v.size() != dim)
        throw DimensionError(std::string(what) + ": constant input has the wrong dimension");
    if (dim > 0 && v.cwiseAbs().maxCoeff() > 1.0 + 1e-12)
        throw ValidationError(std::string(what) + ": constant input leaves the unit hypercube");
}

class Controller {
public:
    Controller(const PartitionedNetwork& pn, const SimSetup& s, double dt)
        : pn_(pn), s_(s), nh_(pn.n_hat()), mh_(pn.m_hat()), mN_(pn.B_N.cols()), pN_(pn.p_N),
          AD_(pn.Ahat + pn.Dhat), cod_(pn.Bhat), inv_dt_(1.0 / dt)
    {
        switch (s.w.kind) {
        case PolicyKind::Zero: break;
        case PolicyKind::ConstantVertex: check_cube(s.w.value, pN_, "policy_w"); break;
        case PolicyKind::WorstVertex: w_star_ = worst_vertex(pn.B_N, pn.C_N, s.P_N); break;
        default: throw ValidationError(std::string("policy_w: '") + to_string(s.w.kind) + "' is not an adversary");
        }
        switch (s.uN.kind) {
        case PolicyKind::Zero:
        case PolicyKind::BestResponse: break;
        case PolicyKind::ConstantVertex: check_cube(s.uN.value, mN_, "policy_u"); break;
        default: throw ValidationError(std::string("policy_u: '") + to_string(s.uN.kind) + "' is not supported");
        }
        switch (s.hat.kind) {
        case PolicyKind::Zero: break;
        case PolicyKind::ConstantVertex: check_cube(s.hat.value, mh_, "policy_hat"); break;
        case PolicyKind::LinearFeedback:
            if (s.K.rows() != mh_ || s.K.cols() != nh_)
                throw DimensionError("policy_hat: gain K must be m_hat x n_hat");
            break;
        case PolicyKind::NormDirection:
            if (s.P_hat.rows() != nh_ || mh_ == 0)
                throw DimensionError("policy_hat: NormDirection needs P_hat and healthy inputs");
            break;
        default: throw ValidationError(std::string("policy_hat: '") + to_string(s.hat.kind) + "' is not supported");
        }
    }

    Vector w(const Vector& /*X*/) const
    {
        switch (s_.w.kind) {
        case PolicyKind::ConstantVertex: return s_.w.value;
        case PolicyKind::WorstVertex: return w_star_;
        default: return Vector::Zero(pN_);
        }
    }

    Vector uN(const Vector& w) const
    {
        switch (s_.uN.kind) {
        case PolicyKind::ConstantVertex: return s_.uN.value;
        case PolicyKind::BestResponse:
            if (mN_ == 0)
                return Vector::Zero(0);
            return min_pnorm_over_cube(pn_.B_N, pn_.C_N * w, s_.P_N).x;
        default: return Vector::Zero(mN_);
        }
    }

    Vector hat(const Vector& X, double t) const
    {
        const Vector chi = X.head(nh_);
        switch (s_.hat.kind) {
        case PolicyKind::ConstantVertex: return s_.hat.value;
        case PolicyKind::LinearFeedback: return -s_.K * chi;
        case PolicyKind::NormDirection: break;
        default: return Vector::Zero(mh_);
        }
        if (hold_) {
            const Vector target = -AD_ * chi - pn_.D_minus_N * X.tail(pn_.n_N) - inv_dt_ * chi_start_;
            if (auto u = solve_hat(target))
                return *u;
        }
        const double nrm = p_norm(chi, s_.P_hat);
        if (nrm < 1e-12)
            return Vector::Zero(mh_);
        const Vector target = -(s_.b_min / nrm) * chi;
        if (auto u = solve_hat(target))
            return *u;
        throw PolicyInfeasible("NormDirection: target outside Bhat Uhat", t);
    }

    // Called at step start; the hold mode is sticky.
    void update_mode(const Vector& X, double t, double dt, std::vector<ModeChange>& log)
    {
        if (s_.hat.kind != PolicyKind::NormDirection)
            return;
        const Vector chi = X.head(nh_);
        chi_start_ = chi;
        if (hold_)
            return;
        if (p_norm(chi, s_.P_hat) <= s_.b_min * dt) {
            const Vector target = -AD_ * chi - pn_.D_minus_N * X.tail(pn_.n_N) - inv_dt_ * chi;
            if (solve_hat(target)) {
                hold_ = true;
                log.push_back({t, "norm_direction -> hold at origin"});
            }
        }
    }

private:
    std::optional<Vector> solve_hat(const Vector& target) const
    {
        const double scale = std::max(1.0, target.norm());
        Vector u = cod_.solve(target);
        const bool exact = (pn_.Bhat * u - target).norm() <= 1e-9 * scale;
        if (exact && u.cwiseAbs().maxCoeff() <= 1.0 + 1e-9)
            return u;
        if (!exact)
            return std::nullopt;
        const Vector ones = Vector::Ones(mh_);
        LpResult lp = solve_lp(Vector::Zero(mh_), pn_.Bhat, target, -ones, ones);
        if (lp.status != LpResult::Status::Optimal)
            return std::nullopt;
        if ((pn_.Bhat * lp.x - target).norm() > 1e-9 * scale)
            return std::nullopt;
        return lp.x;
    }

    const PartitionedNetwork& pn_;
    const SimSetup& s_;
    Index nh_, mh_, mN_, pN_;
    Matrix AD_;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod_;
    double inv_dt_;
    Vector chi_start_;
    Vector w_star_;
    bool hold_ = false;
};

}  // namespace

Trajectory simulate(const PartitionedNetwork& pn, const SimSetup& setup, const Vector& X0, double t_end, double dt)
{
    if (!(dt > 0.0) || !(t_end >= 0.0))
        throw ValidationError("simulate: dt must be positive and t_end nonnegative");
    if (X0.size() != pn.n_total)
        throw DimensionError("simulate: X0 has the wrong dimension");
    const Index nh = pn.n_hat();
    if (setup.P_hat.rows() != nh || setup.P_N.rows() != pn.n_N)
        throw DimensionError("simulate: P_hat / P_N do not match the partition");

    Controller ctl(pn, setup, dt);
    const Matrix AD = pn.A + pn.D;
    const Index mh = pn.m_hat(), mN = pn.B_N.cols();

    auto inputs = [&](const Vector& X, double t, Vector& u, Vector& w) {
        w = ctl.w(X);
        const Vector uN = ctl.uN(w);
        u.resize(mh + mN);
        u.head(mh) = ctl.hat(X, t);
        u.tail(mN) = uN;
    };
    auto f = [&](const Vector& X, double t) {
        Vector u, w;
        inputs(X, t, u, w);
        Vector dx = AD * X;
        if (u.size() > 0)
            dx += pn.B * u;
        if (w.size() > 0)
            dx += pn.C * w;
        return dx;
    };

    const long steps = std::lround(t_end / dt);
    Trajectory tr;
    tr.dt = dt;
    tr.has_K = setup.K.size() > 0;
    tr.times.reserve(steps + 1);
    tr.states.reserve(steps + 1);

    Vector X = X0;
    for (long k = 0; k <= steps; ++k) {
        const double t = k * dt;
        ctl.update_mode(X, t, dt, tr.mode_changes);
        Vector u, w;
        inputs(X, t, u, w);
        const Vector chi = X.head(nh);
        tr.times.push_back(t);
        tr.states.push_back(X);
        tr.u.push_back(u);
        tr.w.push_back(w);
        tr.chi_Pnorm.push_back(p_norm(chi, setup.P_hat));
        tr.xN_Pnorm.push_back(p_norm(X.tail(pn.n_N), setup.P_N));
        tr.DN_chi_PN.push_back(p_norm(pn.D_N_minus * chi, setup.P_N));
        if (tr.has_K) {
            const double v = nh > 0 && setup.K.rows() > 0 ? (setup.K * chi).cwiseAbs().maxCoeff() : 0.0;
            tr.K_chi_inf.push_back(v);
            if (v > 1.0 + 1e-12)
                ++tr.feedback_violations;
        }
        if (k == steps)
            break;
        const Vector k1 = f(X, t);
        const Vector k2 = f(X + 0.5 * dt * k1, t + 0.5 * dt);
        const Vector k3 = f(X + 0.5 * dt * k2, t + 0.5 * dt);
        const Vector k4 = f(X + dt * k3, t + dt);
        X += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return tr;
}

std::vector<Vector> simulate_open_loop(const Matrix& A, const Matrix& B, const Vector& X0,
                                       const std::function<Vector(double)>& u, double t_end, double dt)
{
    if (!(dt > 0.0))
        throw ValidationError("simulate_open_loop: dt must be positive");
    if (A.rows() != X0.size() || B.rows() != X0.size())
        throw DimensionError("simulate_open_loop: dimension mismatch");
    auto f = [&](const Vector& X, double t) -> Vector { return A * X + B * u(t); };
    const long steps = std::lround(t_end / dt);
    std::vector<Vector> out;
    out.reserve(steps + 1);
    Vector X = X0;
    out.push_back(X);
    for (long k = 0; k < steps; ++k) {
        const double t = k * dt;
        const Vector k1 = f(X, t);
        const Vector k2 = f(X + 0.5 * dt * k1, t + 0.5 * dt);
        const Vector k3 = f(X + 0.5 * dt * k2, t + 0.5 * dt);
        const Vector k4 = f(X + dt * k3, t + dt);
        X += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push_back(X);
    }
    return out;
}

Vector worst_vertex(const Matrix& B, const Matrix& C, const Matrix& P)
{
    return z_max(B, C, P).w;
}

int ViolationReport::certified_violations() const
{
    int n = 0;
    for (const auto& c : channels)
        if (c.certified)
            n += c.violations;
    return n;
}

const ChannelCheck* ViolationReport::find(const std::string& name) const
{
    for (const auto& c : channels)
        if (c.name == name)
            return &c;
    return nullptr;
}

ChannelCheck check_channel(const std::string& name, const std::vector<double>& times,
                           const std::vector<double>& simulated, const std::vector<double>& bound, double atol,
                           bool certified)
{
    if (times.size() != simulated.size() || times.size() != bound.size())
        throw DimensionError("check_channel: grids do not match for " + name);
    constexpr std::size_t kMaxEntries = 1000;
    ChannelCheck c;
    c.name = name;
    c.certified = certified;
    c.worst_slack = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double slack = bound[k] - simulated[k];
        if (slack < c.worst_slack) {
            c.worst_slack = slack;
            c.worst_time = times[k];
        }
        if (simulated[k] > bound[k] + atol) {
            ++c.violations;
            if (!c.first_violation)
                c.first_violation = times[k];
            if (c.entries.size() < kMaxEntries)
                c.entries.push_back({times[k], simulated[k], bound[k], slack});
        }
    }
    return c;
}

}  // namespace resilnet
