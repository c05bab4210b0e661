#pragma once

#include <optional>
#include <string>
#include <vector>

#include "resilnet/matrix_margins.hpp"
#include "resilnet/network_model.hpp"
#include "resilnet/types.hpp"
#include "resilnet/verdicts.hpp"

namespace resilnet {

enum class Regime { Generic, Degenerate };
enum class ActuationMode { FullyActuated, Underactuated };

const char* to_string(Regime r);
const char* to_string(ActuationMode m);

// Closed-form solution y(t) of the comparison system
//   y' = -alpha y - b + gamma yN,  yN' = -alpha_N yN + z + gamma_N y.
struct Lemma6 {
    Regime regime = Regime::Generic;
    double r_plus = 0.0, r_minus = 0.0;
    double p = 0.0, h_plus = 0.0, h_minus = 0.0;
};

Lemma6 lemma6_coefficients(double alpha, double alpha_N, double gamma, double gamma_N, double z, double b, double y0,
                           double yN0, std::optional<Regime> force = std::nullopt);

struct BoundParams {
    double alpha = 0.0, alpha_N = 0.0;
    double gamma = 0.0, gamma_N = 0.0;
    double z_max = 0.0, b_min = 0.0;
    double r_plus = 0.0, r_minus = 0.0;
    double p = 0.0, h_plus = 0.0, h_minus = 0.0;
    Regime regime = Regime::Generic;
    ActuationMode mode = ActuationMode::FullyActuated;
    double chi0_norm = 0.0, xN0_norm = 0.0;

    bool diverging = false;       // gamma gamma_N >= alpha alpha_N
    bool near_degenerate = false;
    bool vacuous = false;         // -C_N W_N inside B_N U_N
    std::optional<Lemma6> other_branch;
    double z_prime = 0.0;

    Matrix P_N, Q_N, P_hat, Q_hat;
    Matrix K;  // underactuated feedback gain
    Vector worst_w;
    std::vector<std::string> notices;

    double coupling_product() const { return gamma * gamma_N; }
    double decay_product() const { return alpha * alpha_N; }
    Lemma6 coefficients() const;
    double root_residual() const;
    double initial_condition_residual() const;
};

BoundParams constants_fully_actuated(const PartitionedNetwork& pn, const LyapunovCertificate& cert_N,
                                     const LyapunovCertificate& cert_hat, const Vector& chi0, const Vector& xN0);
BoundParams constants_fully_actuated(const PartitionedNetwork& pn, const Vector& chi0, const Vector& xN0);

BoundParams constants_underactuated(const PartitionedNetwork& pn, const Matrix& K, const LyapunovCertificate& cert_N,
                                    const Matrix& Q_hat, const Vector& chi0, const Vector& xN0);
BoundParams constants_underactuated(const PartitionedNetwork& pn, const Matrix& K, const Vector& chi0,
                                    const Vector& xN0);

Verdict theorem7_verdict(const BoundParams& bp);

// y(t) envelope for ||chi(t)||_Phat (Eq. 10 / Eq. 17 shape).
class ChiEnvelope {
public:
    explicit ChiEnvelope(const BoundParams& bp);

    double raw(double t) const;  // unclamped closed form
    double operator()(double t) const;
    std::optional<double> zero_time() const { return zero_time_; }
    bool finite_time() const { return finite_time_; }

private:
    Lemma6 c_;
    double alpha_, alpha_N_;
    bool finite_time_ = false;
    std::optional<double> zero_time_;
};

// M(t): contribution of z_max and the chi envelope to the x_N bound (Eq. 14 / Eq. 20).
double m_function(const BoundParams& bp, double t);

class XnClosedEnvelope {
public:
    XnClosedEnvelope(const BoundParams& bp, std::optional<double> switch_time);

    double operator()(double t) const;
    double pre_switch(double t) const;
    int branch(double t) const { return switch_ && t >= *switch_ ? 1 : 0; }
    std::optional<double> switch_time() const { return switch_; }
    double jump() const { return jump_; }

private:
    BoundParams bp_;
    std::optional<double> switch_;
    double anchor_ = 0.0;
    double jump_ = 0.0;
};

// Eq. 9 evaluated on a trajectory grid: beta = z_max + ||D_{N,-} chi||_{P_N}, trapezoidal quadrature.
std::vector<double> xN_integral_bound(const std::vector<double>& times, const std::vector<double>& DN_chi_PN,
                                      const BoundParams& bp);

struct AdmissibilityCheck {
    double sup_b = 0.0;
    double t_sup = 0.0;  // +inf when the supremum is the limit
    double threshold = 0.0;
    bool passed = false;
    bool unbounded = false;
    std::optional<double> t_min;  // interior minimum of b(t)
    double b_at_min = 0.0;
};

AdmissibilityCheck admissibility(const BoundParams& bp);

struct RiccatiSolution {
    Matrix S;
    Matrix K;
    double residual = 0.0;
};

RiccatiSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);
Matrix synthesize_gain(const PartitionedNetwork& pn);
Matrix synthesize_gain(const PartitionedNetwork& pn, const Matrix& Q, const Matrix& R);

}  // namespace resilnet
