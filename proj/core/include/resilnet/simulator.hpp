#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "resilnet/network_model.hpp"
#include "resilnet/types.hpp"

namespace resilnet {

enum class PolicyKind { Zero, NormDirection, LinearFeedback, ConstantVertex, BestResponse, WorstVertex };

const char* to_string(PolicyKind k);
PolicyKind policy_from_string(const std::string& name);

struct Policy {
    PolicyKind kind = PolicyKind::Zero;
    Vector value;  // ConstantVertex
};

// Everything the policies and channels need besides the network itself.
struct SimSetup {
    Policy hat;  // healthy inputs u_hat
    Policy uN;   // remaining actuators of the malfunctioning subsystem
    Policy w;    // undesirable input
    Matrix P_hat, P_N;
    double b_min = 0.0;  // NormDirection magnitude
    Matrix K;            // LinearFeedback gain, m_hat x n_hat
};

struct ModeChange {
    double t = 0.0;
    std::string what;
};

struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Vector> states;  // stacked coordinates
    std::vector<Vector> u;       // [u_hat; u_N] at step start
    std::vector<Vector> w;
    std::vector<double> chi_Pnorm, xN_Pnorm, K_chi_inf, DN_chi_PN;
    bool has_K = false;
    int feedback_violations = 0;  // steps with ||K chi||_inf > 1
    std::vector<ModeChange> mode_changes;

    std::size_t size() const { return times.size(); }
    double max_K_chi_inf() const;
    std::optional<double> first_time_chi_below(double level) const;
};

Trajectory simulate(const PartitionedNetwork& pn, const SimSetup& setup, const Vector& X0, double t_end, double dt);

// Plain RK4 on Xdot = A X + B u(t); used to compare stacked and original networks.
std::vector<Vector> simulate_open_loop(const Matrix& A, const Matrix& B, const Vector& X0,
                                       const std::function<Vector(double)>& u, double t_end, double dt);

// Argmax vertex of the z_max problem (first maximizer in lexicographic order).
Vector worst_vertex(const Matrix& B, const Matrix& C, const Matrix& P);

struct Violation {
    double t = 0.0;
    double simulated = 0.0;
    double bound = 0.0;
    double slack = 0.0;  // bound - simulated
};

struct ChannelCheck {
    std::string name;
    bool certified = true;  // false for envelopes whose hypotheses fail
    int violations = 0;
    double worst_slack = 0.0;
    double worst_time = 0.0;
    std::optional<double> first_violation;
    std::vector<Violation> entries;  // violating samples, capped
};

struct ViolationReport {
    double atol = 1e-6;
    std::vector<ChannelCheck> channels;

    int certified_violations() const;
    const ChannelCheck* find(const std::string& name) const;
};

ChannelCheck check_channel(const std::string& name, const std::vector<double>& times,
                           const std::vector<double>& simulated, const std::vector<double>& bound, double atol = 1e-6,
                           bool certified = true);

}  // namespace resilnet
