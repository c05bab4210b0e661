#pragma once

#include <optional>
#include <string>

#include "resilnet/network_model.hpp"
#include "resilnet/types.hpp"

namespace resilnet {

enum class ControlMode { Auto, Full, Under };

const char* to_string(ControlMode m);

struct LyapunovWeights {
    std::optional<Matrix> Q_N;
    std::optional<Matrix> Q_hat;
};

struct ControlSpec {
    ControlMode mode = ControlMode::Auto;
    std::optional<Matrix> riccati_Q, riccati_R;
    std::optional<Matrix> K;  // overrides the Riccati synthesis
};

struct SimulationSpec {
    std::optional<Vector> x0;  // user state order; zero if absent
    double t_end = 6.0;
    double dt = 1e-3;
    std::string policy_hat = "auto", policy_u = "auto", policy_w = "auto";
    std::optional<Vector> u_hat, u_N, w_N;  // constant-policy values
};

struct AnalysisFlags {
    bool verdicts = true, bounds = true, simulate = true, check = true;
};

struct Scenario {
    NetworkSpec network;
    LossSpec loss;
    LyapunovWeights lyapunov;
    ControlSpec control;
    SimulationSpec simulation;
    AnalysisFlags analysis;
    std::string source;  // path or "<string>"
};

bool same_subsystem(const Subsystem& a, const Subsystem& b);
bool same_network(const NetworkSpec& a, const NetworkSpec& b);
bool same_loss(const LossSpec& a, const LossSpec& b);
bool same_scenario(const Scenario& a, const Scenario& b);

// Throws ParseError with line/key context or ValidationError naming the invariant.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_string(const std::string& text, const std::string& source = "<string>");

// YAML text that parses back to an equal Scenario.
std::string emit_scenario(const Scenario& s);

}  // namespace resilnet
