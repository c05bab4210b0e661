#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "resilnet/bounds.hpp"
#include "resilnet/error.hpp"
#include "resilnet/network_model.hpp"
#include "resilnet/scenario.hpp"
#include "resilnet/simulator.hpp"
#include "resilnet/verdicts.hpp"

namespace resilnet {

// Error raised inside one stage of run(); what() carries the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct RunOptions {
    bool verdicts = true, bounds = true, simulate = true, check = true;  // ANDed with the scenario flags
    std::optional<double> dt, t_end;
    std::optional<std::string> policy_hat, policy_u, policy_w;
    std::uint64_t seed = 0x5eed;
    bool strict = false;
    double envelope_scale = 1.0;  // fault injection: multiplies every envelope before checking
};

enum ExitCode { kExitOk = 0, kExitError = 1, kExitViolation = 2, kExitNotDetermined = 3 };

struct EnvelopeSeries {
    std::vector<double> chi, xN_int, xN_closed;
};

struct RunResult {
    Scenario resolved;  // scenario with every default filled in
    ActuationMode mode = ActuationMode::FullyActuated;
    PartitionedNetwork pn;
    std::vector<Verdict> verdicts;
    std::optional<BoundParams> bounds;
    std::optional<Verdict> theorem7;
    std::optional<double> chi_zero_time;
    std::optional<double> switch_time;
    double switch_jump = 0.0;
    std::optional<AdmissibilityCheck> admissibility;
    std::optional<Trajectory> trajectory;
    double max_input_residual = 0.0;  // max_t ||B_N u_N + C_N w_N||_{P_N}
    EnvelopeSeries envelopes;
    std::optional<ViolationReport> violations;
    int exit_code = kExitOk;
};

// Runs verdicts -> constants -> envelopes -> simulate -> check.
RunResult run(const Scenario& scenario, const RunOptions& opts = {});

// Writes report.json, trajectory.csv and constants.csv into outdir.
void write_outputs(const RunResult& r, const RunOptions& opts, const std::string& outdir);

std::string report_json(const RunResult& r, const RunOptions& opts);
std::string trajectory_csv(const RunResult& r);
std::string constants_csv(const RunResult& r);

const char* tool_version();

}  // namespace resilnet
