#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "resilnet/report.hpp"
#include "resilnet/scenario.hpp"

namespace {

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("resilnet");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("RESILNET_LOG")) {
        const auto lvl = spdlog::level::from_str(env);
        if (lvl == spdlog::level::off && std::string(env) != "off")
            spdlog::warn("RESILNET_LOG='{}' not recognised; expected error, info or debug", env);
        else
            spdlog::set_level(lvl);
    }
}

void print_summary(const resilnet::RunResult& r)
{
    using namespace resilnet;
    std::printf("scenario  %s  (%s)\n", r.resolved.network.name.c_str(), to_string(r.mode));
    for (const auto& v : r.verdicts)
        std::printf("verdict   %-40s %s [%s]\n", v.test.c_str(), to_string(v.conclusion), to_string(v.sufficiency));
    if (r.theorem7)
        std::printf("verdict   %-40s %s [%s]\n", r.theorem7->test.c_str(), to_string(r.theorem7->conclusion),
                    to_string(r.theorem7->sufficiency));
    if (r.bounds) {
        const auto& b = *r.bounds;
        std::printf("constants alpha=%.6g alpha_N=%.6g gamma=%.6g gamma_N=%.6g z_max=%.6g b_min=%.6g\n", b.alpha,
                    b.alpha_N, b.gamma, b.gamma_N, b.z_max, b.b_min);
        std::printf("          gamma*gamma_N=%.6g alpha*alpha_N=%.6g regime=%s%s\n", b.coupling_product(),
                    b.decay_product(), to_string(b.regime), b.diverging ? " DIVERGING" : "");
    }
    if (r.chi_zero_time)
        std::printf("envelope  chi reaches 0 at t=%.6g%s\n", *r.chi_zero_time,
                    r.switch_time ? " (x_N envelope switches branch)" : "");
    if (r.admissibility)
        std::printf("admiss.   sup b=%.6g threshold=%.6g %s\n", r.admissibility->sup_b, r.admissibility->threshold,
                    r.admissibility->passed ? "passed" : "failed");
    if (r.trajectory) {
        const auto& tr = *r.trajectory;
        std::printf("simulate  %zu steps, final |chi|=%.3g |x_N|=%.3g", tr.size(), tr.chi_Pnorm.back(),
                    tr.xN_Pnorm.back());
        if (tr.has_K)
            std::printf(", max |K chi|_inf=%.4g", tr.max_K_chi_inf());
        std::printf("\n");
    }
    if (r.violations)
        for (const auto& c : r.violations->channels)
            std::printf("check     %-24s %s violations=%d worst_slack=%.3g\n", c.name.c_str(),
                        c.certified ? "certified  " : "uncertified", c.violations, c.worst_slack);
    std::printf("exit      %d\n", r.exit_code);
}

}  // namespace

int main(int argc, char** argv)
{
    setup_logging();
    CLI::App app{"Resilience analysis of linear networks under loss of control authority"};
    app.set_version_flag("--version", std::string(resilnet::tool_version()));
    app.require_subcommand(1);

    std::string scenario_path, outdir = "resilnet_out";
    double dt = 0.0, t_end = -1.0, scale = 1.0;
    std::string policy_u, policy_w, policy_hat;
    std::uint64_t seed = 0x5eed;
    bool strict = false, quiet = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", outdir, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Seed for randomized constructions");
        sub->add_flag("--strict", strict, "Exit 3 when a verdict is NotDetermined");
        sub->add_flag("-q,--quiet", quiet, "Do not print the summary");
    };
    auto add_sim = [&](CLI::App* sub) {
        sub->add_option("--dt", dt, "Integrator step")->check(CLI::PositiveNumber);
        sub->add_option("--t-end", t_end, "Horizon")->check(CLI::NonNegativeNumber);
        sub->add_option("--policy-u", policy_u, "Policy for the remaining actuators of the malfunctioning subsystem");
        sub->add_option("--policy-w", policy_w, "Adversary policy");
        sub->add_option("--policy-hat", policy_hat, "Policy for the healthy inputs");
        sub->add_option("--inject-envelope-scale", scale, "Multiply every envelope before checking (fault injection)");
    };

    auto* analyze = app.add_subcommand("analyze", "Resilience and stabilizability verdicts");
    auto* bounds = app.add_subcommand("bounds", "Constants and bound envelopes");
    auto* simulate = app.add_subcommand("simulate", "Simulate the malfunctioning network");
    auto* report = app.add_subcommand("report", "All stages and the envelope check");
    for (auto* s : {analyze, bounds, simulate, report})
        add_common(s);
    for (auto* s : {bounds, simulate, report})
        add_sim(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : resilnet::kExitError;
    }

    resilnet::RunOptions opts;
    opts.seed = seed;
    opts.strict = strict;
    opts.envelope_scale = scale;
    if (dt > 0.0)
        opts.dt = dt;
    if (t_end >= 0.0)
        opts.t_end = t_end;
    if (!policy_u.empty())
        opts.policy_u = policy_u;
    if (!policy_w.empty())
        opts.policy_w = policy_w;
    if (!policy_hat.empty())
        opts.policy_hat = policy_hat;
    if (analyze->parsed()) {
        opts.bounds = opts.simulate = opts.check = false;
    } else if (bounds->parsed()) {
        opts.verdicts = opts.simulate = opts.check = false;
    } else if (simulate->parsed()) {
        opts.verdicts = opts.check = false;
        opts.bounds = false;
    }

    try {
        const resilnet::Scenario sc = resilnet::parse_scenario(scenario_path);
        const resilnet::RunResult r = resilnet::run(sc, opts);
        resilnet::write_outputs(r, opts, outdir);
        if (!quiet)
            print_summary(r);
        return r.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return resilnet::kExitError;
    }
}
