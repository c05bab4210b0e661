#include "resilnet/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "resilnet/input_sets.hpp"
#include "resilnet/matrix_margins.hpp"

#ifndef RESILNET_VERSION
#define RESILNET_VERSION "0.0.0"
#endif

namespace resilnet {

using nlohmann::json;

const char* tool_version()
{
    return RESILNET_VERSION;
}

namespace {

constexpr double kAtol = 1e-6;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class F>
auto stage(const char* name, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

Policy make_policy(const std::string& name, const std::optional<Vector>& value, const char* what)
{
    Policy p;
    p.kind = policy_from_string(name);
    if (p.kind == PolicyKind::ConstantVertex) {
        if (!value)
            throw ValidationError(std::string(what) + ": policy 'constant' needs a value in the scenario");
        p.value = *value;
    }
    return p;
}

void resolve(Scenario& sc, const RunOptions& opts, const PartitionedNetwork& pn, ActuationMode mode)
{
    auto& sim = sc.simulation;
    if (opts.dt)
        sim.dt = *opts.dt;
    if (opts.t_end)
        sim.t_end = *opts.t_end;
    if (!(sim.dt > 0.0) || !(sim.t_end >= 0.0))
        throw ValidationError("dt must be positive and t_end nonnegative");
    if (opts.policy_hat)
        sim.policy_hat = *opts.policy_hat;
    if (opts.policy_u)
        sim.policy_u = *opts.policy_u;
    if (opts.policy_w)
        sim.policy_w = *opts.policy_w;
    if (!sim.x0)
        sim.x0 = Vector::Zero(pn.n_total);
    if (sim.policy_hat == "auto")
        sim.policy_hat = mode == ActuationMode::FullyActuated ? "norm_direction" : "linear_feedback";
    if (sim.policy_u == "auto")
        sim.policy_u = sim.u_N ? "constant" : "best_response";
    if (sim.policy_w == "auto")
        sim.policy_w = sim.w_N ? "constant" : "worst_vertex";
    if (!sc.lyapunov.Q_N)
        sc.lyapunov.Q_N = Matrix::Identity(pn.n_N, pn.n_N);
    if (!sc.lyapunov.Q_hat)
        sc.lyapunov.Q_hat = Matrix::Identity(pn.n_hat(), pn.n_hat());
    sc.control.mode = mode == ActuationMode::FullyActuated ? ControlMode::Full : ControlMode::Under;
    if (mode == ActuationMode::Underactuated && !sc.control.K) {
        if (!sc.control.riccati_Q)
            sc.control.riccati_Q = Matrix::Identity(pn.n_hat(), pn.n_hat());
        if (!sc.control.riccati_R)
            sc.control.riccati_R = Matrix::Identity(pn.m_hat(), pn.m_hat());
    }
}

json matrix_json(const Matrix& M)
{
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json r = json::array();
        for (Index j = 0; j < M.cols(); ++j)
            r.push_back(M(i, j));
        rows.push_back(r);
    }
    return rows;
}

json vector_json(const Vector& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

json num(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json verdict_json(const Verdict& v)
{
    json j;
    j["test"] = v.test;
    j["conclusion"] = to_string(v.conclusion);
    j["sufficiency"] = to_string(v.sufficiency);
    j["positive"] = v.positive();
    json basis = json::array();
    for (const auto& e : v.basis)
        basis.push_back({{"condition", e.condition}, {"passed", e.passed}, {"value", num(e.value)},
                         {"threshold", num(e.threshold)}, {"detail", e.detail}});
    j["evidence"] = basis;
    if (v.witness.kind != Witness::Kind::None) {
        json w;
        w["kind"] = to_string(v.witness.kind);
        w["eigenvalue"] = {num(v.witness.eigenvalue.real()), num(v.witness.eigenvalue.imag())};
        w["vector"] = vector_json(v.witness.vector);
        w["rank"] = v.witness.rank;
        w["required"] = v.witness.required;
        j["witness"] = w;
    }
    return j;
}

json lemma6_json(const Lemma6& c)
{
    return {{"regime", to_string(c.regime)}, {"r_plus", num(c.r_plus)}, {"r_minus", num(c.r_minus)},
            {"p", num(c.p)}, {"h_plus", num(c.h_plus)}, {"h_minus", num(c.h_minus)}};
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RunResult run(const Scenario& scenario, const RunOptions& opts)
{
    RunResult r;
    r.pn = stage("partition", [&] { return partition(scenario.network, scenario.loss); });
    const PartitionedNetwork& pn = r.pn;

    r.mode = stage("partition", [&] {
        switch (scenario.control.mode) {
        case ControlMode::Full: return ActuationMode::FullyActuated;
        case ControlMode::Under: return ActuationMode::Underactuated;
        default: break;
        }
        const bool full = pn.m_hat() > 0 && numerical_rank(pn.Bhat) == pn.n_hat();
        return full ? ActuationMode::FullyActuated : ActuationMode::Underactuated;
    });
    r.resolved = scenario;
    stage("resolve", [&] { resolve(r.resolved, opts, pn, r.mode); });
    const Scenario& sc = r.resolved;
    const auto& sim = sc.simulation;

    const bool do_verdicts = opts.verdicts && sc.analysis.verdicts;
    const bool do_simulate = opts.simulate && sc.analysis.simulate;
    const bool do_check = opts.check && sc.analysis.check && do_simulate;
    const bool do_bounds = (opts.bounds && sc.analysis.bounds) || do_check;

    if (do_verdicts) {
        spdlog::info("stage verdicts");
        stage("verdicts", [&] {
            r.verdicts.push_back(network_stabilizable(pn));
            r.verdicts.push_back(sufficient_network_conditions(pn));
            Verdict vN = resilient_NS(pn.A_N, pn.B_N, pn.C_N, opts.seed);
            vN.test = "malfunctioning_subsystem_" + vN.test;
            r.verdicts.push_back(vN);
            r.verdicts.push_back(network_resiliently_stabilizable(pn, opts.seed));
        });
    }

    const Vector X0 = pn.record.to_stacked_states(*sim.x0);
    const Vector chi0 = X0.head(pn.n_hat()), xN0 = X0.tail(pn.n_N);

    if (do_bounds || do_simulate) {
        spdlog::info("stage constants ({})", to_string(r.mode));
        r.bounds = stage("constants", [&] {
            const LyapunovCertificate cert_N = solve_lyapunov(pn.A_N, *sc.lyapunov.Q_N);
            if (r.mode == ActuationMode::FullyActuated) {
                const LyapunovCertificate cert_hat = solve_lyapunov(pn.Ahat + pn.Dhat, *sc.lyapunov.Q_hat);
                return constants_fully_actuated(pn, cert_N, cert_hat, chi0, xN0);
            }
            const Matrix K = sc.control.K ? *sc.control.K
                                          : synthesize_gain(pn, *sc.control.riccati_Q, *sc.control.riccati_R);
            return constants_underactuated(pn, K, cert_N, *sc.lyapunov.Q_hat, chi0, xN0);
        });
        for (const auto& n : r.bounds->notices)
            spdlog::warn("{}", n);
        r.theorem7 = theorem7_verdict(*r.bounds);
        if (r.mode == ActuationMode::Underactuated)
            r.admissibility = admissibility(*r.bounds);
    }
    const BoundParams* bp = r.bounds ? &*r.bounds : nullptr;

    const long steps = std::lround(sim.t_end / sim.dt);
    std::vector<double> grid(steps + 1);
    for (long k = 0; k <= steps; ++k)
        grid[k] = k * sim.dt;

    std::optional<ChiEnvelope> chi_env;
    std::optional<XnClosedEnvelope> xn_env;
    if (do_bounds) {
        spdlog::info("stage envelopes");
        stage("envelopes", [&] {
            chi_env.emplace(*bp);
            r.chi_zero_time = chi_env->zero_time();
            if (r.mode == ActuationMode::FullyActuated && chi_env->finite_time() && r.chi_zero_time)
                r.switch_time = r.chi_zero_time;
            xn_env.emplace(*bp, r.switch_time);
            r.switch_jump = xn_env->jump();
            r.envelopes.chi.resize(grid.size());
            r.envelopes.xN_closed.resize(grid.size());
            for (std::size_t k = 0; k < grid.size(); ++k) {
                r.envelopes.chi[k] = opts.envelope_scale * (*chi_env)(grid[k]);
                r.envelopes.xN_closed[k] = opts.envelope_scale * (*xn_env)(grid[k]);
            }
        });
    }

    if (do_simulate) {
        spdlog::info("stage simulate (dt = {}, t_end = {})", sim.dt, sim.t_end);
        r.trajectory = stage("simulate", [&] {
            SimSetup setup;
            setup.hat = make_policy(sim.policy_hat, sim.u_hat, "policy_hat");
            setup.uN = make_policy(sim.policy_u, sim.u_N, "policy_u");
            setup.w = make_policy(sim.policy_w, sim.w_N, "policy_w");
            setup.P_hat = bp->P_hat;
            setup.P_N = bp->P_N;
            setup.b_min = bp->b_min;
            setup.K = bp->K;
            return simulate(pn, setup, X0, sim.t_end, sim.dt);
        });
        const Trajectory& tr = *r.trajectory;
        for (std::size_t k = 0; k < tr.size(); ++k) {
            Vector e = Vector::Zero(pn.n_N);
            if (pn.B_N.cols() > 0)
                e += pn.B_N * tr.u[k].tail(pn.B_N.cols());
            if (pn.p_N > 0)
                e += pn.C_N * tr.w[k];
            r.max_input_residual = std::max(r.max_input_residual, p_norm(e, bp->P_N));
        }
        if (do_bounds) {
            r.envelopes.xN_int = xN_integral_bound(tr.times, tr.DN_chi_PN, *bp);
            for (double& v : r.envelopes.xN_int)
                v *= opts.envelope_scale;
        }
    }

    if (do_check) {
        spdlog::info("stage check");
        stage("check", [&] {
            const Trajectory& tr = *r.trajectory;
            const bool input_ok = r.max_input_residual <= bp->z_max + 1e-9 * std::max(1.0, bp->z_max);
            bool chi_cert;
            if (r.mode == ActuationMode::FullyActuated)
                chi_cert = input_ok && r.theorem7->positive() && sim.policy_hat == "norm_direction";
            else
                chi_cert = input_ok && sim.policy_hat == "linear_feedback";
            ViolationReport rep;
            rep.atol = kAtol;
            rep.channels.push_back(check_channel("chi", tr.times, tr.chi_Pnorm, r.envelopes.chi, kAtol, chi_cert));
            rep.channels.push_back(
                check_channel("xN_integral", tr.times, tr.xN_Pnorm, r.envelopes.xN_int, kAtol, input_ok));
            rep.channels.push_back(
                check_channel("xN_closed", tr.times, tr.xN_Pnorm, r.envelopes.xN_closed, kAtol, chi_cert));
            rep.channels.push_back(check_channel("xN_integral_vs_closed", tr.times, r.envelopes.xN_int,
                                                 r.envelopes.xN_closed, kAtol, chi_cert));
            r.violations = rep;
        });
    }

    r.exit_code = kExitOk;
    if (r.violations && r.violations->certified_violations() > 0) {
        r.exit_code = kExitViolation;
    } else if (opts.strict) {
        bool nd = false;
        for (const auto& v : r.verdicts)
            nd = nd || v.conclusion == Conclusion::NotDetermined;
        if (r.theorem7 && r.mode == ActuationMode::FullyActuated)
            nd = nd || r.theorem7->conclusion == Conclusion::NotDetermined;
        if (nd)
            r.exit_code = kExitNotDetermined;
    }
    return r;
}

std::string report_json(const RunResult& r, const RunOptions& opts)
{
    const auto& sim = r.resolved.simulation;
    json j;
    j["provenance"] = {{"tool", "resilnet"},
                       {"version", tool_version()},
                       {"scenario", r.resolved.source},
                       {"dt", sim.dt},
                       {"t_end", sim.t_end},
                       {"seed", opts.seed},
                       {"integrator", "rk4-fixed-step"},
                       {"tolerances",
                        {{"envelope_atol", kAtol},
                         {"hurwitz", 1e-10},
                         {"eigen", kEigTol},
                         {"regime_rel", 1e-12},
                         {"near_degenerate_rel", 1e-6}}},
                       {"envelope_scale", opts.envelope_scale}};
    {
        json s;
        s["name"] = r.resolved.network.name;
        s["mode"] = to_string(r.mode);
        s["x0"] = vector_json(*sim.x0);
        s["policy_hat"] = sim.policy_hat;
        s["policy_u"] = sim.policy_u;
        s["policy_w"] = sim.policy_w;
        s["Q_N"] = matrix_json(*r.resolved.lyapunov.Q_N);
        s["Q_hat"] = matrix_json(*r.resolved.lyapunov.Q_hat);
        if (r.resolved.control.riccati_Q)
            s["riccati_Q"] = matrix_json(*r.resolved.control.riccati_Q);
        if (r.resolved.control.riccati_R)
            s["riccati_R"] = matrix_json(*r.resolved.control.riccati_R);
        j["scenario_resolved"] = s;
    }
    const auto& pn = r.pn;
    j["partition"] = {{"n_total", pn.n_total},       {"n_N", pn.n_N},
                      {"n_hat", pn.n_hat()},         {"m_hat", pn.m_hat()},
                      {"m_N_remaining", pn.B_N.cols()}, {"p_N", pn.p_N},
                      {"subsystem_order", pn.block_ids}, {"merged", pn.record.merged},
                      {"lost_columns", pn.lost_columns}};

    json verdicts = json::array();
    for (const auto& v : r.verdicts)
        verdicts.push_back(verdict_json(v));
    if (r.theorem7)
        verdicts.push_back(verdict_json(*r.theorem7));
    j["verdicts"] = verdicts;

    if (r.bounds) {
        const BoundParams& b = *r.bounds;
        json c = {{"mode", to_string(b.mode)},
                  {"regime", to_string(b.regime)},
                  {"alpha", num(b.alpha)},
                  {"alpha_N", num(b.alpha_N)},
                  {"gamma", num(b.gamma)},
                  {"gamma_N", num(b.gamma_N)},
                  {"gamma_gamma_N", num(b.coupling_product())},
                  {"alpha_alpha_N", num(b.decay_product())},
                  {"z_max", num(b.z_max)},
                  {"z_prime", num(b.z_prime)},
                  {"b_min", num(b.b_min)},
                  {"r_plus", num(b.r_plus)},
                  {"r_minus", num(b.r_minus)},
                  {"p", num(b.p)},
                  {"h_plus", num(b.h_plus)},
                  {"h_minus", num(b.h_minus)},
                  {"chi0_norm", num(b.chi0_norm)},
                  {"xN0_norm", num(b.xN0_norm)},
                  {"root_residual", num(b.root_residual())},
                  {"initial_condition_residual", num(b.initial_condition_residual())},
                  {"P_N", matrix_json(b.P_N)},
                  {"P_hat", matrix_json(b.P_hat)},
                  {"worst_w", vector_json(b.worst_w)}};
        if (b.K.size() > 0)
            c["K"] = matrix_json(b.K);
        if (b.other_branch)
            c["other_branch"] = lemma6_json(*b.other_branch);
        j["constants"] = c;
        j["flags"] = {{"diverging", b.diverging}, {"near_degenerate", b.near_degenerate}, {"vacuous", b.vacuous}};
        j["notices"] = b.notices;
    }
    if (r.admissibility) {
        const auto& a = *r.admissibility;
        json aj = {{"sup_b", num(a.sup_b)},     {"t_sup", num(a.t_sup)},       {"threshold", num(a.threshold)},
                   {"passed", a.passed},        {"unbounded", a.unbounded}};
        if (a.t_min) {
            aj["t_min"] = *a.t_min;
            aj["b_at_min"] = num(a.b_at_min);
        }
        if (r.trajectory) {
            aj["empirical_max_K_chi_inf"] = num(r.trajectory->max_K_chi_inf());
            aj["empirical_passed"] = r.trajectory->max_K_chi_inf() <= 1.0;
        }
        j["admissibility"] = aj;
    }
    if (!r.envelopes.chi.empty()) {
        json e;
        e["chi_zero_time"] = r.chi_zero_time ? json(*r.chi_zero_time) : json(nullptr);
        e["switch_time"] = r.switch_time ? json(*r.switch_time) : json(nullptr);
        e["branch_switches"] = r.switch_time ? 1 : 0;
        e["switch_jump_vs_unanchored_form"] = num(r.switch_jump);
        j["envelopes"] = e;
    }
    if (r.trajectory) {
        const auto& tr = *r.trajectory;
        json s = {{"steps", tr.size()},
                  {"final_chi_Pnorm", num(tr.chi_Pnorm.back())},
                  {"final_xN_Pnorm", num(tr.xN_Pnorm.back())},
                  {"max_input_residual", num(r.max_input_residual)}};
        auto hit = tr.first_time_chi_below(1e-3);
        s["first_time_chi_below_1e-3"] = hit ? json(*hit) : json(nullptr);
        if (tr.has_K) {
            s["max_K_chi_inf"] = num(tr.max_K_chi_inf());
            s["feedback_violations"] = tr.feedback_violations;
        }
        json mc = json::array();
        for (const auto& m : tr.mode_changes)
            mc.push_back({{"t", m.t}, {"what", m.what}});
        s["mode_changes"] = mc;
        j["simulation"] = s;
    }
    if (r.violations) {
        json v;
        v["atol"] = r.violations->atol;
        v["certified_violations"] = r.violations->certified_violations();
        json ch = json::array();
        for (const auto& c : r.violations->channels) {
            json cj = {{"name", c.name},
                       {"certified", c.certified},
                       {"violations", c.violations},
                       {"worst_slack", num(c.worst_slack)},
                       {"worst_time", c.worst_time},
                       {"first_violation", c.first_violation ? json(*c.first_violation) : json(nullptr)}};
            json entries = json::array();
            for (std::size_t k = 0; k < std::min<std::size_t>(c.entries.size(), 20); ++k)
                entries.push_back({{"t", c.entries[k].t},
                                   {"simulated", num(c.entries[k].simulated)},
                                   {"bound", num(c.entries[k].bound)},
                                   {"slack", num(c.entries[k].slack)}});
            cj["entries"] = entries;
            ch.push_back(cj);
        }
        v["channels"] = ch;
        j["violations"] = v;
    }
    j["exit_code"] = r.exit_code;
    return j.dump(2) + "\n";
}

std::string trajectory_csv(const RunResult& r)
{
    std::ostringstream os;
    if (!r.trajectory)
        return {};
    const auto& tr = *r.trajectory;
    const Index n = r.pn.n_total;
    const Index mu = tr.u.empty() ? 0 : tr.u[0].size();
    const Index mw = tr.w.empty() ? 0 : tr.w[0].size();
    os << "t";
    for (Index i = 0; i < n; ++i)
        os << ",x_" << i + 1;
    for (Index i = 0; i < mu; ++i)
        os << ",u_" << i + 1;
    for (Index i = 0; i < mw; ++i)
        os << ",w_" << i + 1;
    os << ",chi_Pnorm,xN_Pnorm,env_chi,env_xN_int,env_xN_closed,K_chi_inf\n";
    auto col = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : kNaN; };
    for (std::size_t k = 0; k < tr.size(); ++k) {
        os << fmt(tr.times[k]);
        const Vector xu = r.pn.record.to_user_states(tr.states[k]);
        for (Index i = 0; i < n; ++i)
            os << ',' << fmt(xu(i));
        for (Index i = 0; i < mu; ++i)
            os << ',' << fmt(tr.u[k](i));
        for (Index i = 0; i < mw; ++i)
            os << ',' << fmt(tr.w[k](i));
        os << ',' << fmt(tr.chi_Pnorm[k]) << ',' << fmt(tr.xN_Pnorm[k]) << ',' << fmt(col(r.envelopes.chi, k))
           << ',' << fmt(col(r.envelopes.xN_int, k)) << ',' << fmt(col(r.envelopes.xN_closed, k)) << ','
           << fmt(col(tr.K_chi_inf, k)) << '\n';
    }
    return os.str();
}

std::string constants_csv(const RunResult& r)
{
    std::ostringstream os;
    os << "name,value\n";
    if (!r.bounds)
        return os.str();
    const BoundParams& b = *r.bounds;
    const std::pair<const char*, double> rows[] = {
        {"alpha", b.alpha},     {"alpha_N", b.alpha_N}, {"gamma", b.gamma},
        {"gamma_N", b.gamma_N}, {"gamma_gamma_N", b.coupling_product()}, {"alpha_alpha_N", b.decay_product()},
        {"z_max", b.z_max},     {"z_prime", b.z_prime}, {"b_min", b.b_min},
        {"r_plus", b.r_plus},   {"r_minus", b.r_minus}, {"p", b.p},
        {"h_plus", b.h_plus},   {"h_minus", b.h_minus}, {"chi0_norm", b.chi0_norm},
        {"xN0_norm", b.xN0_norm}, {"diverging", b.diverging ? 1.0 : 0.0},
        {"chi_zero_time", r.chi_zero_time ? *r.chi_zero_time : kNaN},
        {"switch_time", r.switch_time ? *r.switch_time : kNaN}};
    for (const auto& [k, v] : rows)
        os << k << ',' << fmt(v) << '\n';
    if (r.admissibility) {
        os << "sup_b," << fmt(r.admissibility->sup_b) << '\n';
        os << "admissibility_threshold," << fmt(r.admissibility->threshold) << '\n';
        os << "b_min_time," << fmt(r.admissibility->t_min ? *r.admissibility->t_min : kNaN) << '\n';
    }
    return os.str();
}

void write_outputs(const RunResult& r, const RunOptions& opts, const std::string& outdir)
{
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    auto put = [&](const char* name, const std::string& text) {
        std::ofstream f(fs::path(outdir) / name, std::ios::binary);
        if (!f)
            throw Error(std::string("cannot write ") + (fs::path(outdir) / name).string());
        f << text;
    };
    put("report.json", report_json(r, opts));
    put("constants.csv", constants_csv(r));
    if (r.trajectory)
        put("trajectory.csv", trajectory_csv(r));
}

}  // namespace resilnet
