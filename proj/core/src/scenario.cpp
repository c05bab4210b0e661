#include "resilnet/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "resilnet/error.hpp"

namespace resilnet {

const char* to_string(ControlMode m)
{
    switch (m) {
    case ControlMode::Auto: return "auto";
    case ControlMode::Full: return "full";
    case ControlMode::Under: return "under";
    }
    return "?";
}

namespace {

int line_of(const YAML::Node& n)
{
    const int l = n.Mark().line;
    return l >= 0 ? l + 1 : -1;
}

[[noreturn]] void fail(const YAML::Node& n, const std::string& key, const std::string& msg)
{
    std::ostringstream os;
    os << msg;
    const int l = line_of(n);
    if (l > 0)
        os << " (line " << l << ", key '" << key << "')";
    else
        os << " (key '" << key << "')";
    throw ParseError(os.str(), l, key);
}

void require_map(const YAML::Node& n, const std::string& key)
{
    if (!n.IsMap())
        fail(n, key, "expected a mapping");
}

void check_keys(const YAML::Node& n, const std::string& where, const std::set<std::string>& allowed)
{
    for (const auto& kv : n) {
        const std::string k = kv.first.as<std::string>();
        if (!allowed.count(k))
            fail(kv.first, where.empty() ? k : where + "." + k, "unknown key");
    }
}

double as_double(const YAML::Node& n, const std::string& key)
{
    if (!n.IsScalar())
        fail(n, key, "expected a number");
    try {
        const double v = n.as<double>();
        if (!std::isfinite(v))
            fail(n, key, "non-finite number");
        return v;
    } catch (const YAML::BadConversion&) {
        fail(n, key, "expected a number, got '" + n.Scalar() + "'");
    }
}

int as_int(const YAML::Node& n, const std::string& key)
{
    if (!n.IsScalar())
        fail(n, key, "expected an integer");
    try {
        return n.as<int>();
    } catch (const YAML::BadConversion&) {
        fail(n, key, "expected an integer, got '" + n.Scalar() + "'");
    }
}

bool as_bool(const YAML::Node& n, const std::string& key)
{
    if (!n.IsScalar())
        fail(n, key, "expected true/false");
    try {
        return n.as<bool>();
    } catch (const YAML::BadConversion&) {
        fail(n, key, "expected true/false, got '" + n.Scalar() + "'");
    }
}

std::string as_string(const YAML::Node& n, const std::string& key)
{
    if (!n.IsScalar())
        fail(n, key, "expected a string");
    return n.Scalar();
}

Matrix as_matrix(const YAML::Node& n, const std::string& key)
{
    if (!n.IsSequence() || n.size() == 0)
        fail(n, key, "expected a non-empty list of rows");
    const std::size_t rows = n.size();
    std::size_t cols = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        if (!n[i].IsSequence())
            fail(n[i], key, "matrix rows must be lists");
        if (i == 0)
            cols = n[i].size();
        else if (n[i].size() != cols)
            fail(n[i], key, "ragged matrix: row " + std::to_string(i) + " has " + std::to_string(n[i].size()) +
                                " entries, expected " + std::to_string(cols));
    }
    Matrix M(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            M(i, j) = as_double(n[i][j], key);
    return M;
}

Vector as_vector(const YAML::Node& n, const std::string& key)
{
    if (!n.IsSequence())
        fail(n, key, "expected a list of numbers");
    Vector v(n.size());
    for (std::size_t i = 0; i < n.size(); ++i)
        v(i) = as_double(n[i], key);
    return v;
}


Subsystem parse_subsystem(const YAML::Node& n, std::size_t idx)
{
    const std::string where = "subsystems[" + std::to_string(idx) + "]";
    require_map(n, where);
    check_keys(n, where, {"id", "A", "B", "couplings"});
    Subsystem s;
    if (!n["id"])
        fail(n, where + ".id", "missing required key");
    s.id = as_int(n["id"], where + ".id");
    if (!n["A"])
        fail(n, where + ".A", "missing required key");
    s.A = as_matrix(n["A"], where + ".A");
    if (n["B"]) {
        s.B = as_matrix(n["B"], where + ".B");
        // [[]] is the 1 x 0 placeholder for a subsystem without actuators.
        if (s.B.cols() == 0 && s.B.rows() != s.A.rows())
            s.B.resize(s.A.rows(), 0);
    } else {
        s.B.resize(s.A.rows(), 0);
    }
    if (n["couplings"]) {
        const YAML::Node cs = n["couplings"];
        if (!cs.IsSequence())
            fail(cs, where + ".couplings", "expected a list");
        for (std::size_t k = 0; k < cs.size(); ++k) {
            const std::string cw = where + ".couplings[" + std::to_string(k) + "]";
            require_map(cs[k], cw);
            check_keys(cs[k], cw, {"neighbor", "D"});
            if (!cs[k]["neighbor"] || !cs[k]["D"])
                fail(cs[k], cw, "coupling needs 'neighbor' and 'D'");
            const int nb = as_int(cs[k]["neighbor"], cw + ".neighbor");
            if (s.couplings.count(nb))
                fail(cs[k], cw + ".neighbor", "duplicate coupling to neighbor " + std::to_string(nb));
            s.couplings[nb] = as_matrix(cs[k]["D"], cw + ".D");
        }
    }
    return s;
}

Scenario from_yaml(const YAML::Node& root, const std::string& source)
{
    if (!root || root.IsNull())
        throw ParseError(source + ": empty scenario", 1, "");
    require_map(root, "<root>");
    check_keys(root, "", {"name", "description", "subsystems", "loss", "lyapunov", "control", "simulation",
                          "analysis"});
    Scenario sc;
    sc.source = source;
    if (root["name"])
        sc.network.name = as_string(root["name"], "name");
    if (root["description"])
        sc.network.description = as_string(root["description"], "description");

    const YAML::Node subs = root["subsystems"];
    if (!subs)
        fail(root, "subsystems", "missing required key");
    if (!subs.IsSequence())
        fail(subs, "subsystems", "expected a list");
    for (std::size_t i = 0; i < subs.size(); ++i)
        sc.network.subsystems.push_back(parse_subsystem(subs[i], i));

    const YAML::Node loss = root["loss"];
    if (!loss)
        fail(root, "loss", "missing required key");
    if (!loss.IsSequence())
        fail(loss, "loss", "expected a list");
    for (std::size_t i = 0; i < loss.size(); ++i) {
        const std::string where = "loss[" + std::to_string(i) + "]";
        require_map(loss[i], where);
        check_keys(loss[i], where, {"subsystem", "actuators"});
        if (!loss[i]["subsystem"] || !loss[i]["actuators"])
            fail(loss[i], where, "loss entry needs 'subsystem' and 'actuators'");
        ActuatorLoss al;
        al.subsystem = as_int(loss[i]["subsystem"], where + ".subsystem");
        const YAML::Node acts = loss[i]["actuators"];
        if (!acts.IsSequence())
            fail(acts, where + ".actuators", "expected a list of column indices");
        for (std::size_t k = 0; k < acts.size(); ++k)
            al.actuators.push_back(as_int(acts[k], where + ".actuators"));
        sc.loss.losses.push_back(al);
    }

    if (const YAML::Node ly = root["lyapunov"]) {
        require_map(ly, "lyapunov");
        check_keys(ly, "lyapunov", {"Q_N", "Q_hat"});
        if (ly["Q_N"])
            sc.lyapunov.Q_N = as_matrix(ly["Q_N"], "lyapunov.Q_N");
        if (ly["Q_hat"])
            sc.lyapunov.Q_hat = as_matrix(ly["Q_hat"], "lyapunov.Q_hat");
    }

    if (const YAML::Node c = root["control"]) {
        require_map(c, "control");
        check_keys(c, "control", {"mode", "riccati_Q", "riccati_R", "K"});
        if (c["mode"]) {
            const std::string m = as_string(c["mode"], "control.mode");
            if (m == "auto")
                sc.control.mode = ControlMode::Auto;
            else if (m == "full")
                sc.control.mode = ControlMode::Full;
            else if (m == "under")
                sc.control.mode = ControlMode::Under;
            else
                fail(c["mode"], "control.mode", "expected auto, full or under");
        }
        if (c["riccati_Q"])
            sc.control.riccati_Q = as_matrix(c["riccati_Q"], "control.riccati_Q");
        if (c["riccati_R"])
            sc.control.riccati_R = as_matrix(c["riccati_R"], "control.riccati_R");
        if (c["K"])
            sc.control.K = as_matrix(c["K"], "control.K");
    }

    if (const YAML::Node s = root["simulation"]) {
        require_map(s, "simulation");
        check_keys(s, "simulation",
                   {"x0", "t_end", "dt", "policy_hat", "policy_u", "policy_w", "u_hat", "u_N", "w_N"});
        auto& sim = sc.simulation;
        if (s["x0"])
            sim.x0 = as_vector(s["x0"], "simulation.x0");
        if (s["t_end"])
            sim.t_end = as_double(s["t_end"], "simulation.t_end");
        if (s["dt"])
            sim.dt = as_double(s["dt"], "simulation.dt");
        if (s["policy_hat"])
            sim.policy_hat = as_string(s["policy_hat"], "simulation.policy_hat");
        if (s["policy_u"])
            sim.policy_u = as_string(s["policy_u"], "simulation.policy_u");
        if (s["policy_w"])
            sim.policy_w = as_string(s["policy_w"], "simulation.policy_w");
        if (s["u_hat"])
            sim.u_hat = as_vector(s["u_hat"], "simulation.u_hat");
        if (s["u_N"])
            sim.u_N = as_vector(s["u_N"], "simulation.u_N");
        if (s["w_N"])
            sim.w_N = as_vector(s["w_N"], "simulation.w_N");
        if (!(sim.dt > 0.0))
            fail(s["dt"], "simulation.dt", "dt must be positive");
        if (!(sim.t_end >= 0.0))
            fail(s["t_end"], "simulation.t_end", "t_end must be nonnegative");
    }

    if (const YAML::Node a = root["analysis"]) {
        require_map(a, "analysis");
        check_keys(a, "analysis", {"verdicts", "bounds", "simulate", "check"});
        if (a["verdicts"])
            sc.analysis.verdicts = as_bool(a["verdicts"], "analysis.verdicts");
        if (a["bounds"])
            sc.analysis.bounds = as_bool(a["bounds"], "analysis.bounds");
        if (a["simulate"])
            sc.analysis.simulate = as_bool(a["simulate"], "analysis.simulate");
        if (a["check"])
            sc.analysis.check = as_bool(a["check"], "analysis.check");
    }

    sc.network.validate();
    sc.loss.validate(sc.network);
    if (sc.simulation.x0 && sc.simulation.x0->size() != sc.network.total_states())
        throw DimensionError("simulation.x0 has " + std::to_string(sc.simulation.x0->size()) +
                             " entries, expected " + std::to_string(sc.network.total_states()));
    return sc;
}

void emit_matrix(YAML::Emitter& out, const Matrix& M)
{
    out << YAML::Flow << YAML::BeginSeq;
    for (Index i = 0; i < M.rows(); ++i) {
        out << YAML::Flow << YAML::BeginSeq;
        for (Index j = 0; j < M.cols(); ++j)
            out << M(i, j);
        out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
}

void emit_vector(YAML::Emitter& out, const Vector& v)
{
    out << YAML::Flow << YAML::BeginSeq;
    for (Index i = 0; i < v.size(); ++i)
        out << v(i);
    out << YAML::EndSeq;
}

bool mat_eq(const Matrix& a, const Matrix& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

bool opt_eq(const std::optional<Matrix>& a, const std::optional<Matrix>& b)
{
    return a.has_value() == b.has_value() && (!a || mat_eq(*a, *b));
}

bool opt_eq(const std::optional<Vector>& a, const std::optional<Vector>& b)
{
    return a.has_value() == b.has_value() && (!a || mat_eq(*a, *b));
}

}  // namespace

Scenario parse_scenario_string(const std::string& text, const std::string& source)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(source + ": " + e.msg + " (line " + std::to_string(e.mark.line + 1) + ")",
                         e.mark.line + 1, "");
    }
    return from_yaml(root, source);
}

Scenario parse_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_string(ss.str(), path);
}

std::string emit_scenario(const Scenario& s)
{
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    if (!s.network.name.empty())
        out << YAML::Key << "name" << YAML::Value << s.network.name;
    if (!s.network.description.empty())
        out << YAML::Key << "description" << YAML::Value << s.network.description;
    out << YAML::Key << "subsystems" << YAML::Value << YAML::BeginSeq;
    for (const auto& sub : s.network.subsystems) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << sub.id;
        out << YAML::Key << "A" << YAML::Value;
        emit_matrix(out, sub.A);
        out << YAML::Key << "B" << YAML::Value;
        emit_matrix(out, sub.B);
        if (!sub.couplings.empty()) {
            out << YAML::Key << "couplings" << YAML::Value << YAML::BeginSeq;
            for (const auto& [nb, D] : sub.couplings) {
                out << YAML::BeginMap << YAML::Key << "neighbor" << YAML::Value << nb;
                out << YAML::Key << "D" << YAML::Value;
                emit_matrix(out, D);
                out << YAML::EndMap;
            }
            out << YAML::EndSeq;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "loss" << YAML::Value << YAML::BeginSeq;
    for (const auto& l : s.loss.losses) {
        out << YAML::BeginMap << YAML::Key << "subsystem" << YAML::Value << l.subsystem;
        out << YAML::Key << "actuators" << YAML::Value << YAML::Flow << l.actuators << YAML::EndMap;
    }
    out << YAML::EndSeq;

    if (s.lyapunov.Q_N || s.lyapunov.Q_hat) {
        out << YAML::Key << "lyapunov" << YAML::Value << YAML::BeginMap;
        if (s.lyapunov.Q_N) {
            out << YAML::Key << "Q_N" << YAML::Value;
            emit_matrix(out, *s.lyapunov.Q_N);
        }
        if (s.lyapunov.Q_hat) {
            out << YAML::Key << "Q_hat" << YAML::Value;
            emit_matrix(out, *s.lyapunov.Q_hat);
        }
        out << YAML::EndMap;
    }

    out << YAML::Key << "control" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "mode" << YAML::Value << to_string(s.control.mode);
    const std::pair<const char*, const std::optional<Matrix>*> cm[] = {
        {"riccati_Q", &s.control.riccati_Q}, {"riccati_R", &s.control.riccati_R}, {"K", &s.control.K}};
    for (const auto& [key, m] : cm)
        if (*m) {
            out << YAML::Key << key << YAML::Value;
            emit_matrix(out, **m);
        }
    out << YAML::EndMap;

    const auto& sim = s.simulation;
    out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
    if (sim.x0) {
        out << YAML::Key << "x0" << YAML::Value;
        emit_vector(out, *sim.x0);
    }
    out << YAML::Key << "t_end" << YAML::Value << sim.t_end;
    out << YAML::Key << "dt" << YAML::Value << sim.dt;
    out << YAML::Key << "policy_hat" << YAML::Value << sim.policy_hat;
    out << YAML::Key << "policy_u" << YAML::Value << sim.policy_u;
    out << YAML::Key << "policy_w" << YAML::Value << sim.policy_w;
    const std::pair<const char*, const std::optional<Vector>*> sv[] = {
        {"u_hat", &sim.u_hat}, {"u_N", &sim.u_N}, {"w_N", &sim.w_N}};
    for (const auto& [key, v] : sv)
        if (*v) {
            out << YAML::Key << key << YAML::Value;
            emit_vector(out, **v);
        }
    out << YAML::EndMap;

    out << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "verdicts" << YAML::Value << s.analysis.verdicts;
    out << YAML::Key << "bounds" << YAML::Value << s.analysis.bounds;
    out << YAML::Key << "simulate" << YAML::Value << s.analysis.simulate;
    out << YAML::Key << "check" << YAML::Value << s.analysis.check;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

bool same_subsystem(const Subsystem& a, const Subsystem& b)
{
    if (a.id != b.id || !mat_eq(a.A, b.A) || !mat_eq(a.B, b.B) || a.couplings.size() != b.couplings.size())
        return false;
    for (const auto& [k, D] : a.couplings) {
        auto it = b.couplings.find(k);
        if (it == b.couplings.end() || !mat_eq(D, it->second))
            return false;
    }
    return true;
}

bool same_network(const NetworkSpec& a, const NetworkSpec& b)
{
    if (a.name != b.name || a.description != b.description || a.subsystems.size() != b.subsystems.size())
        return false;
    for (std::size_t i = 0; i < a.subsystems.size(); ++i)
        if (!same_subsystem(a.subsystems[i], b.subsystems[i]))
            return false;
    return true;
}

bool same_loss(const LossSpec& a, const LossSpec& b)
{
    if (a.losses.size() != b.losses.size())
        return false;
    for (std::size_t i = 0; i < a.losses.size(); ++i)
        if (a.losses[i].subsystem != b.losses[i].subsystem || a.losses[i].actuators != b.losses[i].actuators)
            return false;
    return true;
}

bool same_scenario(const Scenario& a, const Scenario& b)
{
    const auto &sa = a.simulation, &sb = b.simulation;
    return same_network(a.network, b.network) && same_loss(a.loss, b.loss) &&
           opt_eq(a.lyapunov.Q_N, b.lyapunov.Q_N) && opt_eq(a.lyapunov.Q_hat, b.lyapunov.Q_hat) &&
           a.control.mode == b.control.mode && opt_eq(a.control.riccati_Q, b.control.riccati_Q) &&
           opt_eq(a.control.riccati_R, b.control.riccati_R) && opt_eq(a.control.K, b.control.K) &&
           opt_eq(sa.x0, sb.x0) && sa.t_end == sb.t_end && sa.dt == sb.dt && sa.policy_hat == sb.policy_hat &&
           sa.policy_u == sb.policy_u && sa.policy_w == sb.policy_w && opt_eq(sa.u_hat, sb.u_hat) &&
           opt_eq(sa.u_N, sb.u_N) && opt_eq(sa.w_N, sb.w_N) && a.analysis.verdicts == b.analysis.verdicts &&
           a.analysis.bounds == b.analysis.bounds && a.analysis.simulate == b.analysis.simulate &&
           a.analysis.check == b.analysis.check;
}

}  // namespace resilnet
