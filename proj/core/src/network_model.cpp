#include "resilnet/network_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "resilnet/error.hpp"

namespace resilnet {

namespace {

std::string shape(const Matrix& M)
{
    std::ostringstream os;
    os << M.rows() << "x" << M.cols();
    return os.str();
}

bool all_finite(const Matrix& M)
{
    return M.size() == 0 || M.allFinite();
}

}  // namespace

void NetworkSpec::validate(bool require_coupling) const
{
    if (subsystems.size() < 2)
        throw ValidationError("network must contain at least 2 subsystems");

    std::set<int> ids;
    for (const auto& s : subsystems) {
        if (!ids.insert(s.id).second)
            throw ValidationError("duplicate subsystem id " + std::to_string(s.id));
    }

    bool any_coupling = false;
    for (const auto& s : subsystems) {
        const std::string tag = "subsystem " + std::to_string(s.id);
        if (s.A.rows() == 0 || s.A.rows() != s.A.cols())
            throw DimensionError(tag + ": A must be square and non-empty, got " + shape(s.A));
        if (s.B.rows() != s.A.rows())
            throw DimensionError(tag + ": B has " + std::to_string(s.B.rows()) + " rows, expected " +
                                 std::to_string(s.A.rows()));
        if (!all_finite(s.A) || !all_finite(s.B))
            throw ValidationError(tag + ": non-finite entry in A or B");
        for (const auto& [k, Dik] : s.couplings) {
            const std::string block = "coupling block D_{" + std::to_string(s.id) + "," + std::to_string(k) + "}";
            if (k == s.id)
                throw ValidationError(block + ": self-coupling is not allowed");
            int idx = index_of(k);
            if (idx < 0)
                throw ValidationError(block + ": neighbor id does not exist");
            const int nk = subsystems[idx].states();
            if (Dik.rows() != s.states() || Dik.cols() != nk)
                throw DimensionError(block + " is " + shape(Dik) + ", expected " + std::to_string(s.states()) +
                                     "x" + std::to_string(nk));
            if (!all_finite(Dik))
                throw ValidationError(block + ": non-finite entry");
            if (Dik.size() > 0 && Dik.cwiseAbs().maxCoeff() > 0.0)
                any_coupling = true;
        }
    }
    if (require_coupling && !any_coupling)
        throw ValidationError("coupling matrix D is zero; the network must have at least one nonzero coupling block");
}

int NetworkSpec::index_of(int id) const
{
    for (std::size_t i = 0; i < subsystems.size(); ++i)
        if (subsystems[i].id == id)
            return static_cast<int>(i);
    return -1;
}

int NetworkSpec::total_states() const
{
    int n = 0;
    for (const auto& s : subsystems)
        n += s.states();
    return n;
}

int NetworkSpec::total_inputs() const
{
    int m = 0;
    for (const auto& s : subsystems)
        m += s.inputs();
    return m;
}

void LossSpec::validate(const NetworkSpec& spec) const
{
    if (losses.empty())
        throw ValidationError("loss specification is empty");
    std::set<int> seen;
    int total = 0;
    for (const auto& l : losses) {
        const std::string tag = "loss on subsystem " + std::to_string(l.subsystem);
        int idx = spec.index_of(l.subsystem);
        if (idx < 0)
            throw ValidationError(tag + ": subsystem id does not exist");
        if (!seen.insert(l.subsystem).second)
            throw ValidationError(tag + ": subsystem listed twice");
        const int m = spec.subsystems[idx].inputs();
        std::set<int> cols;
        for (int c : l.actuators) {
            if (c < 0 || c >= m)
                throw ValidationError(tag + ": actuator index " + std::to_string(c) + " outside [0," +
                                      std::to_string(m) + ")");
            if (!cols.insert(c).second)
                throw ValidationError(tag + ": actuator index " + std::to_string(c) + " repeated");
        }
        total += static_cast<int>(l.actuators.size());
    }
    if (total < 1)
        throw ValidationError("loss specification must remove at least one actuator (p_N >= 1)");
}

int LossSpec::lost_count() const
{
    int p = 0;
    for (const auto& l : losses)
        p += static_cast<int>(l.actuators.size());
    return p;
}

Assembly assemble(const NetworkSpec& spec)
{
    spec.validate();
    Assembly out;
    const int N = static_cast<int>(spec.subsystems.size());
    out.state_offset.resize(N);
    out.input_offset.resize(N);
    int n = 0, m = 0;
    for (int i = 0; i < N; ++i) {
        out.state_offset[i] = n;
        out.input_offset[i] = m;
        n += spec.subsystems[i].states();
        m += spec.subsystems[i].inputs();
    }
    out.A = Matrix::Zero(n, n);
    out.D = Matrix::Zero(n, n);
    out.Bbar = Matrix::Zero(n, m);
    for (int i = 0; i < N; ++i) {
        const auto& s = spec.subsystems[i];
        const int r = out.state_offset[i];
        out.A.block(r, r, s.states(), s.states()) = s.A;
        out.Bbar.block(r, out.input_offset[i], s.states(), s.inputs()) = s.B;
        for (const auto& [k, Dik] : s.couplings) {
            int j = spec.index_of(k);
            out.D.block(r, out.state_offset[j], Dik.rows(), Dik.cols()) = Dik;
        }
    }
    return out;
}

bool StackingRecord::identity() const
{
    for (std::size_t i = 0; i < state_perm.size(); ++i)
        if (state_perm[i] != static_cast<int>(i))
            return false;
    for (std::size_t i = 0; i < input_perm.size(); ++i)
        if (input_perm[i] != static_cast<int>(i))
            return false;
    return true;
}

Vector StackingRecord::to_user_states(const Vector& stacked) const
{
    Vector user(stacked.size());
    for (std::size_t i = 0; i < state_perm.size(); ++i)
        user(state_perm[i]) = stacked(static_cast<Index>(i));
    return user;
}

Vector StackingRecord::to_stacked_states(const Vector& user) const
{
    Vector stacked(user.size());
    for (std::size_t i = 0; i < state_perm.size(); ++i)
        stacked(static_cast<Index>(i)) = user(state_perm[i]);
    return stacked;
}

Vector StackingRecord::to_stacked_inputs(const Vector& user) const
{
    Vector stacked(user.size());
    for (std::size_t i = 0; i < input_perm.size(); ++i)
        stacked(static_cast<Index>(i)) = user(input_perm[i]);
    return stacked;
}

StackedNetwork stack_losses(const NetworkSpec& spec, const LossSpec& loss)
{
    spec.validate();
    loss.validate(spec);

    const int N = static_cast<int>(spec.subsystems.size());
    std::vector<int> state_off(N), input_off(N);
    for (int i = 0, n = 0, m = 0; i < N; ++i) {
        state_off[i] = n;
        input_off[i] = m;
        n += spec.subsystems[i].states();
        m += spec.subsystems[i].inputs();
    }

    std::vector<bool> lossy(N, false);
    for (const auto& l : loss.losses)
        lossy[spec.index_of(l.subsystem)] = true;

    StackedNetwork out;
    out.spec.name = spec.name;
    out.spec.description = spec.description;

    for (int i = 0; i < N; ++i)
        if (!lossy[i])
            out.record.subsystem_order.push_back(i);
    for (int i = 0; i < N; ++i)
        if (lossy[i])
            out.record.merged.push_back(i);
    if (out.record.subsystem_order.empty())
        throw ValidationError("every subsystem is lossy; at least one healthy subsystem is required");
    out.record.subsystem_order.insert(out.record.subsystem_order.end(), out.record.merged.begin(),
                                      out.record.merged.end());

    for (int pos : out.record.subsystem_order) {
        const auto& s = spec.subsystems[pos];
        for (int a = 0; a < s.states(); ++a)
            out.record.state_perm.push_back(state_off[pos] + a);
        for (int a = 0; a < s.inputs(); ++a)
            out.record.input_perm.push_back(input_off[pos] + a);
    }

    const auto& merged = out.record.merged;
    std::set<int> merged_ids;
    for (int i : merged)
        merged_ids.insert(spec.subsystems[i].id);
    const int merged_id = spec.subsystems[merged.front()].id;

    // Offsets of each lossy subsystem inside the merged block.
    std::map<int, int> m_state_off, m_input_off;
    int nc = 0, mc = 0;
    for (int i : merged) {
        m_state_off[spec.subsystems[i].id] = nc;
        m_input_off[spec.subsystems[i].id] = mc;
        nc += spec.subsystems[i].states();
        mc += spec.subsystems[i].inputs();
    }

    for (int pos : out.record.subsystem_order) {
        if (lossy[pos])
            continue;
        Subsystem s = spec.subsystems[pos];
        std::map<int, Matrix> couplings;
        Matrix to_merged = Matrix::Zero(s.states(), nc);
        bool touches_merged = false;
        for (const auto& [k, Dik] : s.couplings) {
            if (merged_ids.count(k)) {
                to_merged.middleCols(m_state_off[k], Dik.cols()) = Dik;
                touches_merged = true;
            } else {
                couplings[k] = Dik;
            }
        }
        if (touches_merged)
            couplings[merged_id] = to_merged;
        s.couplings = std::move(couplings);
        out.spec.subsystems.push_back(std::move(s));
    }

    Subsystem c;
    c.id = merged_id;
    c.A = Matrix::Zero(nc, nc);
    c.B = Matrix::Zero(nc, mc);
    std::map<int, Matrix> from_merged;
    for (int i : merged) {
        const auto& s = spec.subsystems[i];
        const int r = m_state_off[s.id];
        c.A.block(r, r, s.states(), s.states()) = s.A;
        c.B.block(r, m_input_off[s.id], s.states(), s.inputs()) = s.B;
        for (const auto& [k, Dik] : s.couplings) {
            if (merged_ids.count(k)) {
                // Couplings between merged subsystems become internal dynamics.
                c.A.block(r, m_state_off[k], Dik.rows(), Dik.cols()) = Dik;
                continue;
            }
            auto it = from_merged.find(k);
            if (it == from_merged.end())
                it = from_merged.emplace(k, Matrix::Zero(nc, Dik.cols())).first;
            it->second.middleRows(r, Dik.rows()) = Dik;
        }
    }
    c.couplings = std::move(from_merged);
    out.spec.subsystems.push_back(std::move(c));

    ActuatorLoss combined;
    combined.subsystem = merged_id;
    for (int i : merged) {
        const int id = spec.subsystems[i].id;
        for (const auto& l : loss.losses)
            if (l.subsystem == id)
                for (int a : l.actuators)
                    combined.actuators.push_back(m_input_off[id] + a);
    }
    std::sort(combined.actuators.begin(), combined.actuators.end());
    out.loss.losses.push_back(std::move(combined));

    out.spec.validate(false);
    return out;
}

Matrix PartitionedNetwork::healthy_block_B(int k) const
{
    int r = 0, c = 0;
    for (int i = 0; i < k; ++i) {
        r += block_states[i];
        c += block_inputs[i];
    }
    return Bbar.block(r, c, block_states[k], block_inputs[k]);
}

Matrix PartitionedNetwork::reassemble_D() const
{
    const int nh = n_hat();
    Matrix out = Matrix::Zero(n_total, n_total);
    out.topLeftCorner(nh, nh) = Dhat;
    out.topRightCorner(nh, n_N) = D_minus_N;
    out.bottomLeftCorner(n_N, nh) = D_N_minus;
    return out;
}

PartitionedNetwork apply_loss(const NetworkSpec& spec, const LossSpec& loss)
{
    spec.validate(false);
    loss.validate(spec);
    if (loss.losses.size() != 1)
        throw ValidationError("apply_loss expects a stacked loss with exactly one malfunctioning subsystem");
    const int lossy = spec.index_of(loss.losses.front().subsystem);
    const int N = static_cast<int>(spec.subsystems.size());
    if (lossy != N - 1)
        throw ValidationError("apply_loss expects the malfunctioning subsystem to be last");

    PartitionedNetwork pn;
    for (const auto& s : spec.subsystems) {
        pn.block_states.push_back(s.states());
        pn.block_inputs.push_back(s.inputs());
        pn.block_ids.push_back(s.id);
        for (int a = 0; a < s.states(); ++a)
            pn.state_owner.push_back(s.id);
    }

    // Assembly without the nonzero-coupling rule (stacked networks may be internally coupled only).
    int n = 0, m = 0;
    std::vector<int> so(N), io(N);
    for (int i = 0; i < N; ++i) {
        so[i] = n;
        io[i] = m;
        n += spec.subsystems[i].states();
        m += spec.subsystems[i].inputs();
    }
    pn.A = Matrix::Zero(n, n);
    pn.D = Matrix::Zero(n, n);
    pn.Bbar = Matrix::Zero(n, m);
    for (int i = 0; i < N; ++i) {
        const auto& s = spec.subsystems[i];
        pn.A.block(so[i], so[i], s.states(), s.states()) = s.A;
        pn.Bbar.block(so[i], io[i], s.states(), s.inputs()) = s.B;
        for (const auto& [k, Dik] : s.couplings)
            pn.D.block(so[i], so[spec.index_of(k)], Dik.rows(), Dik.cols()) = Dik;
    }

    const auto& sN = spec.subsystems.back();
    pn.n_total = n;
    pn.n_N = sN.states();
    pn.m_total = m;
    pn.lost_columns = loss.losses.front().actuators;
    std::sort(pn.lost_columns.begin(), pn.lost_columns.end());
    pn.p_N = static_cast<int>(pn.lost_columns.size());

    std::vector<int> kept;
    for (int a = 0; a < sN.inputs(); ++a)
        if (!std::binary_search(pn.lost_columns.begin(), pn.lost_columns.end(), a))
            kept.push_back(a);
    pn.B_N = Matrix::Zero(pn.n_N, static_cast<Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j)
        pn.B_N.col(static_cast<Index>(j)) = sN.B.col(kept[j]);
    pn.C_N = Matrix::Zero(pn.n_N, pn.p_N);
    for (int j = 0; j < pn.p_N; ++j)
        pn.C_N.col(j) = sN.B.col(pn.lost_columns[j]);
    pn.A_N = sN.A;

    const int nh = n - pn.n_N;
    const int mh = io[N - 1];
    pn.Ahat = pn.A.topLeftCorner(nh, nh);
    pn.Dhat = pn.D.topLeftCorner(nh, nh);
    pn.Bhat = pn.Bbar.topLeftCorner(nh, mh);
    pn.D_minus_N = pn.D.topRightCorner(nh, pn.n_N);
    pn.D_N_minus = pn.D.bottomLeftCorner(pn.n_N, nh);

    pn.B = Matrix::Zero(n, mh + pn.B_N.cols());
    pn.B.topLeftCorner(nh, mh) = pn.Bhat;
    pn.B.bottomRightCorner(pn.n_N, pn.B_N.cols()) = pn.B_N;
    pn.C = Matrix::Zero(n, pn.p_N);
    pn.C.bottomRows(pn.n_N) = pn.C_N;

    pn.record.subsystem_order.resize(N);
    std::iota(pn.record.subsystem_order.begin(), pn.record.subsystem_order.end(), 0);
    pn.record.merged = {N - 1};
    pn.record.state_perm.resize(n);
    std::iota(pn.record.state_perm.begin(), pn.record.state_perm.end(), 0);
    pn.record.input_perm.resize(m);
    std::iota(pn.record.input_perm.begin(), pn.record.input_perm.end(), 0);
    return pn;
}

PartitionedNetwork partition(const NetworkSpec& spec, const LossSpec& loss)
{
    StackedNetwork st = stack_losses(spec, loss);
    PartitionedNetwork pn = apply_loss(st.spec, st.loss);
    pn.record = st.record;
    return pn;
}

}  // namespace resilnet
