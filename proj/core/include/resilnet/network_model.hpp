#pragma once

#include <map>
#include <string>
#include <vector>

#include "resilnet/types.hpp"

namespace resilnet {

struct Subsystem {
    int id = 0;
    Matrix A;
    Matrix B;  // actuation before any loss, n_i x m_i (m_i may be 0)
    std::map<int, Matrix> couplings;  // neighbor id -> D_{i,k}, n_i x n_k

    int states() const { return static_cast<int>(A.rows()); }
    int inputs() const { return static_cast<int>(B.cols()); }
};

struct NetworkSpec {
    std::string name;
    std::string description;
    std::vector<Subsystem> subsystems;

    // Throws ValidationError / DimensionError naming the broken invariant.
    void validate(bool require_coupling = true) const;

    int index_of(int id) const;  // -1 if absent
    int total_states() const;
    int total_inputs() const;
};

struct ActuatorLoss {
    int subsystem = 0;
    std::vector<int> actuators;  // 0-based column indices of Bbar_i
};

struct LossSpec {
    std::vector<ActuatorLoss> losses;

    void validate(const NetworkSpec& spec) const;
    int lost_count() const;
};

struct Assembly {
    Matrix A;
    Matrix D;
    Matrix Bbar;
    std::vector<int> state_offset;
    std::vector<int> input_offset;
};

Assembly assemble(const NetworkSpec& spec);

// Maps quantities of a stacked network back to the user's ordering.
struct StackingRecord {
    std::vector<int> subsystem_order;  // stacked position -> original subsystem index (merged ones last)
    std::vector<int> merged;           // original indices merged into the trailing subsystem, in user order
    std::vector<int> state_perm;       // stacked state index -> original state index
    std::vector<int> input_perm;       // stacked input column -> original input column

    bool identity() const;
    Vector to_user_states(const Vector& stacked) const;
    Vector to_stacked_states(const Vector& user) const;
    Vector to_stacked_inputs(const Vector& user) const;
};

struct StackedNetwork {
    NetworkSpec spec;
    LossSpec loss;
    StackingRecord record;
};

// Merges every lossy subsystem into one trailing subsystem.
StackedNetwork stack_losses(const NetworkSpec& spec, const LossSpec& loss);

struct PartitionedNetwork {
    Matrix A, D, Bbar;  // pre-loss assembly, stacked order
    Matrix B, C;        // Eq. form: Xdot = (A + D) X + B u + C w
    Matrix Ahat, Dhat, Bhat;
    Matrix D_minus_N;  // healthy rows, malfunctioning columns
    Matrix D_N_minus;  // malfunctioning rows, healthy columns
    Matrix A_N, B_N, C_N;

    int n_total = 0;
    int n_N = 0;
    int m_total = 0;  // total actuators before the loss
    int p_N = 0;

    std::vector<int> state_owner;   // stacked state index -> subsystem id
    std::vector<int> block_states;  // per stacked subsystem
    std::vector<int> block_inputs;  // per stacked subsystem, before the loss
    std::vector<int> block_ids;
    std::vector<int> lost_columns;  // indices into Bbar_N that became C_N
    StackingRecord record;

    int n_hat() const { return n_total - n_N; }
    int m_hat() const { return static_cast<int>(Bhat.cols()); }
    int healthy_count() const { return static_cast<int>(block_states.size()) - 1; }

    Matrix healthy_block_B(int k) const;  // Bbar_k of the k-th healthy subsystem
    Matrix reassemble_D() const;
};

// Requires an already-stacked loss: exactly one lossy subsystem, placed last.
PartitionedNetwork apply_loss(const NetworkSpec& spec, const LossSpec& loss);

// stack_losses followed by apply_loss, keeping the permutation record.
PartitionedNetwork partition(const NetworkSpec& spec, const LossSpec& loss);

}  // namespace resilnet
