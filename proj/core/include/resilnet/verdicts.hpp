#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "resilnet/input_sets.hpp"
#include "resilnet/network_model.hpp"
#include "resilnet/types.hpp"

namespace resilnet {

enum class Conclusion { Stabilizable, Controllable, ResilientlyStabilizable, Resilient, NotDetermined, Negative };
enum class Sufficiency { NecessaryAndSufficient, SufficientOnly };

const char* to_string(Conclusion c);
const char* to_string(Sufficiency s);

struct Evidence {
    std::string condition;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct Witness {
    enum class Kind { None, Eigenvalue, Eigenvector, RankDefect, EmptySet };
    Kind kind = Kind::None;
    std::complex<double> eigenvalue{0.0, 0.0};
    Vector vector;
    int rank = 0;
    int required = 0;
};

const char* to_string(Witness::Kind k);

struct Verdict {
    std::string test;
    Conclusion conclusion = Conclusion::NotDetermined;
    Sufficiency sufficiency = Sufficiency::NecessaryAndSufficient;
    std::vector<Evidence> basis;
    Witness witness;

    bool positive() const;
};

constexpr double kEigTol = 1e-9;

// Real eigenvalues of A^T with an orthonormal basis of each eigenspace.
struct RealEigenspace {
    double lambda = 0.0;
    Matrix basis;
};
std::vector<RealEigenspace> real_left_eigenspaces(const Matrix& A);

Verdict sontag(const Matrix& A, const Matrix& B, const Hypercube& U);
Verdict sontag(const Matrix& A, const Matrix& B);
Verdict brammer(const Matrix& A, const Matrix& B);
Verdict resilient_full_dim(const Matrix& A, const Matrix& B, const Matrix& C, std::uint64_t seed = 0x5eed);
Verdict resilient_NS(const Matrix& A, const Matrix& B, const Matrix& C, std::uint64_t seed = 0x5eed);
Verdict resilient_NS(const Matrix& A, const ZSet& Z);

Verdict network_stabilizable(const PartitionedNetwork& pn);
Verdict sufficient_network_conditions(const PartitionedNetwork& pn);
Verdict network_resiliently_stabilizable(const PartitionedNetwork& pn, std::uint64_t seed = 0x5eed);

}  // namespace resilnet
