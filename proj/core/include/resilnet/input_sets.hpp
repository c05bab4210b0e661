#pragma once

#include <cstdint>
#include <vector>

#include "resilnet/types.hpp"

namespace resilnet {

constexpr int kMaxVertexDim = 20;

struct Hypercube {
    int dim = 0;

    std::uint64_t vertex_count() const;  // throws TooManyVertices if dim > 20
    // Lexicographic order with +1 before -1, first coordinate most significant.
    Vector vertex(std::uint64_t k) const;
};

struct ZonotopeImage {
    Matrix G;

    double support(const Vector& d) const;  // sum_j |d^T G_j|
};

// True iff z = B u for some u in [-1,1]^m. Optionally returns the witness u.
bool member_BU(const Vector& z, const Matrix& B, Vector* witness = nullptr);

bool contains_negCW_in_BU(const Matrix& B, const Matrix& C);

// min over u in the cube of ||C w + B u||_P; optionally returns the minimizer.
double best_response_residual(const Matrix& B, const Matrix& C, const Matrix& P, const Vector& w,
                              Vector* u = nullptr);

struct ZMaxResult {
    double value = 0.0;
    Vector w;  // maximizing vertex
    Vector u;  // best response to w
    std::uint64_t vertex = 0;
};

ZMaxResult z_max(const Matrix& B, const Matrix& C, const Matrix& P);

struct ZPrimeResult {
    double value = 0.0;
    Vector u;
};

ZPrimeResult z_prime(const Matrix& B, const Matrix& C, const Matrix& P);

struct BMinResult {
    double value = 0.0;
    Vector u;
    int face = 0;  // coordinate fixed at the boundary
    double sign = 1.0;
};

BMinResult b_min(const Matrix& B, const Matrix& P);

struct ZBlock {
    Index offset = 0;  // first state row of the block
    Matrix B;
    Matrix C;  // zero columns for healthy blocks
};

// Z = { z in B U : z - C w in B U for every w in W }, possibly a Cartesian product of blocks.
struct ZSet {
    std::vector<ZBlock> blocks;
    Matrix span_basis;  // independent columns, each a certified point of Z
    int dim = 0;
    bool contains_origin = false;
    bool full_dimensional = false;
    bool dim_exact = false;  // otherwise dim is a certified lower bound

    Index ambient() const;
    bool empty() const { return !contains_origin; }
    bool contains(const Vector& z) const;
    // sup { t >= 0 : t d in Z } by bisection; returns the certified lower end.
    double t_max(const Vector& d, int iterations = 16) const;
};

ZSet build_Z(const Matrix& B, const Matrix& C, std::uint64_t seed = 0x5eed);
ZSet product_Z(const std::vector<Matrix>& healthy_B, const ZSet& zN);

struct SupportResult {
    double value = 0.0;                // returned support value
    double zonotope_difference = 0.0;  // h_{BU}(d) - h_{CW}(d), an upper bound
    double certified = 0.0;            // value of a certified point of Z
    bool exact = false;                // value computed by the exact linear program
    bool agreed = false;               // zonotope difference matched within 1e-7
};

SupportResult support_Z(const Vector& d, const ZSet& zset);

}  // namespace resilnet
