#include "resilnet/input_sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "resilnet/box_qp.hpp"
#include "resilnet/error.hpp"
#include "resilnet/lp.hpp"
#include "resilnet/matrix_margins.hpp"

namespace resilnet {

namespace {

constexpr Index kMaxSupportLpVars = 600;

void check_vertex_dim(Index p, const char* what)
{
    if (p > kMaxVertexDim)
        throw TooManyVertices(std::string(what) + ": hypercube dimension " + std::to_string(p) +
                              " exceeds the vertex enumeration cap of " + std::to_string(kMaxVertexDim));
}

double h_image(const Matrix& G, const Vector& d)
{
    if (G.cols() == 0)
        return 0.0;
    return (d.transpose() * G).cwiseAbs().sum();
}

bool member_block(const ZBlock& b, const Vector& zb)
{
    if (!member_BU(zb, b.B))
        return false;
    if (b.C.cols() == 0)
        return true;
    Hypercube W{static_cast<int>(b.C.cols())};
    const auto nv = W.vertex_count();
    for (std::uint64_t k = 0; k < nv; ++k)
        if (!member_BU(zb - b.C * W.vertex(k), b.B))
            return false;
    return true;
}

// Exact support of one block by a linear program over z and one control per vertex.
bool block_support_lp(const ZBlock& b, const Vector& d, double& value, Vector& zstar)
{
    const Index n = b.B.rows(), m = b.B.cols();
    const Index p = b.C.cols();
    const std::uint64_t nv = p == 0 ? 0 : Hypercube{static_cast<int>(p)}.vertex_count();
    const Index nblocks = 1 + static_cast<Index>(nv);
    const Index nvar = n + nblocks * m;
    if (nvar > kMaxSupportLpVars)
        return false;
    Matrix Aeq = Matrix::Zero(nblocks * n, nvar);
    Vector beq = Vector::Zero(nblocks * n);
    Vector lo(nvar), hi(nvar);
    Vector box = m ? Vector(b.B.cwiseAbs().rowwise().sum()) : Vector::Zero(n);
    lo.head(n) = -box;
    hi.head(n) = box;
    lo.tail(nvar - n).setConstant(-1.0);
    hi.tail(nvar - n).setConstant(1.0);
    Hypercube W{static_cast<int>(p)};
    for (Index k = 0; k < nblocks; ++k) {
        Aeq.block(k * n, 0, n, n).setIdentity();
        if (m)
            Aeq.block(k * n, n + k * m, n, m) = -b.B;
        if (k > 0)
            beq.segment(k * n, n) = b.C * W.vertex(static_cast<std::uint64_t>(k - 1));
    }
    Vector c = Vector::Zero(nvar);
    c.head(n) = -d;
    LpResult r = solve_lp(c, Aeq, beq, lo, hi);
    if (r.status != LpResult::Status::Optimal)
        return false;
    zstar = r.x.head(n);
    value = d.dot(zstar);
    return true;
}

}  // namespace

std::uint64_t Hypercube::vertex_count() const
{
    check_vertex_dim(dim, "Hypercube");
    return std::uint64_t{1} << dim;
}

Vector Hypercube::vertex(std::uint64_t k) const
{
    Vector v(dim);
    for (int j = 0; j < dim; ++j)
        v(j) = ((k >> (dim - 1 - j)) & 1u) ? -1.0 : 1.0;
    return v;
}

double ZonotopeImage::support(const Vector& d) const
{
    return h_image(G, d);
}

bool member_BU(const Vector& z, const Matrix& B, Vector* witness)
{
    if (B.rows() != z.size())
        throw DimensionError("member_BU: dimension mismatch");
    const Index m = B.cols();
    const double tol = 1e-9 * (1.0 + (z.size() ? z.cwiseAbs().maxCoeff() : 0.0));
    if (m == 0) {
        if (witness)
            *witness = Vector(0);
        return z.size() == 0 || z.cwiseAbs().maxCoeff() <= tol;
    }
    // Cheap accept: minimum-norm solution already inside the cube.
    Vector u0 = B.completeOrthogonalDecomposition().solve(z);
    if (u0.cwiseAbs().maxCoeff() <= 1.0 && (B * u0 - z).cwiseAbs().maxCoeff() <= tol) {
        if (witness)
            *witness = u0;
        return true;
    }
    LpResult r = solve_lp(Vector::Zero(m), B, z, -Vector::Ones(m), Vector::Ones(m), 1e-9);
    if (r.status != LpResult::Status::Optimal)
        return false;
    if ((B * r.x - z).cwiseAbs().maxCoeff() > tol * 10.0)
        return false;
    if (witness)
        *witness = r.x;
    return true;
}

bool contains_negCW_in_BU(const Matrix& B, const Matrix& C)
{
    if (B.rows() != C.rows())
        throw DimensionError("contains_negCW_in_BU: row mismatch");
    Hypercube W{static_cast<int>(C.cols())};
    const auto nv = W.vertex_count();
    for (std::uint64_t k = 0; k < nv; ++k)
        if (!member_BU(-(C * W.vertex(k)), B))
            return false;
    return true;
}

double best_response_residual(const Matrix& B, const Matrix& C, const Matrix& P, const Vector& w, Vector* u)
{
    Vector h = C * w;
    if (B.cols() == 0) {
        if (u)
            *u = Vector(0);
        return p_norm(h, P);
    }
    BoxLsqResult r = min_pnorm_over_cube(B, h, P);
    if (u)
        *u = r.x;
    return r.residual_norm;
}

ZMaxResult z_max(const Matrix& B, const Matrix& C, const Matrix& P)
{
    require_spd(P, "z_max: P");
    if (B.rows() != P.rows() || C.rows() != P.rows())
        throw DimensionError("z_max: dimension mismatch");
    Hypercube W{static_cast<int>(C.cols())};
    const auto nv = W.vertex_count();
    ZMaxResult best;
    best.value = -1.0;
    for (std::uint64_t k = 0; k < nv; ++k) {
        Vector w = W.vertex(k), u;
        const double v = best_response_residual(B, C, P, w, &u);
        if (v > best.value + 1e-12) {
            best.value = v;
            best.w = w;
            best.u = u;
            best.vertex = k;
        }
    }
    best.value = std::max(best.value, 0.0);
    return best;
}

ZPrimeResult z_prime(const Matrix& B, const Matrix& C, const Matrix& P)
{
    require_spd(P, "z_prime: P");
    Hypercube W{static_cast<int>(C.cols())};
    const auto nv = W.vertex_count();
    std::vector<Vector> CW;
    for (std::uint64_t k = 0; k < nv; ++k)
        CW.push_back(C * W.vertex(k));
    const Index m = B.cols();
    auto objective = [&](const Vector& u, Index* arg) {
        double best = -1.0;
        for (std::size_t k = 0; k < CW.size(); ++k) {
            const double v = p_norm(CW[k] + B * u, P);
            if (v > best) {
                best = v;
                if (arg)
                    *arg = static_cast<Index>(k);
            }
        }
        return best;
    };
    ZPrimeResult out;
    out.u = Vector::Zero(m);
    out.value = objective(out.u, nullptr);
    if (m == 0)
        return out;

    // Start from the best response to each vertex, then projected subgradient descent.
    for (std::uint64_t k = 0; k < nv; ++k) {
        Vector u;
        best_response_residual(B, C, P, W.vertex(k), &u);
        const double v = objective(u, nullptr);
        if (v < out.value) {
            out.value = v;
            out.u = u;
        }
    }
    Vector u = out.u;
    const double L = std::max(spectral_norm(B) * std::sqrt(lambda_max_sym(P)), 1e-12);
    for (int it = 0; it < 20000; ++it) {
        Index arg = 0;
        const double f = objective(u, &arg);
        if (f < out.value) {
            out.value = f;
            out.u = u;
        }
        Vector r = CW[arg] + B * u;
        const double nr = p_norm(r, P);
        if (nr <= 0.0)
            break;
        Vector g = B.transpose() * (P * r) / nr;
        const double gn = g.norm();
        if (gn <= 1e-14)
            break;
        const double step = 1.0 / (L * std::sqrt(static_cast<double>(it) + 1.0));
        u = (u - step * g / gn).cwiseMax(-1.0).cwiseMin(1.0);
        if (step < 1e-7 / L)
            break;
    }
    return out;
}

BMinResult b_min(const Matrix& B, const Matrix& P)
{
    require_spd(P, "b_min: P");
    const Index n = B.rows(), m = B.cols();
    if (P.rows() != n)
        throw DimensionError("b_min: dimension mismatch");
    if (m == 0 || numerical_rank(B) < n)
        throw NotFullRowRank("b_min: B must have full row rank");
    if (m > kMaxVertexDim)
        throw TooManyVertices("b_min: face loop over " + std::to_string(2 * m) + " faces exceeds the cap");
    Eigen::LLT<Matrix> llt(P);
    Matrix Lt = llt.matrixU();
    Matrix M = Lt * B;
    BMinResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < m; ++j) {
        for (double s : {1.0, -1.0}) {
            Vector lo = -Vector::Ones(m), hi = Vector::Ones(m);
            lo(j) = hi(j) = s;
            BoxLsqResult r = box_least_squares(M, Vector::Zero(n), lo, hi);
            if (r.residual_norm < best.value - 1e-14) {
                best.value = r.residual_norm;
                best.u = r.x;
                best.face = static_cast<int>(j);
                best.sign = s;
            }
        }
    }
    return best;
}

Index ZSet::ambient() const
{
    Index n = 0;
    for (const auto& b : blocks)
        n = std::max(n, b.offset + b.B.rows());
    return n;
}

bool ZSet::contains(const Vector& z) const
{
    if (z.size() != ambient())
        throw DimensionError("ZSet::contains: dimension mismatch");
    for (const auto& b : blocks)
        if (!member_block(b, z.segment(b.offset, b.B.rows())))
            return false;
    return true;
}

double ZSet::t_max(const Vector& d, int iterations) const
{
    if (!contains_origin)
        return 0.0;
    const double dd = d.squaredNorm();
    if (dd == 0.0)
        return 0.0;
    double h = 0.0;
    for (const auto& b : blocks)
        h += h_image(b.B, d.segment(b.offset, b.B.rows()));
    double hi = h / dd;
    if (hi <= 0.0)
        return 0.0;
    if (contains(hi * d))
        return hi;
    double lo = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (contains(mid * d))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

ZSet build_Z(const Matrix& B, const Matrix& C, std::uint64_t seed)
{
    if (B.rows() != C.rows())
        throw DimensionError("build_Z: row mismatch between B and C");
    check_vertex_dim(C.cols(), "build_Z");
    const Index n = B.rows(), m = B.cols();
    ZSet z;
    z.blocks.push_back({0, B, C});
    z.contains_origin = z.contains(Vector::Zero(n));
    z.span_basis = Matrix(n, 0);
    const int rankB = numerical_rank(B);
    if (!z.contains_origin) {
        z.dim_exact = true;
        return z;
    }

    std::vector<Vector> cand;
    for (Index j = 0; j < m; ++j)
        cand.push_back(B.col(j));
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j) {
            cand.push_back(B.col(i) + B.col(j));
            cand.push_back(B.col(i) - B.col(j));
        }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Index k = 0; k < 2 * n; ++k) {
        Vector d(n);
        for (Index i = 0; i < n; ++i)
            d(i) = nd(rng);
        cand.push_back(d);
    }

    Matrix basis(n, 0);
    for (const auto& d : cand) {
        if (z.dim >= rankB)
            break;
        if (d.norm() == 0.0)
            continue;
        const double t = z.t_max(d);
        if (t <= 1e-9)
            continue;
        Matrix trial(n, basis.cols() + 1);
        trial << basis, t * d;
        if (numerical_rank(trial, 1e-9) > basis.cols()) {
            basis = std::move(trial);
            ++z.dim;
        }
    }
    z.span_basis = basis;
    z.full_dimensional = z.dim == n;
    z.dim_exact = z.dim == rankB;
    return z;
}

ZSet product_Z(const std::vector<Matrix>& healthy_B, const ZSet& zN)
{
    ZSet out;
    Index off = 0;
    std::vector<Matrix> bases;
    for (const auto& Bk : healthy_B) {
        out.blocks.push_back({off, Bk, Matrix(Bk.rows(), 0)});
        Matrix basis(Bk.rows(), 0);
        for (Index j = 0; j < Bk.cols(); ++j) {
            Matrix trial(Bk.rows(), basis.cols() + 1);
            trial << basis, Bk.col(j);
            if (numerical_rank(trial, 1e-9) > basis.cols())
                basis = std::move(trial);
        }
        bases.push_back(basis);
        off += Bk.rows();
    }
    for (const auto& b : zN.blocks)
        out.blocks.push_back({off + b.offset, b.B, b.C});
    bases.push_back(zN.contains_origin ? zN.span_basis : Matrix(zN.ambient(), 0));
    const Index n = off + zN.ambient();

    Index cols = 0;
    for (const auto& b : bases)
        cols += b.cols();
    out.span_basis = Matrix::Zero(n, cols);
    Index r = 0, c = 0;
    for (const auto& b : bases) {
        out.span_basis.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    out.dim = static_cast<int>(cols);
    out.contains_origin = zN.contains_origin;
    out.full_dimensional = out.dim == n;
    out.dim_exact = zN.dim_exact;
    return out;
}

SupportResult support_Z(const Vector& d, const ZSet& zset)
{
    if (d.size() != zset.ambient())
        throw DimensionError("support_Z: dimension mismatch");
    if (d.norm() == 0.0)
        throw ValidationError("support_Z: direction must be nonzero");
    if (!zset.contains_origin)
        throw EmptySet("support_Z: the resilient control set is empty");

    SupportResult out;
    out.exact = true;
    for (const auto& b : zset.blocks) {
        const Vector db = d.segment(b.offset, b.B.rows());
        out.zonotope_difference += h_image(b.B, db) - h_image(b.C, db);
        if (b.C.cols() == 0) {
            out.value += h_image(b.B, db);
            continue;
        }
        double v = 0.0;
        Vector zstar;
        if (block_support_lp(b, db, v, zstar)) {
            out.value += v;
        } else {
            out.exact = false;
        }
    }
    // Certified value from points along d.
    out.certified = zset.t_max(d) * d.squaredNorm();
    if (!out.exact) {
        double cert = 0.0;
        for (const auto& b : zset.blocks) {
            const Vector db = d.segment(b.offset, b.B.rows());
            if (b.C.cols() == 0) {
                cert += h_image(b.B, db);
                continue;
            }
            ZSet single;
            single.blocks.push_back({0, b.B, b.C});
            single.contains_origin = true;
            cert += single.t_max(db) * db.squaredNorm();
        }
        out.certified = std::max(out.certified, cert);
        out.value = out.certified;
    }
    out.agreed = std::abs(out.zonotope_difference - out.value) <= 1e-7 * (1.0 + std::abs(out.value));
    return out;
}

}  // namespace resilnet
