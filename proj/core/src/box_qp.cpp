#include "resilnet/box_qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "resilnet/error.hpp"

namespace resilnet {

namespace {

double half_sq(const Matrix& M, const Vector& c, const Vector& x)
{
    return 0.5 * (M * x + c).squaredNorm();
}

Vector project(const Vector& x, const Vector& lo, const Vector& hi)
{
    return x.cwiseMax(lo).cwiseMin(hi);
}

// Fix coordinates at bounds where the gradient pushes outward, solve the rest exactly.
bool polish(const Matrix& M, const Vector& c, const Vector& lo, const Vector& hi, Vector& x)
{
    const Index n = x.size();
    const double tol = 1e-9;
    for (int round = 0; round < 2 * static_cast<int>(n) + 2; ++round) {
        Vector g = M.transpose() * (M * x + c);
        std::vector<Index> freev;
        for (Index i = 0; i < n; ++i) {
            const bool at_lo = x(i) <= lo(i) + tol && g(i) >= 0.0;
            const bool at_hi = x(i) >= hi(i) - tol && g(i) <= 0.0;
            if (!(at_lo || at_hi) && hi(i) > lo(i))
                freev.push_back(i);
        }
        Vector cand = x;
        for (Index i = 0; i < n; ++i) {
            if (std::find(freev.begin(), freev.end(), i) == freev.end())
                cand(i) = (x(i) - lo(i) < hi(i) - x(i)) ? lo(i) : hi(i);
            if (hi(i) == lo(i))
                cand(i) = lo(i);
        }
        if (!freev.empty()) {
            Matrix Mf(M.rows(), static_cast<Index>(freev.size()));
            for (std::size_t k = 0; k < freev.size(); ++k)
                Mf.col(static_cast<Index>(k)) = M.col(freev[k]);
            Vector rhs = -(M * cand + c);
            for (std::size_t k = 0; k < freev.size(); ++k)
                rhs += M.col(freev[k]) * cand(freev[k]);
            Vector sol = Mf.completeOrthogonalDecomposition().solve(rhs);
            for (std::size_t k = 0; k < freev.size(); ++k)
                cand(freev[k]) = sol(static_cast<Index>(k));
        }
        bool inside = true;
        for (Index i = 0; i < n; ++i)
            if (cand(i) < lo(i) - 1e-12 || cand(i) > hi(i) + 1e-12)
                inside = false;
        if (!inside) {
            // Step toward the candidate until the first bound is hit.
            double t = 1.0;
            for (Index i = 0; i < n; ++i) {
                const double d = cand(i) - x(i);
                if (d > 0 && x(i) + d > hi(i))
                    t = std::min(t, (hi(i) - x(i)) / d);
                if (d < 0 && x(i) + d < lo(i))
                    t = std::min(t, (lo(i) - x(i)) / d);
            }
            cand = project(x + t * (cand - x), lo, hi);
        }
        cand = project(cand, lo, hi);
        if (half_sq(M, c, cand) <= half_sq(M, c, x) + 1e-18) {
            const bool moved = (cand - x).cwiseAbs().maxCoeff() > 1e-15;
            x = cand;
            if (inside && !moved)
                return true;
            if (inside) {
                // Check KKT on the new point.
                Vector g2 = M.transpose() * (M * x + c);
                bool kkt = true;
                for (Index i = 0; i < n; ++i) {
                    if (x(i) > lo(i) + tol && x(i) < hi(i) - tol && std::abs(g2(i)) > 1e-9 * (1.0 + g2.norm()))
                        kkt = false;
                    if (x(i) <= lo(i) + tol && g2(i) < -1e-9)
                        kkt = false;
                    if (x(i) >= hi(i) - tol && g2(i) > 1e-9)
                        kkt = false;
                }
                if (kkt)
                    return true;
            }
        } else {
            return false;
        }
    }
    return false;
}

bool kkt_holds(const Matrix& M, const Vector& c, const Vector& lo, const Vector& hi, const Vector& x)
{
    const Vector g = M.transpose() * (M * x + c);
    const double tol = 1e-9 * (1.0 + M.norm() * (M * x + c).norm());
    for (Index i = 0; i < x.size(); ++i) {
        if (x(i) < lo(i) - 1e-12 || x(i) > hi(i) + 1e-12)
            return false;
        const bool at_lo = x(i) <= lo(i) + 1e-12, at_hi = x(i) >= hi(i) - 1e-12;
        if (at_lo && at_hi)
            continue;
        if (at_lo ? g(i) < -tol : at_hi ? g(i) > tol : std::abs(g(i)) > tol)
            return false;
    }
    return true;
}

}  // namespace

BoxLsqResult box_least_squares(const Matrix& M, const Vector& c, const Vector& lo, const Vector& hi,
                               double obj_tol)
{
    const Index n = lo.size();
    if (M.cols() != n || hi.size() != n || c.size() != M.rows())
        throw DimensionError("box_least_squares: inconsistent dimensions");
    BoxLsqResult out;
    if (n == 0) {
        out.x = Vector(0);
        out.residual_norm = c.norm();
        return out;
    }
    Matrix H = M.transpose() * M;
    double L = 0.0;
    if (H.size())
        L = Eigen::SelfAdjointEigenSolver<Matrix>(H, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    Vector x = project(Vector::Zero(n), lo, hi);
    if (L <= 0.0) {
        out.x = x;
        out.residual_norm = (M * x + c).norm();
        return out;
    }
    // Active-set polish from the clamped unconstrained solution settles most
    // small instances; the accelerated gradient loop handles the rest.
    {
        Vector x0 = project(M.completeOrthogonalDecomposition().solve(-c), lo, hi);
        polish(M, c, lo, hi, x0);
        if (kkt_holds(M, c, lo, hi, x0)) {
            out.x = x0;
            out.residual_norm = (M * x0 + c).norm();
            return out;
        }
    }
    const double step = 1.0 / L;
    Vector y = x, x_prev = x;
    double t = 1.0;
    double f_prev = half_sq(M, c, x);
    const int max_iter = 20000;
    int it = 0;
    int stall = 0;
    for (; it < max_iter; ++it) {
        Vector g = M.transpose() * (M * y + c);
        Vector xn = project(y - step * g, lo, hi);
        double fn = half_sq(M, c, xn);
        if (fn > f_prev) {
            // Adaptive restart.
            t = 1.0;
            y = x;
            g = M.transpose() * (M * y + c);
            xn = project(y - step * g, lo, hi);
            fn = half_sq(M, c, xn);
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = xn + ((t - 1.0) / tn) * (xn - x);
        y = project(y, lo, hi);
        x_prev = x;
        x = xn;
        t = tn;
        const double change = std::abs(f_prev - fn);
        f_prev = fn;
        if (change <= 0.01 * obj_tol * obj_tol + 1e-30 * (1.0 + fn)) {
            if (++stall >= 5)
                break;
        } else {
            stall = 0;
        }
    }
    Vector xp = x;
    if (polish(M, c, lo, hi, xp) || half_sq(M, c, xp) <= half_sq(M, c, x))
        x = xp;
    out.x = x;
    out.residual_norm = (M * x + c).norm();
    out.iterations = it;
    return out;
}

BoxLsqResult min_pnorm_over_cube(const Matrix& G, const Vector& h, const Matrix& P)
{
    const Index m = G.cols();
    Eigen::LLT<Matrix> llt(P);
    if (llt.info() != Eigen::Success)
        throw ValidationError("min_pnorm_over_cube: P must be positive definite");
    // ||v||_P = ||L^T v||_2 with P = L L^T.
    Matrix Lt = llt.matrixU();
    return box_least_squares(Lt * G, Lt * h, -Vector::Ones(m), Vector::Ones(m));
}

}  // namespace resilnet
