#include "resilnet/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "resilnet/error.hpp"

namespace resilnet {

namespace {

constexpr double kPivotTol = 1e-11;

struct Tableau {
    Matrix T;                // rows 0..R-1 constraints, row R objective; last column rhs
    std::vector<int> basis;  // basic variable per row

    Index rows() const { return T.rows() - 1; }
    Index vars() const { return T.cols() - 1; }

    void pivot(Index r, Index c)
    {
        T.row(r) /= T(r, c);
        for (Index i = 0; i < T.rows(); ++i) {
            if (i == r)
                continue;
            const double f = T(i, c);
            if (f != 0.0)
                T.row(i) -= f * T.row(r);
        }
        basis[r] = static_cast<int>(c);
    }

    // Returns false on unboundedness. allowed[j] masks entering candidates.
    LpResult::Status run(const std::vector<bool>& allowed, int max_iter)
    {
        const Index R = rows(), V = vars();
        for (int it = 0; it < max_iter; ++it) {
            Index enter = -1;
            for (Index j = 0; j < V; ++j) {
                if (allowed[j] && T(R, j) < -1e-12) {
                    enter = j;  // Bland: lowest index
                    break;
                }
            }
            if (enter < 0)
                return LpResult::Status::Optimal;
            Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < R; ++i) {
                if (T(i, enter) > kPivotTol) {
                    const double ratio = T(i, V) / T(i, enter);
                    if (ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && leave >= 0 &&
                                                 basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0)
                return LpResult::Status::Unbounded;
            pivot(leave, enter);
        }
        return LpResult::Status::IterationLimit;
    }
};

}  // namespace

LpResult solve_lp(const Vector& c, const Matrix& Aeq, const Vector& beq, const Vector& lo, const Vector& hi,
                  double feas_tol)
{
    const Index nx = c.size();
    const Index me = Aeq.rows();
    if (Aeq.cols() != nx || beq.size() != me || lo.size() != nx || hi.size() != nx)
        throw DimensionError("solve_lp: inconsistent dimensions");
    Vector ub = hi - lo;
    for (Index j = 0; j < nx; ++j)
        if (!(ub(j) >= 0.0) || !std::isfinite(ub(j)))
            throw ValidationError("solve_lp: bounds must be finite with lo <= hi");

    // Variables: y (nx), slack s (nx), artificials (R). Rows: Aeq y = beq - Aeq lo, y + s = ub.
    const Index R = me + nx;
    const Index V = 2 * nx + R;
    Tableau tab;
    tab.T = Matrix::Zero(R + 1, V + 1);
    tab.basis.assign(R, 0);
    Vector rhs_eq = beq - Aeq * lo;
    for (Index i = 0; i < me; ++i) {
        const double sgn = rhs_eq(i) < 0.0 ? -1.0 : 1.0;
        tab.T.row(i).head(nx) = sgn * Aeq.row(i);
        tab.T(i, V) = sgn * rhs_eq(i);
    }
    for (Index j = 0; j < nx; ++j) {
        tab.T(me + j, j) = 1.0;
        tab.T(me + j, nx + j) = 1.0;
        tab.T(me + j, V) = ub(j);
    }
    for (Index i = 0; i < R; ++i) {
        tab.T(i, 2 * nx + i) = 1.0;
        tab.basis[i] = static_cast<int>(2 * nx + i);
    }
    // Phase-1 objective: sum of artificials, expressed in nonbasic terms.
    for (Index i = 0; i < R; ++i)
        tab.T.row(R) -= tab.T.row(i);
    for (Index i = 0; i < R; ++i)
        tab.T(R, 2 * nx + i) = 0.0;

    const int max_iter = 50 * static_cast<int>(V + R) + 1000;
    std::vector<bool> allowed(V, true);
    LpResult out;
    auto st = tab.run(allowed, max_iter);
    if (st == LpResult::Status::IterationLimit) {
        out.status = st;
        return out;
    }
    out.infeasibility = -tab.T(R, V);
    const double scale = 1.0 + (beq.size() ? beq.cwiseAbs().maxCoeff() : 0.0) + ub.cwiseAbs().maxCoeff();
    if (out.infeasibility > feas_tol * scale) {
        out.status = LpResult::Status::Infeasible;
        return out;
    }

    // Drive remaining artificials out of the basis where possible.
    for (Index i = 0; i < R; ++i) {
        if (tab.basis[i] >= 2 * nx) {
            for (Index j = 0; j < 2 * nx; ++j) {
                if (std::abs(tab.T(i, j)) > 1e-9) {
                    tab.pivot(i, j);
                    break;
                }
            }
        }
    }
    for (Index j = 2 * nx; j < V; ++j)
        allowed[j] = false;

    tab.T.row(R).setZero();
    tab.T.row(R).head(nx) = c.transpose();
    for (Index i = 0; i < R; ++i) {
        const int b = tab.basis[i];
        if (b < nx && c(b) != 0.0)
            tab.T.row(R) -= c(b) * tab.T.row(i);
    }
    st = tab.run(allowed, max_iter);
    out.status = st;
    if (st != LpResult::Status::Optimal)
        return out;

    Vector y = Vector::Zero(nx);
    for (Index i = 0; i < R; ++i)
        if (tab.basis[i] < nx)
            y(tab.basis[i]) = tab.T(i, V);
    out.x = (lo + y).cwiseMax(lo).cwiseMin(hi);
    out.objective = c.dot(out.x);
    return out;
}

}  // namespace resilnet
