#pragma once

#include "resilnet/types.hpp"

namespace resilnet {

struct LpResult {
    enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };
    Status status = Status::Infeasible;
    Vector x;
    double objective = 0.0;
    double infeasibility = 0.0;  // phase-1 optimum
};

// minimize c^T x  subject to  Aeq x = beq,  lo <= x <= hi (all bounds finite).
// Dense two-phase tableau simplex with Bland's rule.
LpResult solve_lp(const Vector& c, const Matrix& Aeq, const Vector& beq, const Vector& lo, const Vector& hi,
                  double feas_tol = 1e-9);

}  // namespace resilnet
