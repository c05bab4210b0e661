#pragma once

#include "resilnet/types.hpp"

namespace resilnet {

struct BoxLsqResult {
    Vector x;
    double residual_norm = 0.0;  // ||M x + c||
    int iterations = 0;
};

// minimize ||M x + c||_2 over lo <= x <= hi.
// Accelerated projected gradient with adaptive restart, then an active-set polish.
BoxLsqResult box_least_squares(const Matrix& M, const Vector& c, const Vector& lo, const Vector& hi,
                               double obj_tol = 1e-10);

// minimize ||G u + h||_P over u in [-1,1]^m (P SPD).
BoxLsqResult min_pnorm_over_cube(const Matrix& G, const Vector& h, const Matrix& P);

}  // namespace resilnet
