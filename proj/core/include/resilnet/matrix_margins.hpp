#pragma once

#include <complex>

#include "resilnet/types.hpp"

namespace resilnet {

struct LyapunovCertificate {
    Matrix P;
    Matrix Q;
    double alpha = 0.0;  // lambda_min(Q) / (2 lambda_max(P))
};

// Solves A^T P + P A = -Q. Throws NotHurwitz if any Re(lambda(A)) >= -1e-10.
LyapunovCertificate solve_lyapunov(const Matrix& A, const Matrix& Q);
LyapunovCertificate solve_lyapunov(const Matrix& A);

double lyapunov_residual(const Matrix& A, const LyapunovCertificate& cert);

double spectral_abscissa(const Matrix& A);
bool is_hurwitz(const Matrix& A);

// Rank of the Krylov space [B, AB, ..., A^{n-1}B] via an orthogonal staircase.
int ctrb_rank(const Matrix& A, const Matrix& B);
// Numerical rank of the explicit Kalman matrix (square-conditioning grows with n).
int kalman_rank(const Matrix& A, const Matrix& B);
Matrix ctrb_matrix(const Matrix& A, const Matrix& B);

int numerical_rank(const Matrix& M);
int numerical_rank(const Matrix& M, double rel_cutoff);

struct UncontrollabilityEstimate {
    double mu = 0.0;
    std::complex<double> s{0.0, 0.0};
};

// min over a probe set of sigma_min([A - sI, B]); an upper bound of the true distance.
UncontrollabilityEstimate distance_to_uncontrollability(const Matrix& A, const Matrix& B);
double sigma_min_pencil(const Matrix& A, const Matrix& B, std::complex<double> s);

struct StabilityRadiusEstimate {
    double value = 0.0;
    double omega = 0.0;
};

// Complex stability radius, used as a lower bound of the real one. Throws NotHurwitz.
StabilityRadiusEstimate real_stability_radius_lb(const Matrix& A);

struct MarginReport {
    double mu = 0.0;
    bool mu_is_lower_bound = false;
    double r_real = 0.0;
    bool controllable = false;
    bool hurwitz = false;
};

MarginReport margins(const Matrix& A, const Matrix& B);

bool is_spd(const Matrix& M);
void require_spd(const Matrix& M, const char* what);

double p_norm(const Vector& x, const Matrix& P);
// sqrt(lambda_max(D^T P_out D) / lambda_min(Q_in)), so ||D x||_{P_out} <= gamma ||x||_{Q_in}.
double gamma_gain(const Matrix& D, const Matrix& P_out, const Matrix& Q_in);

double lambda_min_sym(const Matrix& M);
double lambda_max_sym(const Matrix& M);
double spectral_norm(const Matrix& M);

}  // namespace resilnet
