#include "resilnet/matrix_margins.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "resilnet/error.hpp"

namespace resilnet {

using CMatrix = Eigen::MatrixXcd;
using cd = std::complex<double>;

double lambda_min_sym(const Matrix& M)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

double lambda_max_sym(const Matrix& M)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double spectral_norm(const Matrix& M)
{
    if (M.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

double spectral_abscissa(const Matrix& A)
{
    if (A.rows() == 0)
        return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Matrix> es(A, false);
    return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Matrix& A)
{
    return spectral_abscissa(A) < -1e-10;
}

LyapunovCertificate solve_lyapunov(const Matrix& A, const Matrix& Q)
{
    const Index n = A.rows();
    if (A.cols() != n || Q.rows() != n || Q.cols() != n)
        throw DimensionError("solve_lyapunov: A and Q must be square of equal size");
    require_spd(Q, "solve_lyapunov: Q");
    const double abscissa = spectral_abscissa(A);
    if (!(abscissa < -1e-10))
        throw NotHurwitz("solve_lyapunov: A is not Hurwitz (spectral abscissa " + std::to_string(abscissa) + ")",
                         abscissa);

    // Complex Schur A = U T U^H turns A^T P + P A = -Q into T^H X + X T = -F with X = U^H P U.
    Eigen::ComplexSchur<Matrix> schur(A);
    const CMatrix& T = schur.matrixT();
    const CMatrix& U = schur.matrixU();
    CMatrix F = U.adjoint() * Q.cast<cd>() * U;
    CMatrix X = CMatrix::Zero(n, n);
    CMatrix TH = T.adjoint();
    for (Index j = 0; j < n; ++j) {
        Eigen::VectorXcd rhs = -F.col(j);
        for (Index k = 0; k < j; ++k)
            rhs -= X.col(k) * T(k, j);
        CMatrix L = TH;
        L.diagonal().array() += T(j, j);
        X.col(j) = L.triangularView<Eigen::Lower>().solve(rhs);
    }
    Matrix P = (U * X * U.adjoint()).real();
    P = 0.5 * (P + P.transpose());

    LyapunovCertificate cert;
    cert.P = P;
    cert.Q = 0.5 * (Q + Q.transpose());
    cert.alpha = lambda_min_sym(cert.Q) / (2.0 * lambda_max_sym(cert.P));
    return cert;
}

LyapunovCertificate solve_lyapunov(const Matrix& A)
{
    return solve_lyapunov(A, Matrix::Identity(A.rows(), A.rows()));
}

double lyapunov_residual(const Matrix& A, const LyapunovCertificate& cert)
{
    return (A.transpose() * cert.P + cert.P * A + cert.Q).norm();
}

int numerical_rank(const Matrix& M, double rel_cutoff)
{
    if (M.size() == 0)
        return 0;
    Eigen::JacobiSVD<Matrix> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0)
        return 0;
    const double cut = rel_cutoff * s(0);
    int r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > cut)
            ++r;
    return r;
}

int numerical_rank(const Matrix& M)
{
    return numerical_rank(M, static_cast<double>(std::max(M.rows(), M.cols())) * 1e-12);
}

Matrix ctrb_matrix(const Matrix& A, const Matrix& B)
{
    const Index n = A.rows(), m = B.cols();
    Matrix K(n, n * m);
    if (m == 0)
        return K;
    Matrix blk = B;
    for (Index k = 0; k < n; ++k) {
        K.middleCols(k * m, m) = blk;
        blk = A * blk;
    }
    return K;
}

int kalman_rank(const Matrix& A, const Matrix& B)
{
    return numerical_rank(ctrb_matrix(A, B));
}

int ctrb_rank(const Matrix& A, const Matrix& B)
{
    const Index n = A.rows();
    if (B.cols() == 0 || n == 0)
        return 0;
    const double scale = std::max({spectral_norm(A), spectral_norm(B), 1e-300});
    const double cutoff = static_cast<double>(std::max(n, B.cols())) * scale * 1e-12;

    Matrix basis(n, 0);
    Matrix block = B;
    for (Index step = 0; step <= n && basis.cols() < n; ++step) {
        // Two passes of block Gram-Schmidt against the accumulated basis.
        for (int pass = 0; pass < 2 && basis.cols() > 0; ++pass)
            block -= basis * (basis.transpose() * block);
        if (block.cols() == 0)
            break;
        Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeThinU);
        const auto& s = svd.singularValues();
        Index k = 0;
        while (k < s.size() && s(k) > cutoff)
            ++k;
        if (k == 0)
            break;
        k = std::min<Index>(k, n - basis.cols());
        Matrix fresh = svd.matrixU().leftCols(k);
        Matrix grown(n, basis.cols() + k);
        grown << basis, fresh;
        basis = std::move(grown);
        block = A * fresh;
    }
    return static_cast<int>(basis.cols());
}

double sigma_min_pencil(const Matrix& A, const Matrix& B, cd s)
{
    const Index n = A.rows(), m = B.cols();
    CMatrix M(n, n + m);
    M.leftCols(n) = A.cast<cd>();
    M.leftCols(n).diagonal().array() -= s;
    if (m > 0)
        M.rightCols(m) = B.cast<cd>();
    Eigen::BDCSVD<CMatrix> svd(M);
    const auto& sv = svd.singularValues();
    return sv(n - 1);
}

namespace {

template <class F>
std::pair<std::array<double, 2>, double> nelder_mead_2d(F&& f, std::array<double, 2> x0, double step, int iters)
{
    std::array<std::array<double, 2>, 3> p{x0, {x0[0] + step, x0[1]}, {x0[0], x0[1] + step}};
    std::array<double, 3> v{f(p[0]), f(p[1]), f(p[2])};
    for (int it = 0; it < iters; ++it) {
        std::array<int, 3> o{0, 1, 2};
        std::sort(o.begin(), o.end(), [&](int a, int b) { return v[a] < v[b]; });
        auto best = p[o[0]], mid = p[o[1]], worst = p[o[2]];
        double vb = v[o[0]], vm = v[o[1]], vw = v[o[2]];
        std::array<double, 2> c{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
        auto lerp = [&](double t) {
            return std::array<double, 2>{c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])};
        };
        auto xr = lerp(-1.0);
        double vr = f(xr);
        if (vr < vb) {
            auto xe = lerp(-2.0);
            double ve = f(xe);
            if (ve < vr) {
                worst = xe;
                vw = ve;
            } else {
                worst = xr;
                vw = vr;
            }
        } else if (vr < vm) {
            worst = xr;
            vw = vr;
        } else {
            auto xc = lerp(0.5);
            double vc = f(xc);
            if (vc < vw) {
                worst = xc;
                vw = vc;
            } else {
                for (auto* q : {&mid, &worst}) {
                    (*q)[0] = best[0] + 0.5 * ((*q)[0] - best[0]);
                    (*q)[1] = best[1] + 0.5 * ((*q)[1] - best[1]);
                }
                vm = f(mid);
                vw = f(worst);
            }
        }
        p = {best, mid, worst};
        v = {vb, vm, vw};
        const double spread = std::abs(p[1][0] - p[0][0]) + std::abs(p[1][1] - p[0][1]) +
                              std::abs(p[2][0] - p[0][0]) + std::abs(p[2][1] - p[0][1]);
        if (spread < 1e-13 * (1.0 + std::abs(p[0][0]) + std::abs(p[0][1])))
            break;
    }
    int bi = static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
    return {p[bi], v[bi]};
}

}  // namespace

UncontrollabilityEstimate distance_to_uncontrollability(const Matrix& A, const Matrix& B)
{
    const Index n = A.rows();
    if (A.cols() != n || B.rows() != n)
        throw DimensionError("distance_to_uncontrollability: incompatible dimensions");
    UncontrollabilityEstimate best;
    best.mu = std::numeric_limits<double>::infinity();
    if (n == 0) {
        best.mu = 0.0;
        return best;
    }
    auto f = [&](const std::array<double, 2>& x) { return sigma_min_pencil(A, B, cd(x[0], x[1])); };

    const double nA = std::max(spectral_norm(A), 1e-3);
    const double re_lo = spectral_abscissa(A) - nA, re_hi = nA;
    const int G = 50;
    struct Probe {
        double v;
        std::array<double, 2> x;
    };
    std::vector<Probe> probes;
    probes.reserve(G * G + n);
    for (int i = 0; i < G; ++i) {
        const double re = re_lo + (re_hi - re_lo) * i / (G - 1);
        for (int j = 0; j < G; ++j) {
            const double im = -nA + 2.0 * nA * j / (G - 1);
            std::array<double, 2> x{re, im};
            probes.push_back({f(x), x});
        }
    }
    // Eigenvalues of A are natural candidates: sigma_min there only depends on B.
    Eigen::EigenSolver<Matrix> es(A, false);
    for (Index k = 0; k < n; ++k) {
        std::array<double, 2> x{es.eigenvalues()(k).real(), es.eigenvalues()(k).imag()};
        probes.push_back({f(x), x});
    }
    std::stable_sort(probes.begin(), probes.end(), [](const Probe& a, const Probe& b) { return a.v < b.v; });

    const double step = std::max((re_hi - re_lo) / (G - 1), 2.0 * nA / (G - 1));
    for (std::size_t k = 0; k < std::min<std::size_t>(5, probes.size()); ++k) {
        if (probes[k].v < best.mu) {
            best.mu = probes[k].v;
            best.s = cd(probes[k].x[0], probes[k].x[1]);
        }
        if (probes[k].v == 0.0)
            continue;
        auto [x, v] = nelder_mead_2d(f, probes[k].x, 0.5 * step, 400);
        if (v < best.mu) {
            best.mu = v;
            best.s = cd(x[0], x[1]);
        }
    }
    return best;
}

StabilityRadiusEstimate real_stability_radius_lb(const Matrix& A)
{
    const double abscissa = spectral_abscissa(A);
    if (!(abscissa < -1e-10))
        throw NotHurwitz("real_stability_radius_lb: A is not Hurwitz", abscissa);
    const Index n = A.rows();
    auto f = [&](double w) { return sigma_min_pencil(A, Matrix(n, 0), cd(0.0, w)); };

    const double top = 10.0 * spectral_norm(A);
    std::vector<double> grid;
    grid.push_back(0.0);
    for (int i = 1; i < 100; ++i)
        grid.push_back(top * i / 99.0);
    for (int i = 0; i < 100; ++i)
        grid.push_back(top * std::pow(10.0, -4.0 + 4.0 * i / 99.0));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        vals[i] = f(grid[i]);
    std::size_t k = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());

    StabilityRadiusEstimate out{vals[k], grid[k]};
    double lo = grid[k > 0 ? k - 1 : 0], hi = grid[std::min(k + 1, grid.size() - 1)];
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    double fa = f(a), fb = f(b);
    for (int it = 0; it < 80 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    for (auto [w, v] : {std::pair{a, fa}, std::pair{b, fb}})
        if (v < out.value)
            out = {v, w};
    return out;
}

MarginReport margins(const Matrix& A, const Matrix& B)
{
    MarginReport r;
    r.hurwitz = is_hurwitz(A);
    r.controllable = ctrb_rank(A, B) == A.rows();
    r.mu = distance_to_uncontrollability(A, B).mu;
    r.mu_is_lower_bound = false;
    r.r_real = r.hurwitz ? real_stability_radius_lb(A).value : 0.0;
    return r;
}

bool is_spd(const Matrix& M)
{
    if (M.rows() != M.cols() || M.rows() == 0)
        return false;
    const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        return false;
    Eigen::LLT<Matrix> llt(0.5 * (M + M.transpose()));
    return llt.info() == Eigen::Success && lambda_min_sym(0.5 * (M + M.transpose())) > 0.0;
}

void require_spd(const Matrix& M, const char* what)
{
    if (!is_spd(M))
        throw ValidationError(std::string(what) + " must be symmetric positive definite");
}

double p_norm(const Vector& x, const Matrix& P)
{
    if (x.size() == 0)
        return 0.0;
    const double q = x.dot(P * x);
    return std::sqrt(std::max(q, 0.0));
}

double gamma_gain(const Matrix& D, const Matrix& P_out, const Matrix& Q_in)
{
    require_spd(P_out, "gamma_gain: P_out");
    require_spd(Q_in, "gamma_gain: Q_in");
    if (D.rows() != P_out.rows() || D.cols() != Q_in.rows())
        throw DimensionError("gamma_gain: incompatible dimensions");
    Matrix G = D.transpose() * P_out * D;
    G = 0.5 * (G + G.transpose());
    return std::sqrt(std::max(lambda_max_sym(G), 0.0) / lambda_min_sym(Q_in));
}

}  // namespace resilnet
