#include "resilnet/verdicts.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "resilnet/error.hpp"
#include "resilnet/matrix_margins.hpp"

namespace resilnet {

const char* to_string(Conclusion c)
{
    switch (c) {
    case Conclusion::Stabilizable: return "Stabilizable";
    case Conclusion::Controllable: return "Controllable";
    case Conclusion::ResilientlyStabilizable: return "ResilientlyStabilizable";
    case Conclusion::Resilient: return "Resilient";
    case Conclusion::NotDetermined: return "NotDetermined";
    case Conclusion::Negative: return "Negative";
    }
    return "?";
}

const char* to_string(Sufficiency s)
{
    return s == Sufficiency::NecessaryAndSufficient ? "NecessaryAndSufficient" : "SufficientOnly";
}

const char* to_string(Witness::Kind k)
{
    switch (k) {
    case Witness::Kind::None: return "none";
    case Witness::Kind::Eigenvalue: return "eigenvalue";
    case Witness::Kind::Eigenvector: return "eigenvector";
    case Witness::Kind::RankDefect: return "rank_defect";
    case Witness::Kind::EmptySet: return "empty_set";
    }
    return "?";
}

bool Verdict::positive() const
{
    return conclusion != Conclusion::NotDetermined && conclusion != Conclusion::Negative;
}

namespace {

struct Spectrum {
    double abscissa = 0.0;
    std::complex<double> worst{0.0, 0.0};  // eigenvalue with the largest real part
    bool imaginary_axis = false;            // all |Re| <= tol
    std::complex<double> off_axis{0.0, 0.0};
};

Spectrum spectrum(const Matrix& A)
{
    Spectrum s;
    Eigen::EigenSolver<Matrix> es(A, false);
    const auto& ev = es.eigenvalues();
    s.abscissa = -1e300;
    s.imaginary_axis = true;
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i).real() > s.abscissa) {
            s.abscissa = ev(i).real();
            s.worst = ev(i);
        }
        if (std::abs(ev(i).real()) > kEigTol && s.imaginary_axis) {
            s.imaginary_axis = false;
            s.off_axis = ev(i);
        }
    }
    return s;
}

Evidence eigen_evidence(const Spectrum& s)
{
    return {"spectral_abscissa <= 0", s.abscissa <= kEigTol, s.abscissa, kEigTol, ""};
}

Evidence axis_evidence(const Spectrum& s)
{
    std::ostringstream os;
    if (!s.imaginary_axis)
        os << "eigenvalue " << s.off_axis.real() << (s.off_axis.imag() >= 0 ? "+" : "") << s.off_axis.imag()
           << "i off the imaginary axis";
    return {"all |Re(lambda)| <= tol", s.imaginary_axis, s.imaginary_axis ? 0.0 : std::abs(s.off_axis.real()),
            kEigTol, os.str()};
}

Matrix orthonormal_columns(const Matrix& M)
{
    if (M.cols() == 0)
        return Matrix(M.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU);
    const int r = numerical_rank(M, 1e-9);
    return svd.matrixU().leftCols(r);
}

// Unit vector v in span(V) minimizing ||v^T G||, plus the left-null dimension estimate.
Vector least_aligned(const Matrix& V, const Matrix& G, int* null_dim)
{
    const Index k = V.cols();
    if (G.cols() == 0) {
        if (null_dim)
            *null_dim = static_cast<int>(k);
        return V.col(0);
    }
    Matrix M = V.transpose() * G;  // k x g
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU);
    const auto& s = svd.singularValues();
    const double scale = std::max(1.0, G.norm());
    int nd = 0;
    for (Index i = 0; i < k; ++i) {
        const double si = i < s.size() ? s(i) : 0.0;
        if (si <= 1e-9 * scale)
            ++nd;
    }
    if (null_dim)
        *null_dim = nd;
    Vector c = svd.matrixU().col(k - 1);
    Vector v = V * c;
    return v / v.norm();
}

}  // namespace

std::vector<RealEigenspace> real_left_eigenspaces(const Matrix& A)
{
    const Index n = A.rows();
    std::vector<RealEigenspace> out;
    if (n == 0)
        return out;
    Eigen::EigenSolver<Matrix> es(A.transpose(), false);
    std::vector<double> reals;
    for (Index i = 0; i < n; ++i) {
        const auto l = es.eigenvalues()(i);
        if (std::abs(l.imag()) <= kEigTol * std::max(1.0, std::abs(l)))
            reals.push_back(l.real());
    }
    std::sort(reals.begin(), reals.end());
    const double scale = std::max(1.0, spectral_norm(A));
    std::vector<std::vector<double>> clusters;
    for (double r : reals) {
        if (!clusters.empty() && std::abs(r - clusters.back().back()) <= 1e-7 * (1.0 + std::abs(r)))
            clusters.back().push_back(r);
        else
            clusters.push_back({r});
    }
    for (const auto& c : clusters) {
        double lambda = 0.0;
        for (double r : c)
            lambda += r;
        lambda /= static_cast<double>(c.size());
        Matrix M = A.transpose() - lambda * Matrix::Identity(n, n);
        Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        Index k = 0;
        for (Index i = 0; i < s.size(); ++i)
            if (s(i) <= 1e-8 * scale)
                ++k;
        k = std::max<Index>(k, 1);
        k = std::min<Index>(k, static_cast<Index>(c.size()));
        out.push_back({lambda, svd.matrixV().rightCols(k)});
    }
    return out;
}

Verdict sontag(const Matrix& A, const Matrix& B, const Hypercube& U)
{
    if (U.dim != B.cols())
        throw DimensionError("sontag: hypercube dimension must equal the number of inputs");
    Verdict v;
    v.test = "sontag";
    v.sufficiency = Sufficiency::NecessaryAndSufficient;
    const int n = static_cast<int>(A.rows());
    const int rank = ctrb_rank(A, B);
    const Spectrum s = spectrum(A);
    v.basis.push_back({"rank(ctrb(A,B)) = n", rank == n, static_cast<double>(rank), static_cast<double>(n), ""});
    v.basis.push_back(eigen_evidence(s));
    v.basis.push_back(axis_evidence(s));
    if (rank < n) {
        v.conclusion = Conclusion::Negative;
        v.witness.kind = Witness::Kind::RankDefect;
        v.witness.rank = rank;
        v.witness.required = n;
    } else if (s.abscissa > kEigTol) {
        v.conclusion = Conclusion::Negative;
        v.witness.kind = Witness::Kind::Eigenvalue;
        v.witness.eigenvalue = s.worst;
    } else {
        v.conclusion = s.imaginary_axis ? Conclusion::Controllable : Conclusion::Stabilizable;
    }
    return v;
}

Verdict sontag(const Matrix& A, const Matrix& B)
{
    return sontag(A, B, Hypercube{static_cast<int>(B.cols())});
}

Verdict brammer(const Matrix& A, const Matrix& B)
{
    Verdict v = sontag(A, B);
    v.test = "brammer";
    bool eig_ok = true;
    for (const auto& es : real_left_eigenspaces(A)) {
        Vector cand = least_aligned(es.basis, B, nullptr);
        // h_BU(v) = sum_j |v^T B_j| takes the same value at v and -v
        const double h = B.cols() ? (cand.transpose() * B).cwiseAbs().sum() : 0.0;
        if (h <= 1e-9) {
            eig_ok = false;
            std::ostringstream os;
            os << "real eigenvector v = (" << cand.transpose() << ") of A^T for lambda=" << es.lambda << " annihilates B";
            v.basis.push_back({"no real eigenvector v of A^T with max_u v^T B u <= 0", false, h, 1e-9, os.str()});
            v.conclusion = Conclusion::Negative;
            v.witness = Witness{};
            v.witness.kind = Witness::Kind::Eigenvector;
            v.witness.vector = cand;
            v.witness.eigenvalue = es.lambda;
            break;
        }
    }
    if (eig_ok)
        v.basis.push_back({"no real eigenvector v of A^T with max_u v^T B u <= 0", true, 0.0, 1e-9, ""});
    return v;
}

Verdict resilient_full_dim(const Matrix& A, const Matrix& B, const Matrix& C, std::uint64_t seed)
{
    Verdict v;
    v.test = "resilient_full_dim";
    const ZSet Z = build_Z(B, C, seed);
    const int n = static_cast<int>(A.rows());
    v.basis.push_back({"interior(Z) nonempty (dim Z = n)", Z.full_dimensional, static_cast<double>(Z.dim),
                       static_cast<double>(n), Z.dim_exact ? "" : "dim is a certified lower bound"});
    if (!Z.full_dimensional) {
        v.conclusion = Conclusion::NotDetermined;
        v.sufficiency = Sufficiency::SufficientOnly;
        return v;
    }
    const Spectrum s = spectrum(A);
    v.basis.push_back(eigen_evidence(s));
    v.basis.push_back(axis_evidence(s));
    v.sufficiency = Sufficiency::NecessaryAndSufficient;
    if (s.abscissa > kEigTol) {
        v.conclusion = Conclusion::Negative;
        v.witness.kind = Witness::Kind::Eigenvalue;
        v.witness.eigenvalue = s.worst;
    } else {
        v.conclusion = s.imaginary_axis ? Conclusion::Resilient : Conclusion::ResilientlyStabilizable;
    }
    return v;
}

Verdict resilient_NS(const Matrix& A, const ZSet& Z)
{
    Verdict v;
    v.test = "resilient_NS";
    v.sufficiency = Sufficiency::NecessaryAndSufficient;
    const int n = static_cast<int>(A.rows());
    const Spectrum s = spectrum(A);
    v.basis.push_back(eigen_evidence(s));
    v.basis.push_back(axis_evidence(s));
    v.basis.push_back({"0 in Z", Z.contains_origin, Z.contains_origin ? 1.0 : 0.0, 1.0,
                       Z.contains_origin ? "" : "Z is empty"});

    if (s.abscissa > kEigTol) {
        v.conclusion = Conclusion::Negative;
        v.witness.kind = Witness::Kind::Eigenvalue;
        v.witness.eigenvalue = s.worst;
        return v;
    }
    if (!Z.contains_origin) {
        v.basis.push_back({"rank(ctrb(A,Z)) = n", false, 0.0, static_cast<double>(n), "Z has empty span"});
        v.conclusion = Conclusion::Negative;
        v.witness.kind = Witness::Kind::EmptySet;
        v.witness.rank = 0;
        v.witness.required = n;
        return v;
    }

    const int rank = ctrb_rank(A, Z.span_basis);
    v.basis.push_back({"rank(ctrb(A,Z)) = n", rank == n, static_cast<double>(rank), static_cast<double>(n),
                       Z.dim_exact ? "" : "span(Z) certified from below"});
    if (rank < n) {
        if (Z.dim_exact) {
            v.conclusion = Conclusion::Negative;
            v.witness.kind = Witness::Kind::RankDefect;
            v.witness.rank = rank;
            v.witness.required = n;
        } else {
            v.conclusion = Conclusion::NotDetermined;
            v.sufficiency = Sufficiency::SufficientOnly;
        }
        return v;
    }

    const Matrix Zo = orthonormal_columns(Z.span_basis);
    bool all_exact = true, all_agreed = true, uncertain = false;
    for (const auto& es : real_left_eigenspaces(A)) {
        int null_dim = 0;
        Vector cand = least_aligned(es.basis, Zo, &null_dim);
        double worst = 1e300;
        for (double sgn : {1.0, -1.0}) {
            SupportResult sr = support_Z(sgn * cand, Z);
            all_exact = all_exact && sr.exact;
            all_agreed = all_agreed && sr.agreed;
            worst = std::min(worst, sr.value);
        }
        std::ostringstream os;
        os << "lambda=" << es.lambda;
        if (worst <= 1e-9) {
            v.basis.push_back({"no real eigenvector v of A^T with sup_Z v^T z <= 0", false, worst, 1e-9, os.str()});
            if (all_exact) {
                v.conclusion = Conclusion::Negative;
                v.witness.kind = Witness::Kind::Eigenvector;
                v.witness.vector = cand;
                v.witness.eigenvalue = es.lambda;
            } else {
                v.conclusion = Conclusion::NotDetermined;
                v.sufficiency = Sufficiency::SufficientOnly;
            }
            return v;
        }
        if (!Z.dim_exact && null_dim > 1)
            uncertain = true;
    }
    v.basis.push_back({"no real eigenvector v of A^T with sup_Z v^T z <= 0", true, 0.0, 1e-9,
                       all_agreed ? "" : "zonotope support difference disagreed with the exact support"});
    v.conclusion = s.imaginary_axis ? Conclusion::Resilient : Conclusion::ResilientlyStabilizable;
    if (uncertain || !all_exact)
        v.sufficiency = Sufficiency::SufficientOnly;
    return v;
}

Verdict resilient_NS(const Matrix& A, const Matrix& B, const Matrix& C, std::uint64_t seed)
{
    return resilient_NS(A, build_Z(B, C, seed));
}

Verdict network_stabilizable(const PartitionedNetwork& pn)
{
    Verdict v = sontag(pn.A + pn.D, pn.Bbar);
    v.test = "network_stabilizable";
    return v;
}

Verdict sufficient_network_conditions(const PartitionedNetwork& pn)
{
    Verdict v;
    v.test = "sufficient_network_conditions";
    v.sufficiency = Sufficiency::SufficientOnly;
    const int N = static_cast<int>(pn.block_states.size());

    bool a = true, ctrl = true;
    int r = 0, c = 0;
    for (int k = 0; k < N; ++k) {
        const int nk = pn.block_states[k], mk = pn.block_inputs[k];
        Matrix Bk = pn.Bbar.block(r, c, nk, mk);
        Matrix Ak = pn.A.block(r, r, nk, nk);
        if (numerical_rank(Bk) < nk)
            a = false;
        if (ctrb_rank(Ak, Bk) < nk)
            ctrl = false;
        r += nk;
        c += mk;
    }
    v.basis.push_back({"(a) rank(Bbar_i) = n_i for all i", a, a ? 1.0 : 0.0, 1.0, ""});

    Matrix F = pn.Bbar.completeOrthogonalDecomposition().solve(pn.D);
    const double res = (pn.Bbar * F - pn.D).norm();
    const double dnorm = spectral_norm(pn.D);
    const bool b = res <= 1e-9 * std::max(1.0, dnorm) && ctrl;
    v.basis.push_back({"(b) D = Bbar F and (A_i, Bbar_i) controllable", b, res, 1e-9,
                       ctrl ? "" : "some pair (A_i, Bbar_i) is not controllable"});

    const auto mu = distance_to_uncontrollability(pn.A, pn.Bbar);
    const bool cc = dnorm < 0.95 * mu.mu;
    v.basis.push_back({"(c) ||D|| < 0.95 mu(A,Bbar)", cc, dnorm, 0.95 * mu.mu,
                       "estimated margin (grid+refine upper bound of mu)"});

    bool d = false;
    double rr = 0.0;
    std::string note = "complex stability radius used as lower bound";
    if (is_hurwitz(pn.A)) {
        rr = real_stability_radius_lb(pn.A).value;
        d = dnorm < rr;
    } else {
        note = "A is not Hurwitz";
    }
    v.basis.push_back({"(d) ||D|| < r_real(A)", d, dnorm, rr, note});

    v.conclusion = ((a || b || cc) && d) ? Conclusion::Stabilizable : Conclusion::NotDetermined;
    return v;
}

Verdict network_resiliently_stabilizable(const PartitionedNetwork& pn, std::uint64_t seed)
{
    Verdict v;
    v.test = "network_resiliently_stabilizable";
    v.sufficiency = Sufficiency::SufficientOnly;

    const ZSet zN = build_Z(pn.B_N, pn.C_N, seed);
    std::vector<Matrix> healthy;
    for (int k = 0; k < pn.healthy_count(); ++k)
        healthy.push_back(pn.healthy_block_B(k));
    const ZSet Z = product_Z(healthy, zN);
    const double dnorm = spectral_norm(pn.D);

    double rr = 0.0;
    const bool hurwitz = is_hurwitz(pn.A);
    if (hurwitz)
        rr = real_stability_radius_lb(pn.A).value;

    // Prop. 5 branch.
    bool full_rank = true;
    for (const auto& Bk : healthy)
        if (numerical_rank(Bk) < Bk.rows())
            full_rank = false;
    v.basis.push_back({"P5: rank(Bbar_i) = n_i for healthy i", full_rank, full_rank ? 1.0 : 0.0, 1.0, ""});
    v.basis.push_back({"P5: interior(Z_N) nonempty", zN.full_dimensional, static_cast<double>(zN.dim),
                       static_cast<double>(pn.n_N), ""});
    const bool d_ok = hurwitz && dnorm < rr;
    v.basis.push_back({"P5: ||D|| < r_real(A)", d_ok, dnorm, rr, hurwitz ? "" : "A is not Hurwitz"});
    const bool p5 = full_rank && zN.full_dimensional && d_ok;

    // Prop. 6 branch; mu_Z read as the distance to uncontrollability of (A, Z).
    bool p6 = false;
    if (Z.contains_origin && Z.dim > 0) {
        const double muZ = distance_to_uncontrollability(pn.A, Z.span_basis).mu;
        const double thr = 0.95 * std::min(rr, muZ);
        const bool margin = hurwitz && dnorm < thr;
        v.basis.push_back({"P6: ||D|| < 0.95 min(r_real(A), mu_Z(A))", margin, dnorm, thr,
                           "mu_Z read as distance to uncontrollability of (A, Z); estimated margin"});
        bool eig = false;
        if (margin) {
            Verdict t = resilient_NS(pn.A + pn.D, Z);
            eig = true;
            for (const auto& e : t.basis)
                if (e.condition.rfind("no real eigenvector", 0) == 0 && !e.passed)
                    eig = false;
            v.basis.push_back({"P6: no real eigenvector of (A+D)^T with sup_Z v^T z <= 0", eig, 0.0, 1e-9, ""});
        }
        p6 = margin && eig;
    } else {
        v.basis.push_back({"P6: ||D|| < 0.95 min(r_real(A), mu_Z(A))", false, dnorm, 0.0, "Z is empty or {0}"});
    }

    // Direct necessary-and-sufficient test on the assembled network with the product set.
    Verdict direct = resilient_NS(pn.A + pn.D, Z);
    for (auto e : direct.basis) {
        e.condition = "T3: " + e.condition;
        v.basis.push_back(e);
    }

    if (direct.sufficiency == Sufficiency::NecessaryAndSufficient && direct.conclusion != Conclusion::NotDetermined) {
        v.conclusion = direct.conclusion;
        v.sufficiency = Sufficiency::NecessaryAndSufficient;
        v.witness = direct.witness;
        return v;
    }
    if (direct.positive() || p5 || p6) {
        v.conclusion = direct.positive() ? direct.conclusion : Conclusion::ResilientlyStabilizable;
        v.sufficiency = Sufficiency::SufficientOnly;
        return v;
    }
    v.conclusion = Conclusion::NotDetermined;
    return v;
}

}  // namespace resilnet
