#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "admitrec/core.hpp"

namespace admitrec {

using Vec6c = Eigen::Matrix<cplx, 6, 1>;
using Mat6c = Eigen::Matrix<cplx, 6, 6>;

/// tr(A^* B), conjugate-linear in the first slot.
inline cplx frobenius_inner(const Mat3c& a, const Mat3c& b) { return (a.adjoint() * b).trace(); }

inline double frobenius_norm(const Mat3c& a) { return std::sqrt(std::max(0.0, frobenius_inner(a, a).real())); }

inline Mat3c sym_part(const Mat3c& a) { return 0.5 * (a + a.transpose()); }

/// Natural basis of S3(C): E11, E22, E33, then E12+E21, E13+E31, E23+E32.
inline const std::array<Mat3c, 6>& sym_basis() {
    static const std::array<Mat3c, 6> basis = [] {
        std::array<Mat3c, 6> w;
        for (auto& m : w) m.setZero();
        w[0](0, 0) = w[1](1, 1) = w[2](2, 2) = 1.0;
        w[3](0, 1) = w[3](1, 0) = 1.0;
        w[4](0, 2) = w[4](2, 0) = 1.0;
        w[5](1, 2) = w[5](2, 1) = 1.0;
        return w;
    }();
    return basis;
}

/// Coordinates of a symmetric matrix in sym_basis().
inline Vec6c sym_coords(const Mat3c& s) {
    Vec6c g;
    g << s(0, 0), s(1, 1), s(2, 2), s(0, 1), s(0, 2), s(1, 2);
    return g;
}

inline Mat3c from_sym_coords(const Vec6c& g) {
    Mat3c s;
    s << g[0], g[3], g[4], g[3], g[1], g[5], g[4], g[5], g[2];
    return s;
}

/// Rotation generators: Omega_j v = e_j x v.
inline const std::array<Mat3, 3>& antisym_basis() {
    static const std::array<Mat3, 3> basis = [] {
        std::array<Mat3, 3> om;
        om[0] << 0, 0, 0, 0, 0, -1, 0, 1, 0;
        om[1] << 0, 0, 1, 0, 0, 0, -1, 0, 0;
        om[2] << 0, -1, 0, 1, 0, 0, 0, 0, 0;
        return om;
    }();
    return basis;
}

/// Matrix of the cross product: skew(v) w = v x w.
inline Mat3c skew(const Vec3c& v) {
    Mat3c m;
    m << 0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Exterior algebra on R^3. An l-form is stored by coefficients on the basis
// e^{a1}^...^e^{al}, a1 < ... < al, enumerated by bitmask subsets of {0,1,2}
// in increasing mask order.

struct FormR3 {
    int degree = 0;
    std::vector<cplx> coeffs;
};

namespace detail {

inline std::vector<unsigned> subsets_of_degree(int l) {
    std::vector<unsigned> out;
    for (unsigned m = 0; m < 8; ++m)
        if (std::popcount(m) == l) out.push_back(m);
    return out;
}

// Sign of the permutation listing the indices of `first` then those of `second`.
inline int shuffle_sign(unsigned first, unsigned second) {
    int inversions = 0;
    for (int a = 0; a < 3; ++a)
        if (first & (1u << a))
            for (int b = 0; b < a; ++b)
                if (second & (1u << b)) ++inversions;
    return inversions % 2 ? -1 : 1;
}

}  // namespace detail

inline FormR3 make_form(int degree) {
    return {degree, std::vector<cplx>(detail::subsets_of_degree(degree).size())};
}

/// Hodge star: e^alpha -> sign * e^beta with (alpha, beta) a positively oriented basis.
inline FormR3 hodge_star(const FormR3& eta) {
    const auto src = detail::subsets_of_degree(eta.degree);
    const auto dst = detail::subsets_of_degree(3 - eta.degree);
    FormR3 out = make_form(3 - eta.degree);
    for (std::size_t s = 0; s < src.size(); ++s) {
        const unsigned comp = 7u & ~src[s];
        const auto d = std::size_t(std::find(dst.begin(), dst.end(), comp) - dst.begin());
        out.coeffs[d] += double(detail::shuffle_sign(src[s], comp)) * eta.coeffs[s];
    }
    return out;
}

/// Evaluates a 2-form on (e_p, e_q) as the antisymmetric matrix A(p,q).
inline Mat3c two_form_matrix(const FormR3& omega) {
    const auto idx = detail::subsets_of_degree(2);
    Mat3c a = Mat3c::Zero();
    for (std::size_t s = 0; s < idx.size(); ++s) {
        int p = -1, q = -1;
        for (int b = 0; b < 3; ++b)
            if (idx[s] & (1u << b)) (p < 0 ? p : q) = b;
        a(p, q) += omega.coeffs[s];
        a(q, p) -= omega.coeffs[s];
    }
    return a;
}

inline FormR3 one_form(const Vec3c& v) {
    FormR3 f = make_form(1);
    // degree-1 subsets in mask order: {0}, {1}, {2}
    for (int c = 0; c < 3; ++c) f.coeffs[std::size_t(c)] = v[c];
    return f;
}

/// A(p,q) = (*V)(e_p, e_q): A(1,2) = V3, A(2,3) = V1, A(1,3) = -V2 (1-based).
inline Mat3c hodge_star_vector(const Vec3c& v) {
    Mat3c a = Mat3c::Zero();
    a(0, 1) = v[2];
    a(1, 2) = v[0];
    a(0, 2) = -v[1];
    a(1, 0) = -v[2];
    a(2, 1) = -v[0];
    a(2, 0) = v[1];
    return a;
}

/// Inverse of hodge_star_vector on antisymmetric matrices.
inline Vec3c hodge_star_matrix(const Mat3c& a) { return {a(1, 2), -a(0, 2), a(0, 1)}; }

/// Checks ** = (-1)^{l(3-l)} on the basis l-forms; the sign is +1 in R^3.
inline bool hodge_involution_check(int l, double tol = 1e-14) {
    if (l < 0 || l > 3) throw Error(Errc::invalid_argument, "form degree must be in [0, 3]");
    const double sign = (l * (3 - l)) % 2 ? -1.0 : 1.0;
    const auto n = detail::subsets_of_degree(l).size();
    for (std::size_t b = 0; b < n; ++b) {
        FormR3 e = make_form(l);
        e.coeffs[b] = 1.0;
        const FormR3 ee = hodge_star(hodge_star(e));
        for (std::size_t c = 0; c < n; ++c)
            if (std::abs(ee.coeffs[c] - sign * e.coeffs[c]) > tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

struct GramSchmidtResult {
    std::vector<Mat3c> ortho;
    int rank = 0;
    /// coeffs[p][r]: ortho[p] = sum_r coeffs[p][r] * generators[r].
    std::vector<std::vector<cplx>> coeffs;
    /// Generator index that produced each ortho element.
    std::vector<std::size_t> pivots;
};

/// Modified Gram-Schmidt with one re-orthogonalization pass, under frobenius_inner.
/// A generator is dropped when its residual norm is <= tol * (its norm). With `pivot`,
/// the next element is built from the remaining generator with the largest relative
/// residual instead of the next one in order (better conditioned selection).
inline GramSchmidtResult gram_schmidt(std::span<const Mat3c> generators, double tol = 1e-8, bool pivot = false) {
    if (!(tol > 0.0)) throw Error(Errc::invalid_argument, "gram_schmidt tolerance must be positive");
    if (generators.empty()) throw Error(Errc::invalid_argument, "gram_schmidt needs at least one generator");
    GramSchmidtResult out;
    const std::size_t n = generators.size();

    auto residual = [&](std::size_t r, std::vector<cplx>& c) {
        Mat3c v = generators[r];
        c.assign(n, 0.0);
        c[r] = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t p = 0; p < out.ortho.size(); ++p) {
                const cplx proj = frobenius_inner(out.ortho[p], v);
                v -= proj * out.ortho[p];
                for (std::size_t t = 0; t < n; ++t) c[t] -= proj * out.coeffs[p][t];
            }
        return v;
    };
    auto accept = [&](std::size_t r, const Mat3c& v, std::vector<cplx> c) {
        const double norm = frobenius_norm(v);
        for (auto& x : c) x /= norm;
        out.ortho.push_back(v / norm);
        out.coeffs.push_back(std::move(c));
        out.pivots.push_back(r);
    };

    std::vector<double> norm0(n);
    for (std::size_t r = 0; r < n; ++r) norm0[r] = frobenius_norm(generators[r]);

    if (!pivot) {
        std::vector<cplx> c;
        for (std::size_t r = 0; r < n; ++r) {
            if (norm0[r] == 0.0) continue;
            Mat3c v = residual(r, c);
            if (frobenius_norm(v) <= tol * norm0[r]) continue;
            accept(r, v, c);
        }
    } else {
        std::vector<bool> used(n, false);
        while (out.ortho.size() < n) {
            std::size_t best = n;
            double best_rel = tol;
            Mat3c best_v;
            std::vector<cplx> best_c, c;
            for (std::size_t r = 0; r < n; ++r) {
                if (used[r] || norm0[r] == 0.0) continue;
                Mat3c v = residual(r, c);
                const double rel = frobenius_norm(v) / norm0[r];
                if (rel > best_rel) {
                    best_rel = rel;
                    best = r;
                    best_v = v;
                    best_c = c;
                }
            }
            if (best == n) break;
            used[best] = true;
            accept(best, best_v, std::move(best_c));
        }
    }
    out.rank = int(out.ortho.size());
    return out;
}

// ---------------------------------------------------------------------------

struct EigDecomposition {
    Mat3c q;          ///< columns beta_j with beta_j . beta_j = 1 (bilinear)
    Vec3c eigvals;    ///< k_j
};

/// Factors S = Q diag(k) Q^T with Q^T Q = I for complex symmetric S.
///
/// Eigenpairs come from a standard eigensolver and are normalized bilinearly.
/// Ordering: ascending real part, ties by descending imaginary part. Each column
/// is signed so its first largest-modulus entry has non-negative real part.
/// Exact scalar matrices return Q = I.
inline EigDecomposition complex_orthogonal_diagonalize(const Mat3c& s, double tol = 1e-6) {
    const double scale = std::max(1.0, max_abs(s));
    if (max_abs(s - s.transpose()) > 1e-12 * scale)
        throw Error(Errc::invalid_argument, "matrix is not symmetric");

    const cplx mean = s.trace() / 3.0;
    if (max_abs(s - mean * Mat3c::Identity()) == 0.0)
        return {Mat3c::Identity(), Vec3c::Constant(mean)};

    Eigen::ComplexEigenSolver<Mat3c> solver(s, true);
    if (solver.info() != Eigen::Success)
        throw Error(Errc::near_degenerate_spectrum, "eigensolver did not converge");

    std::array<int, 3> order{0, 1, 2};
    const Vec3c ev = solver.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::abs(ev[a].real() - ev[b].real()) > 1e-12 * scale) return ev[a].real() < ev[b].real();
        return ev[a].imag() > ev[b].imag();
    });

    EigDecomposition out;
    for (int c = 0; c < 3; ++c) {
        Vec3c v = solver.eigenvectors().col(order[std::size_t(c)]);
        v /= v.norm();
        const cplx vv = bdot(v, v);
        if (std::abs(vv) <= tol)
            throw Error(Errc::isotropic_eigenvector,
                        "eigenvector with |v.v| = " + std::to_string(std::abs(vv)) +
                            "; not complex-orthogonally diagonalizable within tolerance");
        v /= std::sqrt(vv);
        int lead = 0;
        for (int r = 1; r < 3; ++r)
            if (std::abs(v[r]) > std::abs(v[lead]) * (1.0 + 1e-12)) lead = r;
        if (v[lead].real() < 0.0) v = -v;
        out.q.col(c) = v;
        out.eigvals[c] = ev[order[std::size_t(c)]];
    }
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            if (std::abs(out.eigvals[a] - out.eigvals[b]) <= tol * scale)
                throw Error(Errc::near_degenerate_spectrum,
                            "eigenvalue gap below tolerance; not complex-orthogonally diagonalizable");
    if (max_abs(out.q.transpose() * out.q - Mat3c::Identity()) > 1e-10)
        throw Error(Errc::near_degenerate_spectrum, "Q^T Q deviates from identity");
    return out;
}

// ---------------------------------------------------------------------------

struct EllipticityReport {
    bool ok = false;
    /// min/max eigenvalue of Re(gamma), then of Im(gamma)/omega.
    std::array<double, 4> margins{};
    std::string failure;
};

/// Uniform ellipticity: both real symmetric parts have spectra inside [1/kappa, kappa].
inline EllipticityReport ellipticity_check(const Mat3c& gamma, double kappa, std::optional<double> omega = {}) {
    if (!(kappa >= 1.0)) throw Error(Errc::invalid_argument, "kappa must be >= 1");
    const double w = omega.value_or(1.0);
    if (!(w > 0.0)) throw Error(Errc::invalid_argument, "omega must be positive");
    const Mat3 sigma = 0.5 * (gamma.real() + gamma.real().transpose());
    const Mat3 eps = 0.5 * (gamma.imag() + gamma.imag().transpose()) / w;
    Eigen::SelfAdjointEigenSolver<Mat3> es(sigma, Eigen::EigenvaluesOnly), ee(eps, Eigen::EigenvaluesOnly);
    EllipticityReport r;
    r.margins = {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff(), ee.eigenvalues().minCoeff(),
                 ee.eigenvalues().maxCoeff()};
    const double lo = 1.0 / kappa;
    const char* names[] = {"min eigenvalue of Re(gamma)", "max eigenvalue of Re(gamma)",
                           "min eigenvalue of Im(gamma)/omega", "max eigenvalue of Im(gamma)/omega"};
    for (int i = 0; i < 4; ++i) {
        const double m = r.margins[std::size_t(i)];
        if (m < lo || m > kappa) {
            if (!r.failure.empty()) r.failure += "; ";
            r.failure += std::string(names[i]) + " = " + std::to_string(m) + " outside [" + std::to_string(lo) +
                         ", " + std::to_string(kappa) + "]";
        }
    }
    r.ok = r.failure.empty();
    return r;
}

}  // namespace admitrec
