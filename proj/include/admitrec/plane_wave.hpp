#pragma once

// Closed-form Maxwell solutions for a constant admittivity gamma0 = Q diag(k) Q^T:
//   E_j     = beta_j exp(i zeta_j . x),   zeta_1 = t_1 beta_2, zeta_2 = t_2 beta_3, zeta_3 = t_3 beta_1,
//   E_{3+k} = lambda_k E_k,               grad lambda_1,2,3 = beta_3, beta_1, beta_2,
// with t_j^2 = -i omega mu0 k_j and H = (i / (omega mu0)) curl E.

#include <array>
#include <span>
#include <vector>

#include "admitrec/fields.hpp"
#include "admitrec/tensor_algebra.hpp"

namespace admitrec {

/// Ellipticity bound applied to frame inputs; only positivity of both parts really matters here.
inline constexpr double frame_kappa_limit = 1e6;

struct SolutionFrame {
    Mat3c gamma0;
    double omega = 1.0;
    double mu0 = 1.0;
    EigDecomposition eig;
    std::array<cplx, 3> t{};
    std::array<Vec3c, 3> zeta;
    std::array<Vec3c, 3> lambda_grad;

    const Mat3c& q() const { return eig.q; }
    Vec3c beta(int j) const { return eig.q.col(j); }

    /// lambda_k(x) = grad lambda_k . x (integration constant zero).
    cplx lambda(int k, const Vec3& x) const { return bdot(lambda_grad[std::size_t(k)], x.cast<cplx>()); }

    Vec3c e_field(int j, const Vec3& x) const {
        if (j < 3) return beta(j) * std::exp(I * bdot(zeta[std::size_t(j)], x.cast<cplx>()));
        return lambda(j - 3, x) * e_field(j - 3, x);
    }

    /// H_j = (i / (omega mu0)) curl E_j in closed form.
    Vec3c h_field(int j, const Vec3& x) const {
        const cplx scale = I / (omega * mu0);
        if (j < 3) {
            const auto& z = zeta[std::size_t(j)];
            return scale * cross(I * z, beta(j)) * std::exp(I * bdot(z, x.cast<cplx>()));
        }
        const int k = j - 3;
        const Vec3c ek = e_field(k, x);
        const Vec3c curl_ek = cross(I * zeta[std::size_t(k)], ek);
        return scale * (cross(lambda_grad[std::size_t(k)], ek) + lambda(k, x) * curl_ek);
    }

    /// curl H_j = gamma0 E_j.
    Vec3c y_field(int j, const Vec3& x) const { return gamma0 * e_field(j, x); }
};

inline SolutionFrame plane_wave_frame(const Mat3c& gamma0, double omega = 1.0, double mu0 = 1.0) {
    if (!(omega > 0.0) || !(mu0 > 0.0)) throw Error(Errc::invalid_argument, "omega and mu0 must be positive");
    // Closed-form waves only need a coercive real part; a lossless (Im = 0) background is allowed.
    const auto ell = ellipticity_check(gamma0, frame_kappa_limit, omega);
    const auto& m = ell.margins;
    if (m[0] < 1.0 / frame_kappa_limit || m[1] > frame_kappa_limit || m[2] < 0.0 || m[3] > frame_kappa_limit)
        throw Error(Errc::ellipticity, ell.failure);
    SolutionFrame f;
    f.gamma0 = gamma0;
    f.omega = omega;
    f.mu0 = mu0;
    f.eig = complex_orthogonal_diagonalize(gamma0);
    for (int j = 0; j < 3; ++j) f.t[std::size_t(j)] = std::sqrt(-I * omega * mu0 * f.eig.eigvals[j]);
    for (int j = 0; j < 3; ++j) {
        f.zeta[std::size_t(j)] = f.t[std::size_t(j)] * f.beta((j + 1) % 3);
        f.lambda_grad[std::size_t(j)] = f.beta((j + 2) % 3);
    }
    return f;
}

/// Residual of (beta.zeta) zeta - (zeta.zeta) beta - i omega mu0 gamma0 beta for wave j.
inline double dispersion_residual(const SolutionFrame& f, int j) {
    const Vec3c b = f.beta(j);
    const Vec3c& z = f.zeta[std::size_t(j)];
    return max_abs(bdot(b, z) * z - bdot(z, z) * b - I * f.omega * f.mu0 * (f.gamma0 * b));
}

enum class FrameQuantity { E, H };

/// Samples the chosen quantity for solution indices (0-based, 0..5) on the grid.
inline std::vector<VectorFieldC> evaluate_frame(const SolutionFrame& f, const Grid3& g, FrameQuantity what,
                                                std::span<const int> indices) {
    std::vector<VectorFieldC> out;
    for (int j : indices) {
        if (j < 0 || j > 5) throw Error(Errc::invalid_argument, "frame solution index out of range");
        out.push_back(sample(g, [&](const Vec3& x) {
            return what == FrameQuantity::E ? f.e_field(j, x) : f.h_field(j, x);
        }));
    }
    return out;
}

inline std::vector<VectorFieldC> frame_h_fields(const SolutionFrame& f, const Grid3& g) {
    static constexpr int all[] = {0, 1, 2, 3, 4, 5};
    return evaluate_frame(f, g, FrameQuantity::H, all);
}

inline std::vector<VectorFieldC> frame_e_fields(const SolutionFrame& f, const Grid3& g) {
    static constexpr int all[] = {0, 1, 2, 3, 4, 5};
    return evaluate_frame(f, g, FrameQuantity::E, all);
}

/// Analytic det(E_1, E_2, E_3) = det Q exp(i (zeta_1 + zeta_2 + zeta_3) . x).
inline cplx frame_det_e(const SolutionFrame& f, const Vec3& x) {
    const Vec3c zs = f.zeta[0] + f.zeta[1] + f.zeta[2];
    return f.q().determinant() * std::exp(I * bdot(zs, x.cast<cplx>()));
}

}  // namespace admitrec
