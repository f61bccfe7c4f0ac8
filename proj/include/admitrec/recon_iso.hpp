#pragma once

// Isotropic pathway. For a scalar admittivity and two solutions with Y_j = curl H_j = gamma E_j,
// the relation curl curl E_1 . E_2 = curl curl E_2 . E_1 becomes the transport equation
//   theta . grad gamma + vartheta gamma = 0,
//   theta    = chi [ (Y2.grad)Y1 + (div Y1) Y2 + 2 grad_{Y2}(Y1.Y2) - (Y1.grad)Y2 - (div Y2) Y1 - 2 grad_{Y1}(Y1.Y2) ],
//   vartheta = chi ( curl curl Y2 . Y1 - curl curl Y1 . Y2 ),
// where grad_{Y2}(Y1.Y2) differentiates only the Y2 factor. Three such pairs give
// grad gamma + beta gamma = 0 with beta = Theta^{-1} vartheta (rows of Theta are theta_j),
// which is integrated as a least-squares potential for u = log gamma.

#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include "admitrec/diffops.hpp"
#include "admitrec/fdfd.hpp"
#include "admitrec/fields.hpp"
#include "admitrec/parallel.hpp"

namespace admitrec {

// ---------------------------------------------------------------------------
// Complex geometric optics directions

/// Orientation j in {1,2,3}: identity and the two cyclic axis permutations.
inline Mat3 orientation_frame(int j) {
    if (j < 1 || j > 3) throw Error(Errc::invalid_argument, "orientation index must be 1, 2 or 3");
    Mat3 p;
    if (j == 1) p.setIdentity();
    if (j == 2) p << 0, 0, 1, 1, 0, 0, 0, 1, 0;  // (v0, v1, v2) -> (v2, v0, v1)
    if (j == 3) p << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    return p;
}

struct CgoParams {
    double a = 0.0;
    double c = 1.0;
    cplx k2 = 1.0;  ///< zeta . zeta
    int orientation = 1;
    Mat3 axis_frame = Mat3::Identity();
    Vec3c zeta1, zeta2, eta1, eta2;
    Vec3c zeta0, eta0;  ///< large-c limits, rotated

    cplx k() const { return std::sqrt(k2); }

    /// chi(x) = -exp(-i (zeta1 + zeta2) . x) / (4 sqrt(2) c).
    cplx chi(const Vec3& x) const {
        return -std::exp(-I * bdot(zeta1 + zeta2, x.cast<cplx>())) / (4.0 * std::sqrt(2.0) * c);
    }
};

/// zeta_{1,2} = (a/2, +-i sqrt(c^2 + a^2/4 - k^2), +-c), eta_{1,2} = (c, 0, -+a/2) / sqrt(c^2 + a^2),
/// rotated into orientation j. k^2 may be complex (lossy background); the root is principal.
inline CgoParams cgo_parameters_k2(double a, double c, cplx k2, int j) {
    if (!std::isfinite(a) || !std::isfinite(c) || !(c > 0.0))
        throw Error(Errc::invalid_argument, "CGO parameter c must be positive and finite");
    const cplx disc = c * c + a * a / 4.0 - k2;
    if (std::abs(disc.imag()) == 0.0 && !(disc.real() > 0.0))
        throw Error(Errc::root_domain, "c^2 + a^2/4 - k^2 must be positive");
    if (disc == cplx(0.0)) throw Error(Errc::root_domain, "c^2 + a^2/4 - k^2 vanishes");
    const cplx r = std::sqrt(disc);
    CgoParams p;
    p.a = a;
    p.c = c;
    p.k2 = k2;
    p.orientation = j;
    p.axis_frame = orientation_frame(j);
    const Mat3c rot = p.axis_frame.cast<cplx>();
    const double n = std::sqrt(c * c + a * a);
    p.zeta1 = rot * Vec3c(a / 2.0, I * r, c);
    p.zeta2 = rot * Vec3c(a / 2.0, -I * r, -c);
    p.eta1 = rot * Vec3c(c / n, 0.0, -a / (2.0 * n));
    p.eta2 = rot * Vec3c(c / n, 0.0, a / (2.0 * n));
    p.zeta0 = rot * (Vec3c(0.0, I, 1.0) / std::sqrt(2.0));
    p.eta0 = rot * Vec3c(1.0, 0.0, 0.0);
    return p;
}

inline CgoParams cgo_parameters(double a, double c, double k, int j) {
    if (!std::isfinite(k)) throw Error(Errc::invalid_argument, "wavenumber must be finite");
    if (!(c * c + a * a / 4.0 > k * k)) throw Error(Errc::root_domain, "need c^2 + a^2/4 > k^2");
    return cgo_parameters_k2(a, c, cplx(k * k), j);
}

/// Tangential boundary data exp(i zeta . x) eta for the chosen member (1 or 2) of the pair.
inline EdgeTrace cgo_trace(const CgoParams& p, int member) {
    if (member != 1 && member != 2) throw Error(Errc::invalid_argument, "CGO pair member must be 1 or 2");
    const Vec3c zeta = member == 1 ? p.zeta1 : p.zeta2;
    const Vec3c eta = member == 1 ? p.eta1 : p.eta2;
    return trace_from_function([zeta, eta](const Vec3& x) -> Vec3c {
        return eta * std::exp(I * bdot(zeta, x.cast<cplx>()));
    });
}

// ---------------------------------------------------------------------------
// Transport coefficients

struct TransportCoefficients {
    VectorFieldC theta;
    ScalarFieldC vartheta;
    Mask mask;
};

inline TransportCoefficients theta_vartheta(const VectorFieldC& y1, const VectorFieldC& y2,
                                            const std::function<cplx(const Vec3&)>& chi, const FDConfig& fd,
                                            const Mask* in = nullptr) {
    fd.validate();
    require_same_grid(y1.grid, y2.grid, "transport inputs");
    const Grid3& g = y1.grid;
    for (int a = 0; a < 3; ++a)
        if (g.dims[a] <= 4 * fd.margin())
            throw Error(Errc::grid_too_small, "grid too short for the double-curl stencil");

    auto j1 = jacobian(y1, fd, in), j2 = jacobian(y2, fd, in);
    auto c1 = curl(y1, fd, in), c2 = curl(y2, fd, in);
    auto cc1 = curl(c1.field, fd, &c1.mask), cc2 = curl(c2.field, fd, &c2.mask);

    TransportCoefficients out;
    out.theta = VectorFieldC(g);
    out.vartheta = ScalarFieldC(g);
    out.mask = intersect(intersect(j1.mask, j2.mask), intersect(cc1.mask, cc2.mask));
    out.mask.provenance = "double-curl stencil";
    parallel_for(g.size(), [&](std::size_t i) {
        if (!out.mask[i]) return;
        const cplx w = chi(g.position(i));
        const Mat3c& a = j1.field[i];
        const Mat3c& b = j2.field[i];
        const Vec3c& u = y1[i];
        const Vec3c& v = y2[i];
        out.theta[i] = w * (a * v + a.trace() * v + 2.0 * (b.transpose() * u) - b * u - b.trace() * u -
                            2.0 * (a.transpose() * v));
        out.vartheta[i] = w * (bdot(cc2.field[i], u) - bdot(cc1.field[i], v));
    });
    return out;
}

inline TransportCoefficients theta_vartheta(const VectorFieldC& y1, const VectorFieldC& y2, const CgoParams& p,
                                            const FDConfig& fd, const Mask* in = nullptr) {
    return theta_vartheta(y1, y2, [&p](const Vec3& x) { return p.chi(x); }, fd, in);
}

struct BetaField {
    VectorFieldC beta;
    Mask mask;
    ScalarFieldC cond;  ///< real-valued condition number of [theta_1; theta_2; theta_3]
    std::size_t rejected = 0;
};

inline BetaField assemble_beta(std::span<const TransportCoefficients> tc, double theta_cond_threshold) {
    if (tc.size() != 3) throw Error(Errc::invalid_argument, "need exactly three (theta, vartheta) pairs");
    if (!(theta_cond_threshold > 0.0)) throw Error(Errc::invalid_argument, "theta_cond_threshold must be positive");
    const Grid3& g = tc[0].theta.grid;
    Mask in = tc[0].mask;
    for (const auto& t : tc) {
        require_same_grid(g, t.theta.grid, "transport coefficients");
        in = intersect(in, t.mask);
    }
    BetaField out;
    out.beta = VectorFieldC(g);
    out.cond = ScalarFieldC(g);
    out.mask = Mask(g, false, "theta invertibility");
    std::vector<std::uint8_t> ok(g.size(), 0);
    parallel_for(g.size(), [&](std::size_t i) {
        if (!in[i]) return;
        Mat3c th;
        Vec3c rhs;
        for (int j = 0; j < 3; ++j) {
            th.row(j) = tc[std::size_t(j)].theta[i].transpose();
            rhs[j] = tc[std::size_t(j)].vartheta[i];
        }
        Eigen::JacobiSVD<Mat3c> svd(th);
        const auto& s = svd.singularValues();
        const double cond = s[2] > 0.0 ? s[0] / s[2] : std::numeric_limits<double>::infinity();
        out.cond[i] = cond;
        if (!(cond <= theta_cond_threshold)) return;
        out.beta[i] = th.fullPivLu().solve(rhs);
        ok[i] = 1;
    });
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!in[i]) continue;
        if (ok[i]) out.mask.set(i, true);
        else ++out.rejected;
    }
    if (out.mask.empty()) throw Error(Errc::all_masked, "theta matrix ill-conditioned everywhere");
    return out;
}

// ---------------------------------------------------------------------------
// Log-integration

struct IsoReconConfig {
    FDConfig fd;
    std::array<int, 3> anchor{0, 0, 0};
    cplx anchor_value{1.0, 1.0};
    double theta_cond_threshold = 1e6;

    void validate() const {
        fd.validate();
        if (!(anchor_value.real() > 0.0) || !(anchor_value.imag() > 0.0))
            throw Error(Errc::first_quadrant, "anchor admittivity must have positive real and imaginary parts");
        if (!(theta_cond_threshold > 0.0)) throw Error(Errc::invalid_argument, "theta_cond_threshold must be positive");
    }
};

struct IntegratedAdmittivity {
    ScalarFieldC gamma;
    Mask reconstructed;  ///< the anchor's connected component
    Mask unreconstructed;  ///< masked voxels in other components
};

/// Least-squares potential: min sum over mask edges |(u_b - u_a)/h + (beta_a + beta_b)/2 . e|^2,
/// u(anchor) = log(anchor value), gamma = exp(u). Exact when beta is the edge-averaged
/// gradient of a potential (e.g. any quadratic).
inline IntegratedAdmittivity integrate_admittivity(const VectorFieldC& beta, const Mask& mask,
                                                   const IsoReconConfig& cfg) {
    cfg.validate();
    const Grid3& g = beta.grid;
    require_same_grid(g, mask.grid, "integration mask");
    for (int a = 0; a < 3; ++a)
        if (cfg.anchor[std::size_t(a)] < 0 || cfg.anchor[std::size_t(a)] >= g.dims[a])
            throw Error(Errc::invalid_argument, "anchor outside the grid");
    const std::size_t anchor = g.index(cfg.anchor[0], cfg.anchor[1], cfg.anchor[2]);
    if (!mask[anchor]) throw Error(Errc::invalid_argument, "anchor voxel is not in the valid mask");

    // Connected component of the anchor (6-neighbour).
    IntegratedAdmittivity out;
    out.gamma = ScalarFieldC(g);
    out.reconstructed = Mask(g, false, "anchor component");
    std::deque<std::size_t> queue{anchor};
    out.reconstructed.set(anchor, true);
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        const auto c = g.coords(i);
        for (int a = 0; a < 3; ++a)
            for (int d : {-1, 1}) {
                const int n = c[std::size_t(a)] + d;
                if (n < 0 || n >= g.dims[a]) continue;
                const std::size_t j = std::size_t(std::ptrdiff_t(i) + d * g.stride(a));
                if (mask[j] && !out.reconstructed[j]) {
                    out.reconstructed.set(j, true);
                    queue.push_back(j);
                }
            }
    }
    out.unreconstructed = Mask(g, false, "disconnected from anchor");
    for (std::size_t i = 0; i < g.size(); ++i) out.unreconstructed.set(i, mask[i] && !out.reconstructed[i]);

    std::vector<long> unknown(g.size(), -1);
    long n = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (out.reconstructed[i] && i != anchor) unknown[i] = n++;

    const cplx u0 = std::log(cfg.anchor_value);
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(n);
    if (n > 0) {
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
        auto add_rhs = [&](long row, cplx v) {
            rhs(row, 0) += v.real();
            rhs(row, 1) += v.imag();
        };
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!out.reconstructed[i]) continue;
            const auto c = g.coords(i);
            for (int a = 0; a < 3; ++a) {
                if (c[std::size_t(a)] + 1 >= g.dims[a]) continue;
                const std::size_t j = i + std::size_t(g.stride(a));
                if (!out.reconstructed[j]) continue;
                // target: u_j - u_i = d
                const cplx d = -0.5 * (beta[i][a] + beta[j][a]) * g.spacing[std::size_t(a)];
                const long ri = unknown[i], rj = unknown[j];
                if (ri >= 0) {
                    trip.emplace_back(ri, ri, 1.0);
                    add_rhs(ri, -d);
                }
                if (rj >= 0) {
                    trip.emplace_back(rj, rj, 1.0);
                    add_rhs(rj, d);
                }
                if (ri >= 0 && rj >= 0) {
                    trip.emplace_back(ri, rj, -1.0);
                    trip.emplace_back(rj, ri, -1.0);
                } else if (ri >= 0) {
                    add_rhs(ri, u0);  // j is the anchor
                } else {
                    add_rhs(rj, u0);
                }
            }
        }
        Eigen::SparseMatrix<double> lap(n, n);
        lap.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(lap);
        if (ldlt.info() != Eigen::Success) throw Error(Errc::singular_system, "potential system factorization failed");
        const Eigen::MatrixXd sol = ldlt.solve(rhs);
        for (long r = 0; r < n; ++r) u[r] = cplx(sol(r, 0), sol(r, 1));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i == anchor) out.gamma[i] = cfg.anchor_value;
        else if (unknown[i] >= 0) out.gamma[i] = std::exp(u[unknown[i]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

/// max over pairs and voxels of |theta . grad gamma + vartheta gamma|.
inline double transport_residual(std::span<const TransportCoefficients> tc, const ScalarFieldC& gamma,
                                 const Mask& mask, const FDConfig& fd) {
    auto grad = gradient(gamma, fd, &mask);
    double worst = 0.0;
    for (const auto& t : tc) {
        require_same_grid(gamma.grid, t.theta.grid, "transport residual");
        for (std::size_t i = 0; i < gamma.size(); ++i) {
            if (!grad.mask[i] || !t.mask[i]) continue;
            worst = std::max(worst, std::abs(bdot(t.theta[i], grad.field[i]) + t.vartheta[i] * gamma[i]));
        }
    }
    return worst;
}

struct IsoResult {
    ScalarFieldC gamma;
    Mask mask;
    BetaField beta;
    std::vector<TransportCoefficients> transport;
    std::size_t unreconstructed = 0;
    double transport_residual = 0.0;  ///< evaluated with the reconstructed gamma
};

/// h holds three pairs (H_1^j, H_2^j), j = 1..3, in order; params the matching CGO directions.
/// `in` optionally restricts which H samples are trusted (e.g. excluding an extrapolated boundary layer).
inline IsoResult reconstruct_iso(std::span<const VectorFieldC> h, std::span<const CgoParams> params,
                                 const IsoReconConfig& cfg, const Mask* in = nullptr) {
    cfg.validate();
    if (h.size() != 6) throw Error(Errc::too_few_fields, "isotropic reconstruction takes 3 pairs (6 fields)");
    if (params.size() != 3) throw Error(Errc::invalid_argument, "need CGO parameters for 3 orientations");
    for (const auto& f : h) require_same_grid(h[0].grid, f.grid, "all H fields must share one grid");

    IsoResult out;
    for (int j = 0; j < 3; ++j) {
        auto y1 = curl(h[std::size_t(2 * j)], cfg.fd, in);
        auto y2 = curl(h[std::size_t(2 * j + 1)], cfg.fd, in);
        Mask both = intersect(y1.mask, y2.mask);
        out.transport.push_back(theta_vartheta(y1.field, y2.field, params[std::size_t(j)], cfg.fd, &both));
    }
    out.beta = assemble_beta(out.transport, cfg.theta_cond_threshold);
    auto integ = integrate_admittivity(out.beta.beta, out.beta.mask, cfg);
    out.gamma = std::move(integ.gamma);
    out.mask = std::move(integ.reconstructed);
    out.unreconstructed = integ.unreconstructed.count();
    out.transport_residual = transport_residual(out.transport, out.gamma, out.mask, cfg.fd);
    return out;
}

/// Isotropic tensor field gamma(x) I.
inline SymTensorFieldC isotropic_tensor(const ScalarFieldC& s) {
    SymTensorFieldC out(s.grid, Symmetry::symmetric);
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] * Mat3c::Identity();
    return out;
}

/// Forward data for the isotropic pipeline: for each orientation, the two solutions whose
/// boundary traces are the CGO plane factors exp(i zeta_m . x) eta_m.
inline std::vector<VectorFieldC> cgo_h_fields(const ScalarFieldC& gamma, double omega, double mu0,
                                              std::span<const CgoParams> params, double* worst_residual = nullptr) {
    const auto tensor = isotropic_tensor(gamma);
    std::vector<VectorFieldC> out;
    double worst = 0.0;
    for (const auto& p : params)
        for (int m : {1, 2}) {
            auto r = fdfd_solve(tensor, omega, mu0, cgo_trace(p, m));
            worst = std::max(worst, r.residual);
            out.push_back(std::move(r.h));
        }
    if (worst_residual) *worst_residual = worst;
    return out;
}

}  // namespace admitrec
