#pragma once

// Explicit algebraic reconstruction of a complex symmetric admittivity tensor from
// J = 3 + m >= 6 internal magnetic fields.
//
// Per voxel:
//   Y = [curl H_1, curl H_2, curl H_3],  lambda^k = Y^{-1} curl H_{3+k}  (Cramer's rule),
//   Z_k = [grad lambda^k_1, grad lambda^k_2, grad lambda^k_3],
//   V_k = H_{3+k} - sum_i lambda^k_i H_i,   M_k = (i/2) omega mu0 * star(V_k),
// and gamma^{-1} satisfies, for every rotation generator Omega and every k,
//   gamma^{-1} : (Omega Z_k Y^T)^sym = tr(Omega M_k^T).
// Here star(V) is the antisymmetric matrix A(p,q) = (*V)(e_p, e_q); with this arrangement
// the constant-tensor round trip returns gamma0 itself. The 3m x 6 system in the
// coordinates of gamma^{-1} over the natural basis of S3(C) is solved per voxel.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "admitrec/diffops.hpp"
#include "admitrec/fields.hpp"
#include "admitrec/parallel.hpp"
#include "admitrec/plane_wave.hpp"
#include "admitrec/tensor_algebra.hpp"

namespace admitrec {

enum class SolverMode { least_squares, cramer6 };

inline std::string_view solver_mode_name(SolverMode m) {
    return m == SolverMode::cramer6 ? "cramer6" : "least_squares";
}

inline SolverMode parse_solver_mode(std::string_view s) {
    if (s == "least_squares") return SolverMode::least_squares;
    if (s == "cramer6") return SolverMode::cramer6;
    throw Error(Errc::invalid_argument, "unknown solver mode '" + std::string(s) + "'");
}

struct ReconConfig {
    FDConfig fd;
    double detY_rel_threshold = 1e-6;
    double w_cond_threshold = 1e8;
    SolverMode solver_mode = SolverMode::least_squares;
    double omega = 1.0;
    double mu0 = 1.0;
    double rank_tol = 1e-8;

    void validate() const {
        fd.validate();
        if (!(detY_rel_threshold > 0.0) || !(w_cond_threshold > 0.0) || !(rank_tol > 0.0))
            throw Error(Errc::invalid_argument, "thresholds must be positive");
        if (!(omega > 0.0) || !(mu0 > 0.0)) throw Error(Errc::invalid_argument, "omega and mu0 must be positive");
    }
};

struct YData {
    MatrixFieldC y;  ///< columns curl H_1..3
    ScalarFieldC det_y;
    Mask mask;
    double max_abs_det = 0.0;
};

struct LambdaData {
    std::vector<VectorFieldC> lambda;  ///< lambda[k][i] = lambda^k_i
    std::vector<MatrixFieldC> z;       ///< z[k].col(i) = grad lambda^k_i
    Mask mask;
};

struct ReconReport {
    Mask valid_mask;
    double min_abs_det_y = 0.0;
    double worst_cond_w = 0.0;
    ScalarFieldC cond_field;  ///< real-valued; +inf where the system is rank deficient
    std::size_t voxels = 0;
    std::size_t full_rank_voxels = 0;  ///< among voxels where the system was assembled
    std::size_t assembled_voxels = 0;
    std::map<std::string, std::size_t> rejected;
};

// ---------------------------------------------------------------------------

/// Y and det Y from given curl columns; mask keeps |det Y| > threshold * max |det Y|.
inline YData y_from_columns(const VectorFieldC& y1, const VectorFieldC& y2, const VectorFieldC& y3,
                            const Mask& in, const ReconConfig& cfg) {
    const Grid3& g = y1.grid;
    require_same_grid(g, y2.grid, "Y columns");
    require_same_grid(g, y3.grid, "Y columns");
    YData out;
    out.y = MatrixFieldC(g);
    out.det_y = ScalarFieldC(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!in[i]) continue;
        out.y[i].col(0) = y1[i];
        out.y[i].col(1) = y2[i];
        out.y[i].col(2) = y3[i];
        out.det_y[i] = out.y[i].determinant();
        out.max_abs_det = std::max(out.max_abs_det, std::abs(out.det_y[i]));
    }
    out.mask = Mask(g, false, "det Y below threshold");
    const double cut = cfg.detY_rel_threshold * out.max_abs_det;
    for (std::size_t i = 0; i < g.size(); ++i)
        out.mask.set(i, in[i] && out.max_abs_det > 0.0 && std::abs(out.det_y[i]) > cut);
    return out;
}

/// `trusted` optionally restricts which H samples may enter a stencil.
inline YData compute_Y(const VectorFieldC& h1, const VectorFieldC& h2, const VectorFieldC& h3,
                       const ReconConfig& cfg, const Mask* trusted = nullptr) {
    cfg.validate();
    require_same_grid(h1.grid, h2.grid, "H fields");
    require_same_grid(h1.grid, h3.grid, "H fields");
    auto c1 = curl(h1, cfg.fd, trusted), c2 = curl(h2, cfg.fd, trusted), c3 = curl(h3, cfg.fd, trusted);
    return y_from_columns(c1.field, c2.field, c3.field, c1.mask, cfg);
}

/// lambda^k_i = det(Y with column i replaced by Yk) / det Y.
inline Vec3c cramer3(const Mat3c& y, const cplx& det, const Vec3c& yk) {
    Vec3c l;
    for (int i = 0; i < 3; ++i) {
        Mat3c r = y;
        r.col(i) = yk;
        l[i] = r.determinant() / det;
    }
    return l;
}

/// lambda from extra curls, then Z by finite differences.
inline LambdaData lambda_from_curls(const YData& yd, std::span<const VectorFieldC> extra_curls, const Mask& in,
                                    const ReconConfig& cfg) {
    const Grid3& g = yd.y.grid;
    Mask base = intersect(yd.mask, in);
    LambdaData out;
    out.mask = Mask(g, true);
    for (const auto& yk : extra_curls) {
        require_same_grid(g, yk.grid, "extra curl fields");
        VectorFieldC lam(g);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (base[i]) lam[i] = cramer3(yd.y[i], yd.det_y[i], yk[i]);
        MatrixFieldC z(g);
        for (int c = 0; c < 3; ++c) {
            auto grad = gradient(component(lam, c), cfg.fd, &base);
            for (std::size_t i = 0; i < g.size(); ++i) z[i].col(c) = grad.field[i];
            out.mask = intersect(out.mask, grad.mask);
        }
        out.lambda.push_back(std::move(lam));
        out.z.push_back(std::move(z));
    }
    if (extra_curls.empty()) out.mask = base;
    out.mask.provenance = "det Y threshold and gradient stencil";
    return out;
}

inline LambdaData compute_lambda(std::span<const VectorFieldC> h, const YData& yd, const ReconConfig& cfg,
                                 const Mask* trusted = nullptr) {
    cfg.validate();
    if (h.size() < 4) throw Error(Errc::too_few_fields, "need at least one field beyond the first three");
    std::vector<VectorFieldC> curls;
    Mask in = yd.mask;
    for (std::size_t j = 3; j < h.size(); ++j) {
        require_same_grid(yd.y.grid, h[j].grid, "H fields");
        auto c = curl(h[j], cfg.fd, trusted);
        in = intersect(in, c.mask);
        curls.push_back(std::move(c.field));
    }
    auto out = lambda_from_curls(yd, curls, in, cfg);
    if (out.mask.empty()) throw Error(Errc::all_masked, "no voxel survives det Y thresholding and stencils");
    return out;
}

/// M_k = (i/2) omega mu0 star(H_{3+k} - sum_i lambda^k_i H_i), on the lambda mask.
inline std::vector<MatrixFieldC> compute_M(std::span<const VectorFieldC> h, const LambdaData& ld,
                                           const ReconConfig& cfg) {
    if (h.size() != 3 + ld.lambda.size())
        throw Error(Errc::invalid_argument, "field count does not match lambda count");
    const cplx scale = 0.5 * I * cfg.omega * cfg.mu0;
    std::vector<MatrixFieldC> out;
    for (std::size_t k = 0; k < ld.lambda.size(); ++k) {
        MatrixFieldC m(h[0].grid, Symmetry::antisymmetric);
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (!ld.mask[i]) continue;
            const Vec3c& l = ld.lambda[k][i];
            const Vec3c v = h[3 + k][i] - l[0] * h[0][i] - l[1] * h[1][i] - l[2] * h[2][i];
            m[i] = scale * hodge_star_vector(v);
        }
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------

using SystemMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, 6>;

struct VoxelSystem {
    std::vector<Mat3c> generators;  ///< (Omega_j Z_k Y^T)^sym, row order k-major
    SystemMatrix a;                 ///< a(r, q) = w_q : generators[r]
    Eigen::VectorXcd b;             ///< tr(Omega_j M_k^T)
};

inline VoxelSystem build_voxel_system(const Mat3c& y, std::span<const Mat3c> z, std::span<const Mat3c> m) {
    const auto& om = antisym_basis();
    const auto& w = sym_basis();
    VoxelSystem s;
    const Eigen::Index rows = Eigen::Index(3 * z.size());
    s.a.resize(rows, 6);
    s.b.resize(rows);
    Eigen::Index r = 0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        const Mat3c zy = z[k] * y.transpose();
        for (int j = 0; j < 3; ++j, ++r) {
            const Mat3c omega = om[std::size_t(j)].cast<cplx>();
            Mat3c gen = sym_part(omega * zy);
            for (int q = 0; q < 6; ++q) s.a(r, q) = colon(w[std::size_t(q)], gen);
            s.b[r] = colon(omega, m[k]);
            s.generators.push_back(std::move(gen));
        }
    }
    return s;
}

/// Singular values of the voxel system (descending, padded with zeros to 6).
inline Eigen::Matrix<double, 6, 1> system_singular_values(const SystemMatrix& a) {
    Eigen::Matrix<double, 6, 1> s = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    const auto& sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size() && i < 6; ++i) s[i] = sv[i];
    return s;
}

inline double condition_number(const Eigen::Matrix<double, 6, 1>& s) {
    if (s[5] <= 0.0) return std::numeric_limits<double>::infinity();
    return s[0] / s[5];
}

inline int numerical_rank(const Eigen::Matrix<double, 6, 1>& s, double tol) {
    int r = 0;
    for (int i = 0; i < 6; ++i)
        if (s[i] > tol * s[0]) ++r;
    return s[0] > 0.0 ? r : 0;
}

/// Least-squares solve for the coordinates of gamma^{-1}.
inline Vec6c solve_least_squares(const VoxelSystem& s) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(s.b);
}

/// Six Gram-Schmidt directions of the generators with right sides carried along, then
/// Cramer's rule on the 6 x 6 system. Empty when the generators do not span S3(C).
/// The directions are taken in pivoted order; plain order picks nearly dependent rows
/// as soon as the data carry discretization error.
inline std::optional<Vec6c> solve_cramer6(const VoxelSystem& s, double tol, double* six_row_cond = nullptr) {
    const auto gs = gram_schmidt(s.generators, tol, true);
    if (gs.rank < 6) return std::nullopt;
    const auto& w = sym_basis();
    Mat6c a;
    Vec6c b;
    for (int p = 0; p < 6; ++p) {
        for (int q = 0; q < 6; ++q) a(p, q) = colon(w[std::size_t(q)], gs.ortho[std::size_t(p)]);
        cplx acc = 0.0;
        for (std::size_t r = 0; r < s.generators.size(); ++r) acc += gs.coeffs[std::size_t(p)][r] * s.b[Eigen::Index(r)];
        b[p] = acc;
    }
    if (six_row_cond) {
        Eigen::JacobiSVD<Mat6c> svd(a);
        const auto& sv = svd.singularValues();
        *six_row_cond = sv[5] > 0.0 ? sv[0] / sv[5] : std::numeric_limits<double>::infinity();
    }
    const cplx det = a.determinant();
    if (det == cplx(0.0)) return std::nullopt;
    Vec6c g;
    for (int q = 0; q < 6; ++q) {
        Mat6c r = a;
        r.col(q) = b;
        g[q] = r.determinant() / det;
    }
    return g;
}

struct SolveOutput {
    SymTensorFieldC gamma;
    Mask mask;
    ScalarFieldC cond;
    double worst_cond = 0.0;
    std::size_t full_rank = 0;
    std::size_t rejected_condition = 0;
    std::size_t rejected_rank = 0;
    std::size_t rejected_singular = 0;
};

inline SolveOutput assemble_and_solve(const MatrixFieldC& y, std::span<const MatrixFieldC> z,
                                      std::span<const MatrixFieldC> m, const Mask& in, const ReconConfig& cfg) {
    cfg.validate();
    if (z.size() != m.size()) throw Error(Errc::invalid_argument, "Z and M counts differ");
    if (z.size() < 2) throw Error(Errc::too_few_fields, "need m >= 2 additional fields (>= 6 equations)");
    const Grid3& g = y.grid;
    if (in.empty()) throw Error(Errc::all_masked, "empty input mask");

    SolveOutput out;
    out.gamma = SymTensorFieldC(g, Symmetry::symmetric);
    out.mask = Mask(g, false, "system condition / rank / invertibility");
    out.cond = ScalarFieldC(g);
    enum Outcome : std::uint8_t { skip, ok, bad_cond, bad_rank, singular };
    std::vector<std::uint8_t> outcome(g.size(), skip);
    std::vector<std::uint8_t> full_rank(g.size(), 0);

    parallel_for(g.size(), [&](std::size_t i) {
        if (!in[i]) return;
        std::vector<Mat3c> zk(z.size()), mk(m.size());
        for (std::size_t k = 0; k < z.size(); ++k) {
            zk[k] = z[k][i];
            mk[k] = m[k][i];
        }
        const auto sys = build_voxel_system(y[i], zk, mk);
        const auto sv = system_singular_values(sys.a);
        const double cond = condition_number(sv);
        out.cond[i] = cond;
        full_rank[i] = numerical_rank(sv, cfg.rank_tol) == 6;
        if (!(cond <= cfg.w_cond_threshold)) {
            outcome[i] = bad_cond;
            return;
        }
        Vec6c coords;
        if (cfg.solver_mode == SolverMode::least_squares) {
            coords = solve_least_squares(sys);
        } else {
            double six_cond = 0.0;
            auto c = solve_cramer6(sys, cfg.rank_tol, &six_cond);
            if (!c) {
                outcome[i] = bad_rank;
                return;
            }
            if (!(six_cond <= cfg.w_cond_threshold)) {
                outcome[i] = bad_cond;
                return;
            }
            coords = *c;
        }
        const Mat3c inv_gamma = from_sym_coords(coords);
        Eigen::FullPivLU<Mat3c> lu(inv_gamma);
        const double scale = max_abs(inv_gamma);
        if (!lu.isInvertible() || std::abs(lu.determinant()) <= 1e-14 * scale * scale * scale) {
            outcome[i] = singular;
            return;
        }
        out.gamma[i] = sym_part(lu.inverse());
        outcome[i] = ok;
    });

    for (std::size_t i = 0; i < g.size(); ++i) {
        if (outcome[i] == skip) continue;
        out.full_rank += full_rank[i];
        const double c = out.cond[i].real();
        if (std::isfinite(c)) out.worst_cond = std::max(out.worst_cond, c);
        else out.worst_cond = std::numeric_limits<double>::infinity();
        switch (outcome[i]) {
            case ok: out.mask.set(i, true); break;
            case bad_cond: ++out.rejected_condition; break;
            case bad_rank: ++out.rejected_rank; break;
            case singular: ++out.rejected_singular; break;
            default: break;
        }
    }
    return out;
}

/// Hypothesis checks without solving: per-voxel singular values of the 3m x 6 system.
inline ReconReport diagnostics(const YData& yd, const LambdaData& ld, const ReconConfig& cfg) {
    cfg.validate();
    const Grid3& g = yd.y.grid;
    ReconReport r;
    r.voxels = g.size();
    r.cond_field = ScalarFieldC(g, cplx(std::numeric_limits<double>::infinity()));
    r.valid_mask = Mask(g, false, "full-rank subdomain");
    r.min_abs_det_y = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (yd.mask[i]) r.min_abs_det_y = std::min(r.min_abs_det_y, std::abs(yd.det_y[i]));
    if (!std::isfinite(r.min_abs_det_y)) r.min_abs_det_y = 0.0;

    const std::size_t m = ld.z.size();
    std::vector<std::uint8_t> rank_ok(g.size(), 0);
    parallel_for(g.size(), [&](std::size_t i) {
        if (!ld.mask[i]) return;
        std::vector<Mat3c> zk(m), mk(m, Mat3c::Zero());
        for (std::size_t k = 0; k < m; ++k) zk[k] = ld.z[k][i];
        const auto sys = build_voxel_system(yd.y[i], zk, mk);
        const auto sv = system_singular_values(sys.a);
        const double cond = condition_number(sv);
        r.cond_field[i] = cond;
        rank_ok[i] = numerical_rank(sv, cfg.rank_tol) == 6 && cond <= cfg.w_cond_threshold;
    });
    std::size_t rejected_cond = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!ld.mask[i]) continue;
        ++r.assembled_voxels;
        const double c = r.cond_field[i].real();
        r.worst_cond_w = std::max(r.worst_cond_w, c);
        if (rank_ok[i]) {
            ++r.full_rank_voxels;
            r.valid_mask.set(i, true);
        } else {
            ++rejected_cond;
        }
    }
    const std::size_t stencil = interior_mask(g, 2 * cfg.fd.margin()).count();
    r.rejected["stencil"] = g.size() - stencil;
    r.rejected["det_y"] = stencil >= ld.mask.count() ? stencil - ld.mask.count() : 0;
    r.rejected["condition"] = rejected_cond;
    return r;
}

// ---------------------------------------------------------------------------

/// Discrete W^{s,inf} norm of gamma_hat - gamma_ref: max over voxels, entries and all
/// central-difference derivatives of order <= s. The mask erodes with each derivative.
inline double error_norms(const SymTensorFieldC& gamma_hat, const SymTensorFieldC& gamma_ref, const Mask& mask,
                          int s, const FDConfig& fd) {
    if (s < 0 || s > 3) throw Error(Errc::invalid_argument, "derivative order s must be in [0, 3]");
    require_same_grid(gamma_hat.grid, gamma_ref.grid, "error_norms fields");
    require_same_grid(gamma_hat.grid, mask.grid, "error_norms mask");
    Field<Mat3c> diff(gamma_hat.grid);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = gamma_hat[i] - gamma_ref[i];

    double worst = 0.0;
    auto measure = [&](const Field<Mat3c>& f, const Mask& m) {
        if (m.empty()) throw Error(Errc::mask_too_small, "mask vanishes for derivative order " + std::to_string(s));
        for (std::size_t i = 0; i < f.size(); ++i)
            if (m[i]) worst = std::max(worst, max_abs(f[i]));
    };
    // Multi-indices as non-decreasing axis sequences.
    auto recurse = [&](auto&& self, const Field<Mat3c>& f, const Mask& m, int depth, int min_axis) -> void {
        measure(f, m);
        if (depth == s) return;
        for (int a = min_axis; a < 3; ++a) {
            Mask eroded = erode_along(m, a, fd.margin());
            if (eroded.empty())
                throw Error(Errc::mask_too_small, "mask vanishes for derivative order " + std::to_string(s));
            auto d = partial(f, a, fd, &m);
            self(self, d.field, d.mask, depth + 1, a);
        }
    };
    recurse(recurse, diff, mask, 0, 0);
    return worst;
}

// ---------------------------------------------------------------------------

struct ReconResult {
    SymTensorFieldC gamma;
    ReconReport report;
    std::vector<double> errors;  ///< errors[s] for s = 0..max_s when a reference is given
};

/// Full pipeline from measured H fields (numerical derivatives).
inline ReconResult reconstruct(std::span<const VectorFieldC> h, const SymTensorFieldC* gamma_ref,
                               const ReconConfig& cfg, int max_s = 0, const Mask* trusted = nullptr) {
    cfg.validate();
    if (h.size() < 6)
        throw Error(Errc::too_few_fields, "got " + std::to_string(h.size()) + " magnetic fields, need at least 6");
    for (const auto& f : h) require_same_grid(h[0].grid, f.grid, "all H fields must share one grid");

    const auto yd = compute_Y(h[0], h[1], h[2], cfg, trusted);
    if (yd.mask.empty()) throw Error(Errc::all_masked, "det Y vanishes everywhere");
    const auto ld = compute_lambda(h, yd, cfg, trusted);
    const auto m = compute_M(h, ld, cfg);

    ReconResult out;
    out.report = diagnostics(yd, ld, cfg);
    auto solved = assemble_and_solve(yd.y, ld.z, m, ld.mask, cfg);
    out.report.valid_mask = solved.mask;
    out.report.worst_cond_w = solved.worst_cond;
    out.report.cond_field = solved.cond;
    out.report.rejected["condition"] = solved.rejected_condition;
    out.report.rejected["rank"] = solved.rejected_rank;
    out.report.rejected["singular_inverse"] = solved.rejected_singular;
    out.gamma = std::move(solved.gamma);
    if (out.report.valid_mask.empty()) throw Error(Errc::all_masked, "no voxel passed the solve stage");
    if (gamma_ref)
        for (int s = 0; s <= max_s; ++s) out.errors.push_back(error_norms(out.gamma, *gamma_ref, out.report.valid_mask, s, cfg.fd));
    return out;
}

// ---------------------------------------------------------------------------

struct ReconInputs {
    YData y;
    LambdaData lambda;
    std::vector<MatrixFieldC> m;
};

/// Closed-form Y, lambda and Z for the plane-wave frame; M from the sampled H fields.
/// Nothing here is differentiated numerically.
inline ReconInputs frame_recon_inputs(const SolutionFrame& f, const Grid3& g, const ReconConfig& cfg) {
    ReconInputs in;
    std::array<VectorFieldC, 3> ycols;
    for (int j = 0; j < 3; ++j) ycols[std::size_t(j)] = sample(g, [&](const Vec3& x) { return f.y_field(j, x); });
    in.y = y_from_columns(ycols[0], ycols[1], ycols[2], Mask(g, true), cfg);

    in.lambda.mask = in.y.mask;
    for (int k = 0; k < 3; ++k) {
        VectorFieldC lam(g);
        MatrixFieldC z(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            lam[i] = Vec3c::Zero();
            lam[i][k] = f.lambda(k, g.position(i));
            z[i].col(k) = f.lambda_grad[std::size_t(k)];
        }
        in.lambda.lambda.push_back(std::move(lam));
        in.lambda.z.push_back(std::move(z));
    }
    const auto h = frame_h_fields(f, g);
    in.m = compute_M(h, in.lambda, cfg);
    return in;
}

}  // namespace admitrec
