// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit status is the number of failures.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "admitrec/admitrec.hpp"
#include "admitrec_cli.hpp"

using namespace admitrec;

namespace {

Mat3c anisotropic_gamma() { return cli::anisotropic_example(); }

SymTensorFieldC constant(const Grid3& g, const Mat3c& m) { return cli::constant_tensor(g, m); }

double masked_rel_error(const SymTensorFieldC& a, const Mat3c& truth, const Mask& m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (m[i]) worst = std::max(worst, max_abs(Mat3c(a[i] - truth)));
    return worst / max_abs(truth);
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        den += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return num / den;
}

cplx manufactured(const Vec3& x) {
    return cplx(2.0 + 0.5 * std::sin(2 * M_PI * x[0]), 1.0 + 0.3 * std::cos(2 * M_PI * x[1]));
}

Vec3c manufactured_grad(const Vec3& x) {
    return {M_PI * std::cos(2 * M_PI * x[0]), cplx(0.0, -0.6 * M_PI * std::sin(2 * M_PI * x[1])), 0.0};
}

struct Check {
    bool ok = true;
    std::ostringstream detail;
    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << " [failed: " << what << "]";
        }
    }
};

// --- criteria ---------------------------------------------------------------

void constant_round_trip(Check& c) {
    const auto g = unit_cube_grid(16);
    for (const Mat3c& gamma0 : {Mat3c(Mat3c::Identity()), anisotropic_gamma()}) {
        ReconConfig cfg;
        const auto in = frame_recon_inputs(plane_wave_frame(gamma0), g, cfg);
        const auto out = assemble_and_solve(in.y.y, in.lambda.z, in.m, in.lambda.mask, cfg);
        const double e = masked_rel_error(out.gamma, gamma0, out.mask);
        c.detail << " rel_err=" << e << " valid=" << out.mask.count() << "/" << g.size();
        c.expect(out.mask.count() == g.size(), "every voxel valid");
        c.expect(e <= 1e-10, "relative error <= 1e-10");
    }
}

void fd_convergence(Check& c) {
    const Mat3c gamma0 = anisotropic_gamma();
    std::vector<double> err;
    for (int n : {16, 32}) {
        const auto g = unit_cube_grid(n);
        const auto h = frame_h_fields(plane_wave_frame(gamma0), g);
        const auto truth = constant(g, gamma0);
        err.push_back(reconstruct(h, &truth, ReconConfig{}).errors.at(0));
    }
    const double ratio = err[0] / err[1];
    c.detail << " err16=" << err[0] << " err32=" << err[1] << " ratio=" << ratio;
    c.expect(std::abs(ratio - 4.0) <= 0.8, "ratio 4 +- 20%");
}

void hypothesis_check(Check& c) {
    const auto g = unit_cube_grid(16);
    auto h = frame_h_fields(plane_wave_frame(anisotropic_gamma()), g);
    const ReconConfig cfg;
    const auto yd = compute_Y(h[0], h[1], h[2], cfg);
    const auto ld = compute_lambda(h, yd, cfg);
    const auto r = diagnostics(yd, ld, cfg);
    const std::size_t interior = interior_mask(g, 2 * cfg.fd.margin()).count();
    const double frac = double(r.full_rank_voxels) / double(interior);
    c.detail << " rank6_fraction=" << frac << " min|detY|=" << r.min_abs_det_y;
    c.expect(frac == 1.0, "100% full rank");
    c.expect(r.min_abs_det_y > 0.0, "min |det Y| > 0");
    h.resize(4);
    const auto ld1 = compute_lambda(h, yd, cfg);
    const auto r1 = diagnostics(yd, ld1, cfg);
    const double frac1 = double(r1.full_rank_voxels) / double(interior);
    c.detail << " m1_fraction=" << frac1;
    c.expect(r1.full_rank_voxels == 0, "m = 1 gives 0%");
}

void stability_scaling(Check& c) {
    nlohmann::json cfg = {{"grid", 16}, {"seed", 1}};
    cfg["sweep"] = {{"deltas", {1e-4, 1e-3, 1e-2}}, {"grids", {16}}, {"s", {0}}};
    const auto rows = cli::run_sweep(cfg);
    std::vector<double> d, e;
    for (const auto& r : rows) {
        d.push_back(r.delta);
        e.push_back(r.error);
    }
    const double s = slope(d, e);
    c.detail << " delta_slope=" << s;
    c.expect(std::abs(s - 1.0) <= 0.15, "slope 1 +- 0.15");

    nlohmann::json hc = {{"seed", 1}};
    hc["sweep"] = {{"deltas", {1e-4}}, {"grids", {16, 32}}, {"s", {0}}, {"realizations", 4}};
    const auto hr = cli::run_sweep(hc);
    const double ratio = hr[1].error / hr[0].error;
    const double expected = std::pow(hr[0].h / hr[1].h, 2.0);
    c.detail << " h_ratio=" << ratio << " expected=" << expected;
    c.expect(std::abs(ratio / expected - 1.0) <= 0.3, "error ~ h^-2 within 30%");
}

void cgo_invariants(Check& c) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ua(-10, 10), uc(1, 100), uk(0, 1);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double a = ua(rng), cc = uc(rng);
        const double k = uk(rng) * std::sqrt(cc * cc + a * a / 4) * 0.999;
        const auto p = cgo_parameters(a, cc, k, 1 + t % 3);
        const double scale = std::max(1.0, cc * cc + a * a);
        for (const auto& [z, e] : {std::pair{p.zeta1, p.eta1}, std::pair{p.zeta2, p.eta2}}) {
            worst = std::max(worst, std::abs(bdot(z, z) - cplx(k * k)) / scale);
            worst = std::max(worst, std::abs(bdot(z, e)) / std::sqrt(scale));
        }
    }
    c.detail << " worst_invariant=" << worst;
    c.expect(worst <= 1e-10, "invariants to 1e-10");
    std::vector<double> cs, dz, de;
    for (double cc : {1e1, 1e2, 1e3, 1e4}) {
        const auto p = cgo_parameters(1.0, cc, 1.0, 1);
        cs.push_back(cc);
        dz.push_back((p.zeta1 / p.zeta1.norm() - p.zeta0).norm());
        de.push_back((p.eta1 - p.eta0).norm());
    }
    const double sz = slope(cs, dz), se = slope(cs, de);
    c.detail << " zeta_exponent=" << sz << " eta_exponent=" << se;
    c.expect(std::abs(sz + 1.0) <= 0.2 && std::abs(se + 1.0) <= 0.2, "decay exponents -1 +- 0.2");
}

void isotropic_pipeline(Check& c) {
    // Manufactured beta = -grad gamma / gamma integrated back to gamma.
    std::vector<double> err;
    for (int n : {17, 33}) {
        const auto g = unit_cube_grid(n);
        VectorFieldC beta(g);
        for (std::size_t i = 0; i < g.size(); ++i) beta[i] = -manufactured_grad(g.position(i)) / manufactured(g.position(i));
        IsoReconConfig cfg;
        cfg.anchor_value = manufactured(Vec3::Zero());
        const auto r = integrate_admittivity(beta, Mask(g, true), cfg);
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            worst = std::max(worst, std::abs(r.gamma[i] - manufactured(g.position(i))));
        err.push_back(worst);
    }
    const double ratio = err[0] / err[1];
    c.detail << " beta_err17=" << err[0] << " ratio=" << ratio;
    c.expect(std::abs(ratio / 4.0 - 1.0) <= 0.3, "manufactured ratio 4 +- 30%");

    // Forward-solver data, constant scalar gamma.
    const int n = 16;
    const auto g = unit_cube_grid(n);
    const cplx gamma_c(2.0, 1.0);
    const ScalarFieldC gamma(g, gamma_c);
    std::vector<CgoParams> ps;
    for (int j = 1; j <= 3; ++j) ps.push_back(cgo_parameters_k2(1.0, 2.0, -I * gamma_c, j));
    double residual = 0.0;
    const auto h = cgo_h_fields(gamma, 1.0, 1.0, ps, &residual);
    IsoReconConfig cfg;
    cfg.anchor = {n / 2, n / 2, n / 2};
    cfg.anchor_value = gamma_c;
    const Mask trusted = interior_mask(g, 1);
    const auto r = reconstruct_iso(h, ps, cfg, &trusted);
    double vartheta = 0.0, scale = 0.0, rel = 0.0;
    for (const auto& t : r.transport)
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!t.mask[i]) continue;
            vartheta = std::max(vartheta, std::abs(t.vartheta[i]));
            scale = std::max(scale, max_abs(t.theta[i]) * std::abs(gamma_c));
        }
    for (std::size_t i = 0; i < g.size(); ++i)
        if (r.mask[i]) rel = std::max(rel, std::abs(r.gamma[i] - gamma_c) / std::abs(gamma_c));
    const double hh = g.spacing[0] * g.spacing[0];
    c.detail << " solver_residual=" << residual << " rel_vartheta=" << vartheta / scale << " h^2=" << hh
             << " gamma_rel_err=" << rel << " valid=" << r.mask.count();
    c.expect(vartheta / scale <= hh, "relative vartheta <= h^2");
    c.expect(r.mask.count() > 0 && rel <= 0.01, "gamma within 1%");
}

void exact_identities(Check& c) {
    c.expect(hodge_involution_check(1) && hodge_involution_check(2), "star star = id on 1- and 2-forms");
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto g = unit_cube_grid(11);
    ScalarFieldC f(g);
    VectorFieldC w(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        f[i] = cplx(nd(rng), nd(rng));
        w[i] = Vec3c(cplx(nd(rng), nd(rng)), cplx(nd(rng), nd(rng)), cplx(nd(rng), nd(rng)));
    }
    for (int order : {2, 4}) {
        FDConfig fd;
        fd.order = order;
        const auto gr = gradient(f, fd);
        const auto cg = curl(gr.field, fd, &gr.mask);
        const auto cw = curl(w, fd);
        const auto dc = divergence(cw.field, fd, &cw.mask);
        double a = 0, as = 0, b = 0, bs = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (gr.mask[i]) as = std::max(as, max_abs(gr.field[i]));
            if (cg.mask[i]) a = std::max(a, max_abs(cg.field[i]));
            if (cw.mask[i]) bs = std::max(bs, max_abs(cw.field[i]));
            if (dc.mask[i]) b = std::max(b, std::abs(dc.field[i]));
        }
        const double ra = a * g.spacing[0] / as, rb = b * g.spacing[0] / bs;
        c.detail << " order" << order << ":curl_grad=" << ra << ",div_curl=" << rb;
        c.expect(ra <= 1e-12 && rb <= 1e-12, "curl grad and div curl vanish");
    }
    // Gram-Schmidt on random complex symmetric generators.
    std::vector<Mat3c> gen;
    for (int k = 0; k < 8; ++k) {
        Mat3c m;
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) m(r, s) = cplx(nd(rng), nd(rng));
        gen.push_back(sym_part(m));
    }
    const auto gs = gram_schmidt(gen);
    double ortho = 0.0;
    for (std::size_t p = 0; p < gs.ortho.size(); ++p)
        for (std::size_t q = 0; q < gs.ortho.size(); ++q)
            ortho = std::max(ortho, std::abs(frobenius_inner(gs.ortho[p], gs.ortho[q]) - (p == q ? 1.0 : 0.0)));
    c.detail << " gs_rank=" << gs.rank << " gs_ortho=" << ortho;
    c.expect(gs.rank == 6 && ortho <= 1e-12, "Gram-Schmidt orthonormal, rank 6");
    // Complex-orthogonal diagonalization round trip.
    double diag = 0.0;
    for (int t = 0; t < 50; ++t) {
        Mat3c m;
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) m(r, s) = cplx(nd(rng), nd(rng));
        const Mat3c s = sym_part(m);
        const auto e = complex_orthogonal_diagonalize(s);
        const Mat3c back = e.q * e.eigvals.asDiagonal() * e.q.transpose();
        diag = std::max(diag, max_abs(Mat3c(back - s)) / max_abs(s));
        diag = std::max(diag, max_abs(Mat3c(e.q.transpose() * e.q - Mat3c::Identity())));
    }
    c.detail << " diag_roundtrip=" << diag;
    c.expect(diag <= 1e-10, "diagonalization round trip");
}

void solver_cross_check(Check& c) {
    const auto g = unit_cube_grid(12);
    ReconConfig cfg;
    const auto in = frame_recon_inputs(plane_wave_frame(anisotropic_gamma()), g, cfg);
    const auto ls = assemble_and_solve(in.y.y, in.lambda.z, in.m, in.lambda.mask, cfg);
    cfg.solver_mode = SolverMode::cramer6;
    const auto c6 = assemble_and_solve(in.y.y, in.lambda.z, in.m, in.lambda.mask, cfg);
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!ls.mask[i] || !c6.mask[i]) continue;
        std::vector<Mat3c> z, m;
        for (int k = 0; k < 3; ++k) {
            z.push_back(in.lambda.z[std::size_t(k)][i]);
            m.push_back(in.m[std::size_t(k)][i]);
        }
        double six_cond = 0.0;
        if (!solve_cramer6(build_voxel_system(in.y.y[i], z, m), cfg.rank_tol, &six_cond) || six_cond >= 1e3) continue;
        ++compared;
        worst = std::max(worst, max_abs(Mat3c(ls.gamma[i] - c6.gamma[i])));
    }
    c.detail << " compared=" << compared << " max_diff=" << worst;
    c.expect(compared > g.size() / 2, "most voxels well conditioned");
    c.expect(worst <= 1e-8, "modes agree to 1e-8");
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria = {
        {"constant-tensor round trip", constant_round_trip},
        {"finite-difference convergence order", fd_convergence},
        {"frame and full-rank hypotheses", hypothesis_check},
        {"two-derivative stability scaling", stability_scaling},
        {"CGO parameter invariants", cgo_invariants},
        {"isotropic transport pipeline", isotropic_pipeline},
        {"exact discrete identities", exact_identities},
        {"solver cross-check", solver_cross_check},
    };
    int failures = 0, index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %d %s (%.1fs):%s\n", c.ok ? "PASS" : "FAIL", index, name, secs, c.detail.str().c_str());
        std::fflush(stdout);
        failures += !c.ok;
    }
    return failures;
}
