#pragma once

// Command layer of the admitrec executable. Every command takes the merged JSON config
// (file + flag overrides) and an output directory, so tests can drive it in-process.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "admitrec/admitrec.hpp"

namespace admitrec::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

inline json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_failure, "cannot open config '" + path + "'");
    try {
        json j = json::parse(in);
        if (!j.is_object()) throw Error(Errc::invalid_argument, "config must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw Error(Errc::invalid_argument, std::string("config parse error: ") + e.what());
    }
}

/// Reads key from node with a default; type errors become invalid_argument.
template <class T>
T value_or(const json& node, const char* key, T fallback) {
    if (!node.is_object() || !node.contains(key) || node.at(key).is_null()) return fallback;
    try {
        return node.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_argument, std::string("config key '") + key + "': " + e.what());
    }
}

inline const json& section(const json& cfg, const char* name) {
    static const json empty = json::object();
    if (cfg.contains(name)) {
        if (!cfg.at(name).is_object()) throw Error(Errc::invalid_argument, std::string("'") + name + "' must be an object");
        return cfg.at(name);
    }
    return empty;
}

inline cplx parse_complex(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw Error(Errc::invalid_argument, "complex values are numbers or [re, im] pairs");
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

/// The anisotropic example tensor used throughout the documentation and tests.
inline Mat3c anisotropic_example() {
    Mat3 re, im;
    re << 2, 0.3, 0, 0.3, 1.5, 0.2, 0, 0.2, 3;
    im << 1, 0.1, 0, 0.1, 2, 0, 0, 0, 1.2;
    return re.cast<cplx>() + I * im.cast<cplx>();
}

inline Mat3c parse_matrix(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "identity") return Mat3c::Identity();
        if (s == "anisotropic") return anisotropic_example();
        throw Error(Errc::invalid_argument, "unknown tensor preset '" + s + "' (identity | anisotropic)");
    }
    if (j.is_array() && j.size() == 3) {
        Mat3c m;
        for (int r = 0; r < 3; ++r) {
            if (!j[std::size_t(r)].is_array() || j[std::size_t(r)].size() != 3)
                throw Error(Errc::invalid_argument, "tensor rows must have 3 entries");
            for (int c = 0; c < 3; ++c) m(r, c) = parse_complex(j[std::size_t(r)][std::size_t(c)]);
        }
        return m;
    }
    throw Error(Errc::invalid_argument, "tensor must be a preset name or a 3x3 array");
}

inline json matrix_to_json(const Mat3c& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) {
        json row = json::array();
        for (int c = 0; c < 3; ++c) row.push_back(complex_to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

inline Grid3 grid_from_config(const json& g) {
    if (g.is_number_integer()) return unit_cube_grid(g.get<int>());
    if (g.is_object()) {
        const auto dims = value_or<std::array<int, 3>>(g, "dims", {0, 0, 0});
        const auto spacing = value_or<std::array<double, 3>>(g, "spacing", {1.0, 1.0, 1.0});
        const auto origin = value_or<std::array<double, 3>>(g, "origin", {0.0, 0.0, 0.0});
        return create_grid(dims, spacing, origin);
    }
    throw Error(Errc::invalid_argument, "'grid' must be an integer or {dims, spacing, origin}");
}

inline ReconConfig recon_config(const json& cfg) {
    const json& r = section(cfg, "reconstruct");
    ReconConfig c;
    c.fd.order = value_or(cfg, "fd_order", 2);
    c.omega = value_or(cfg, "omega", 1.0);
    c.mu0 = value_or(cfg, "mu0", 1.0);
    c.detY_rel_threshold = value_or(r, "detY_rel_threshold", c.detY_rel_threshold);
    c.w_cond_threshold = value_or(r, "w_cond_threshold", c.w_cond_threshold);
    c.rank_tol = value_or(r, "rank_tol", c.rank_tol);
    c.solver_mode = parse_solver_mode(value_or<std::string>(r, "solver_mode", "least_squares"));
    c.validate();
    return c;
}

inline std::uint64_t seed_of(const json& cfg) { return value_or<std::uint64_t>(cfg, "seed", 0); }

// ---------------------------------------------------------------------------
// Shared helpers

inline std::vector<VectorFieldC> h_fields(const Container& c, int limit = 0) {
    std::vector<VectorFieldC> out;
    for (int j = 1;; ++j) {
        const std::string name = "H" + std::to_string(j);
        if (!c.has(name) || (limit > 0 && j > limit)) break;
        out.push_back(c.get<VectorFieldC>(name));
    }
    return out;
}

inline std::optional<Mask> trusted_mask(const Container& c) {
    const int layer = value_or(c.metadata, "boundary_layer", 0);
    if (layer <= 0) return std::nullopt;
    return interior_mask(c.grid, layer);
}

inline void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

/// Smooth first-quadrant isotropic profile on the grid's bounding box.
inline ScalarFieldC smooth_isotropic_profile(const Grid3& g) {
    return sample(g, [&](const Vec3& x) {
        Vec3 t;
        for (int a = 0; a < 3; ++a)
            t[a] = (x[a] - g.origin[std::size_t(a)]) / (g.spacing[std::size_t(a)] * (g.dims[a] - 1));
        return cplx(2.0 + 0.3 * std::sin(std::numbers::pi * t[0]) * std::sin(std::numbers::pi * t[1]),
                    1.0 + 0.2 * t[2] * t[2]);
    });
}

inline SymTensorFieldC constant_tensor(const Grid3& g, const Mat3c& m) {
    SymTensorFieldC f(g, Symmetry::symmetric);
    for (auto& v : f.values) v = m;
    return f;
}

inline std::vector<CgoParams> cgo_from_metadata(const json& meta) {
    if (!meta.contains("cgo")) throw Error(Errc::invalid_argument, "input has no CGO metadata (generate with boundary 'cgo')");
    const json& c = meta.at("cgo");
    std::vector<CgoParams> out;
    for (int j = 1; j <= 3; ++j)
        out.push_back(cgo_parameters_k2(c.at("a").get<double>(), c.at("c").get<double>(), parse_complex(c.at("k2")), j));
    return out;
}

// ---------------------------------------------------------------------------
// generate

inline Container generate_data(const json& cfg, json& report) {
    const json& gen = section(cfg, "generate");
    const Grid3 g = grid_from_config(cfg.contains("grid") ? cfg.at("grid") : json(16));
    const double omega = value_or(cfg, "omega", 1.0);
    const double mu0 = value_or(cfg, "mu0", 1.0);
    const std::string mode = value_or<std::string>(gen, "mode", "frame");
    const bool include_e = value_or(gen, "include_e", false);
    NoiseSpec noise;
    noise.delta = value_or(gen, "delta", 0.0);
    noise.smoothing_radius = value_or(gen, "smoothing_radius", 0);
    noise.seed = seed_of(cfg);

    Container c;
    c.grid = g;
    c.metadata["mode"] = mode;
    c.metadata["omega"] = omega;
    c.metadata["mu0"] = mu0;
    report["mode"] = mode;

    std::vector<VectorFieldC> hs, es;
    if (mode == "frame") {
        const Mat3c gamma0 = parse_matrix(gen.contains("gamma0") ? gen.at("gamma0") : json("identity"));
        const auto frame = plane_wave_frame(gamma0, omega, mu0);
        hs = frame_h_fields(frame, g);
        if (include_e) es = frame_e_fields(frame, g);
        c.add("gamma", constant_tensor(g, gamma0));
        c.metadata["gamma0"] = matrix_to_json(gamma0);
        c.metadata["boundary_layer"] = 0;
    } else if (mode == "fdfd") {
        if (g.size() > fdfd_voxel_budget)
            throw Error(Errc::budget_exceeded, "fdfd data generation is limited to 24^3 voxels");
        const std::string profile = value_or<std::string>(gen, "gamma_profile", "smooth_isotropic");
        SymTensorFieldC gamma;
        bool isotropic = true;
        if (profile == "smooth_isotropic") {
            gamma = isotropic_tensor(smooth_isotropic_profile(g));
        } else if (profile == "constant") {
            const Mat3c m = parse_matrix(gen.contains("gamma0") ? gen.at("gamma0") : json("identity"));
            gamma = constant_tensor(g, m);
            isotropic = (m - m(0, 0) * Mat3c::Identity()).norm() == 0.0;
        } else if (profile == "file") {
            const Container in = read_container(value_or<std::string>(gen, "gamma_input", ""));
            gamma = in.get<MatrixFieldC>(value_or<std::string>(gen, "gamma_field", "gamma"));
            gamma.symmetry = Symmetry::symmetric;
            if (!(gamma.grid == g)) throw Error(Errc::grid_mismatch, "gamma input grid differs from the configured grid");
            isotropic = false;
        } else {
            throw Error(Errc::invalid_argument, "unknown gamma_profile '" + profile + "'");
        }
        const Mat3c center = gamma.at(g.dims[0] / 2, g.dims[1] / 2, g.dims[2] / 2);
        const std::string boundary = value_or<std::string>(gen, "boundary", isotropic ? "cgo" : "frame");
        double worst = 0.0;
        if (boundary == "cgo") {
            const json& cg = section(gen, "cgo");
            const double a = value_or(cg, "a", 1.0), cc = value_or(cg, "c", 2.0);
            const cplx k2 = -I * omega * mu0 * center.trace() / 3.0;
            std::vector<CgoParams> ps;
            for (int j = 1; j <= 3; ++j) ps.push_back(cgo_parameters_k2(a, cc, k2, j));
            for (const auto& p : ps)
                for (int m : {1, 2}) {
                    auto r = fdfd_solve(gamma, omega, mu0, cgo_trace(p, m));
                    worst = std::max(worst, r.residual);
                    hs.push_back(std::move(r.h));
                    if (include_e) es.push_back(std::move(r.e));
                }
            c.metadata["cgo"] = {{"a", a}, {"c", cc}, {"k2", complex_to_json(k2)}};
        } else if (boundary == "frame") {
            const auto frame = plane_wave_frame(center, omega, mu0);
            for (int j = 0; j < 6; ++j) {
                auto r = fdfd_solve(gamma, omega, mu0,
                                    trace_from_function([&frame, j](const Vec3& x) { return frame.e_field(j, x); }));
                worst = std::max(worst, r.residual);
                hs.push_back(std::move(r.h));
                if (include_e) es.push_back(std::move(r.e));
            }
        } else {
            throw Error(Errc::invalid_argument, "unknown boundary '" + boundary + "' (cgo | frame)");
        }
        c.add("gamma", gamma);
        c.metadata["boundary"] = boundary;
        c.metadata["gamma_profile"] = profile;
        // Boundary nodes are extrapolated from the staggered grid; keep them out of stencils.
        c.metadata["boundary_layer"] = 1;
        c.metadata["solver_residual"] = worst;
        report["solver_residual"] = worst;
    } else {
        throw Error(Errc::invalid_argument, "unknown generate mode '" + mode + "' (frame | fdfd)");
    }

    for (std::size_t j = 0; j < hs.size(); ++j) c.add("H" + std::to_string(j + 1), add_noise(hs[j], noise, j));
    for (std::size_t j = 0; j < es.size(); ++j) c.add("E" + std::to_string(j + 1), std::move(es[j]));
    c.metadata["noise"] = {{"delta", noise.delta}, {"smoothing_radius", noise.smoothing_radius}, {"seed", noise.seed}};
    report["fields"] = hs.size() + es.size() + 1;
    report["noise"] = c.metadata["noise"];
    return c;
}

inline void cmd_generate(const json& cfg, const fs::path& out) {
    json report = {{"command", "generate"}, {"version", version()}};
    const Container c = generate_data(cfg, report);
    report["grid"] = grid_to_json(c.grid);
    write_container(out / "data.cont", c);
    write_json(out / "generate_report.json", report);
}

// ---------------------------------------------------------------------------
// reconstruct / diagnose

inline void reconstruct_aniso(const json& cfg, const Container& in, const fs::path& out, json& report) {
    const json& rc = section(cfg, "reconstruct");
    const ReconConfig rcfg = recon_config(cfg);
    const auto hs = h_fields(in, value_or(rc, "fields", 0));
    const auto trusted = trusted_mask(in);
    const int max_s = value_or(rc, "max_s", 0);
    const SymTensorFieldC* truth = in.has("gamma") ? &in.get<MatrixFieldC>("gamma") : nullptr;

    const auto res = reconstruct(hs, truth, rcfg, max_s, trusted ? &*trusted : nullptr);
    report["config"] = config_to_json(rcfg);
    report["report"] = report_to_json(res.report);
    report["fields_used"] = hs.size();
    if (truth) {
        json errs = json::object();
        for (std::size_t s = 0; s < res.errors.size(); ++s) errs["w_" + std::to_string(s) + "_inf"] = res.errors[s];
        report["errors"] = errs;
    }
    Container o;
    o.grid = in.grid;
    o.metadata = {{"kind", "anisotropic"}, {"version", version()}};
    o.add("gamma_hat", res.gamma);
    o.add("valid_mask", res.report.valid_mask);
    o.add("cond", res.report.cond_field);
    write_container(out / "gamma_hat.cont", o);
}

inline void reconstruct_isotropic(const json& cfg, const Container& in, const fs::path& out, json& report) {
    const json& rc = section(cfg, "reconstruct");
    const auto hs = h_fields(in, value_or(rc, "fields", 0));
    const auto params = cgo_from_metadata(in.metadata);
    const auto trusted = trusted_mask(in);
    const Grid3& g = in.grid;

    IsoReconConfig icfg;
    icfg.fd.order = value_or(cfg, "fd_order", 2);
    icfg.theta_cond_threshold = value_or(rc, "theta_cond_threshold", icfg.theta_cond_threshold);
    icfg.anchor = value_or<std::array<int, 3>>(rc, "anchor", {g.dims[0] / 2, g.dims[1] / 2, g.dims[2] / 2});
    const MatrixFieldC* truth = in.has("gamma") ? &in.get<MatrixFieldC>("gamma") : nullptr;
    if (rc.contains("anchor_value")) {
        icfg.anchor_value = parse_complex(rc.at("anchor_value"));
    } else if (truth) {
        icfg.anchor_value = truth->at(icfg.anchor[0], icfg.anchor[1], icfg.anchor[2])(0, 0);
    } else {
        throw Error(Errc::invalid_argument, "reconstruct.anchor_value is required when the input has no ground truth");
    }

    const auto res = reconstruct_iso(hs, params, icfg, trusted ? &*trusted : nullptr);
    report["config"] = {{"fd_order", icfg.fd.order},
                        {"theta_cond_threshold", icfg.theta_cond_threshold},
                        {"anchor", icfg.anchor},
                        {"anchor_value", complex_to_json(icfg.anchor_value)}};
    report["report"] = {{"voxels", g.size()},
                        {"valid_voxels", res.mask.count()},
                        {"valid_fraction", double(res.mask.count()) / double(g.size())},
                        {"rejected_theta_condition", res.beta.rejected},
                        {"unreconstructed_voxels", res.unreconstructed},
                        {"transport_residual", res.transport_residual}};
    if (truth) {
        double rel = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (res.mask[i]) rel = std::max(rel, std::abs(res.gamma[i] - (*truth)[i](0, 0)) / std::abs((*truth)[i](0, 0)));
        report["errors"] = {{"max_relative", rel}};
    }
    Container o;
    o.grid = g;
    o.metadata = {{"kind", "isotropic"}, {"version", version()}};
    o.add("gamma_hat", res.gamma);
    o.add("valid_mask", res.mask);
    o.add("beta", res.beta.beta);
    write_container(out / "gamma_hat.cont", o);
}

inline void cmd_reconstruct(const json& cfg, const fs::path& out) {
    const json& rc = section(cfg, "reconstruct");
    const Container in = read_container(value_or<std::string>(rc, "input", ""));
    const std::string mode = value_or<std::string>(rc, "mode", "aniso");
    json report = {{"command", "reconstruct"}, {"version", version()}, {"mode", mode}, {"grid", grid_to_json(in.grid)}};
    if (mode == "aniso") reconstruct_aniso(cfg, in, out, report);
    else if (mode == "iso") reconstruct_isotropic(cfg, in, out, report);
    else throw Error(Errc::invalid_argument, "unknown reconstruct mode '" + mode + "' (aniso | iso)");
    write_json(out / "report.json", report);
}

inline void cmd_diagnose(const json& cfg, const fs::path& out) {
    const json& dc = section(cfg, "diagnose");
    const Container in = read_container(value_or<std::string>(dc, "input", ""));
    ReconConfig rcfg = recon_config(cfg);
    const auto hs = h_fields(in, value_or(dc, "fields", 0));
    if (hs.size() < 4) throw Error(Errc::too_few_fields, "diagnostics need at least 4 magnetic fields");
    const auto trusted = trusted_mask(in);
    const Mask* tp = trusted ? &*trusted : nullptr;
    const auto yd = compute_Y(hs[0], hs[1], hs[2], rcfg, tp);
    if (yd.mask.empty()) throw Error(Errc::all_masked, "det Y vanishes everywhere");
    const auto ld = compute_lambda(hs, yd, rcfg, tp);
    const auto rep = diagnostics(yd, ld, rcfg);
    json report = {{"command", "diagnose"},
                   {"version", version()},
                   {"grid", grid_to_json(in.grid)},
                   {"fields_used", hs.size()},
                   {"config", config_to_json(rcfg)},
                   {"report", report_to_json(rep)}};
    // Fraction of the stencil interior passing the rank test.
    const std::size_t interior = interior_mask(in.grid, 2 * rcfg.fd.margin()).count();
    report["report"]["interior_voxels"] = interior;
    report["report"]["interior_pass_fraction"] = interior ? double(rep.full_rank_voxels) / double(interior) : 0.0;
    write_json(out / "report.json", report);
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
    double delta;
    double h;
    int s;
    double error;
    double valid_fraction;
};

inline std::vector<SweepRow> run_sweep(const json& cfg) {
    const json& sc = section(cfg, "sweep");
    const ReconConfig rcfg = recon_config(cfg);
    const Mat3c gamma0 = parse_matrix(sc.contains("gamma0") ? sc.at("gamma0") : json("anisotropic"));
    const auto deltas = value_or<std::vector<double>>(sc, "deltas", {0.0});
    const auto grids = value_or<std::vector<int>>(sc, "grids", {value_or(cfg, "grid", 16)});
    const auto orders = value_or<std::vector<int>>(sc, "s", {0});
    // Smoothed noise against the noise-free reconstruction isolates the noise amplification
    // from the discretization error; the comparison region is the coarsest grid's valid region
    // so that every grid is measured on the same physical subdomain.
    const int radius = value_or(sc, "smoothing_radius", 2);
    const int realizations = value_or(sc, "realizations", 1);
    const std::string reference = value_or<std::string>(sc, "reference", "noise_free");
    double eval_margin = 0.0;
    if (!sc.contains("eval_margin") || sc.at("eval_margin") == "auto") {
        for (int n : grids)
            if (n > 1) eval_margin = std::max(eval_margin, 2.0 * rcfg.fd.margin() / (n - 1));
    } else {
        eval_margin = sc.at("eval_margin").get<double>();
    }
    if (radius < 0) throw Error(Errc::invalid_argument, "sweep.smoothing_radius must be >= 0");
    if (!(eval_margin >= 0.0)) throw Error(Errc::invalid_argument, "sweep.eval_margin must be >= 0");
    if (reference != "truth" && reference != "noise_free")
        throw Error(Errc::invalid_argument, "sweep.reference must be 'truth' or 'noise_free'");
    if (realizations < 1) throw Error(Errc::invalid_argument, "sweep.realizations must be >= 1");
    if (deltas.empty() || grids.empty() || orders.empty())
        throw Error(Errc::invalid_argument, "sweep needs non-empty deltas, grids and s");
    const std::uint64_t seed = seed_of(cfg);
    const auto frame = plane_wave_frame(gamma0, rcfg.omega, rcfg.mu0);

    std::vector<SweepRow> rows;
    for (int n : grids) {
        const Grid3 g = unit_cube_grid(n);
        const auto hs = frame_h_fields(frame, g);
        const auto truth = constant_tensor(g, gamma0);
        const auto base = reconstruct(hs, nullptr, rcfg);
        const SymTensorFieldC& ref = reference == "truth" ? truth : base.gamma;
        Mask region(g, true);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Vec3 x = g.position(i);
            for (int a = 0; a < 3; ++a) {
                const double lo = g.origin[std::size_t(a)], hi = lo + g.spacing[std::size_t(a)] * (g.dims[a] - 1);
                if (x[a] < lo + eval_margin - 1e-12 || x[a] > hi - eval_margin + 1e-12) region.set(i, false);
            }
        }
        for (double delta : deltas) {
            std::vector<double> err(orders.size(), 0.0);
            double frac = 0.0;
            for (int r = 0; r < realizations; ++r) {
                const NoiseSpec ns{delta, radius, seed + std::uint64_t(r)};
                std::vector<VectorFieldC> noisy;
                for (std::size_t j = 0; j < hs.size(); ++j) noisy.push_back(add_noise(hs[j], ns, j));
                const auto res = reconstruct(noisy, nullptr, rcfg);
                Mask m = intersect(res.report.valid_mask, region);
                if (reference == "noise_free") m = intersect(m, base.report.valid_mask);
                for (std::size_t k = 0; k < orders.size(); ++k)
                    err[k] += error_norms(res.gamma, ref, m, orders[k], rcfg.fd) / realizations;
                frac += m.fraction() / realizations;
            }
            for (std::size_t k = 0; k < orders.size(); ++k)
                rows.push_back({delta, g.spacing[0], orders[k], err[k], frac});
        }
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "delta,h,s,w_s_inf_error,valid_voxel_fraction\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6e,%.10e,%d,%.10e,%.6f\n", r.delta, r.h, r.s, r.error, r.valid_fraction);
        os << buf;
    }
    return os.str();
}

inline void cmd_sweep(const json& cfg, const fs::path& out) {
    write_text_atomic(out / "sweep.csv", sweep_csv(run_sweep(cfg)));
}

// ---------------------------------------------------------------------------
// Entry point

inline json error_json(const std::string& code, const std::string& message, int exit_code) {
    return {{"error", code}, {"message", message}, {"exit_code", exit_code}};
}

/// Parses arguments, runs one command; returns the process exit code
/// (0 success, 2 configuration/precondition error, 1 internal error).
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Admittivity reconstruction from internal magnetic fields", "admitrec"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> grid, fd_order;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--grid", grid, "grid points per axis (unit cube)");
        sub->add_option("--fd-order", fd_order, "finite-difference order")->check(CLI::IsMember({2, 4}));
    };

    auto* gen = app.add_subcommand("generate", "write synthetic H fields");
    common(gen);
    std::optional<std::string> gen_mode, gamma0, profile, boundary;
    std::optional<double> delta;
    std::optional<int> radius;
    bool include_e = false;
    gen->add_option("--mode", gen_mode, "frame | fdfd");
    gen->add_option("--gamma0", gamma0, "identity | anisotropic | JSON 3x3 array");
    gen->add_option("--gamma-profile", profile, "smooth_isotropic | constant | file (fdfd)");
    gen->add_option("--boundary", boundary, "cgo | frame (fdfd)");
    gen->add_option("--delta", delta, "relative noise level");
    gen->add_option("--smoothing-radius", radius, "noise smoothing radius in voxels");
    gen->add_flag("--include-e", include_e, "also store electric fields");

    auto* rec = app.add_subcommand("reconstruct", "reconstruct the admittivity");
    common(rec);
    std::optional<std::string> input, rec_mode, solver_mode;
    std::optional<int> max_s, fields;
    rec->add_option("--input", input, "input container");
    rec->add_option("--mode", rec_mode, "aniso | iso");
    rec->add_option("--solver-mode", solver_mode, "least_squares | cramer6");
    rec->add_option("--max-s", max_s, "highest derivative order of reported error norms");
    rec->add_option("--fields", fields, "use only the first N magnetic fields");

    auto* dia = app.add_subcommand("diagnose", "check the frame and full-rank conditions");
    common(dia);
    std::optional<std::string> dia_input;
    std::optional<int> dia_fields;
    dia->add_option("--input", dia_input, "input container");
    dia->add_option("--fields", dia_fields, "use only the first N magnetic fields");

    auto* swp = app.add_subcommand("sweep", "noise / grid stability sweep");
    common(swp);
    std::vector<double> deltas;
    std::vector<int> grids;
    std::optional<std::string> reference;
    swp->add_option("--deltas", deltas, "noise levels")->delimiter(',');
    swp->add_option("--grids", grids, "grid sizes")->delimiter(',');
    std::optional<int> sweep_radius, realizations;
    std::optional<double> eval_margin;
    std::vector<int> orders;
    swp->add_option("--reference", reference, "truth | noise_free");
    swp->add_option("--smoothing-radius", sweep_radius, "noise smoothing radius in voxels");
    swp->add_option("--realizations", realizations, "noise draws averaged per row");
    swp->add_option("--eval-margin", eval_margin, "physical margin excluded from the error region");
    swp->add_option("--s", orders, "derivative orders of the error norm")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    auto fail = [&](const std::string& code, const std::string& msg, int exit_code) {
        const json j = error_json(code, msg, exit_code);
        err << j.dump() << "\n";
        try {
            fs::create_directories(out_dir);
            write_json(fs::path(out_dir) / "error.json", j);
        } catch (...) {
        }
        return exit_code;
    };

    try {
        json cfg = load_config(config_path);
        if (seed) cfg["seed"] = *seed;
        if (grid) cfg["grid"] = *grid;
        if (fd_order) cfg["fd_order"] = *fd_order;
        auto set = [&](const char* sec, const char* key, const auto& v) {
            if (v) cfg[sec][key] = *v;
        };
        set("generate", "mode", gen_mode);
        if (gamma0) {
            json v = json::parse(*gamma0, nullptr, false);
            cfg["generate"]["gamma0"] = v.is_discarded() ? json(*gamma0) : v;
        }
        set("generate", "gamma_profile", profile);
        set("generate", "boundary", boundary);
        set("generate", "delta", delta);
        set("generate", "smoothing_radius", radius);
        if (include_e) cfg["generate"]["include_e"] = true;
        set("reconstruct", "input", input);
        set("reconstruct", "mode", rec_mode);
        set("reconstruct", "solver_mode", solver_mode);
        set("reconstruct", "max_s", max_s);
        set("reconstruct", "fields", fields);
        set("diagnose", "input", dia_input);
        set("diagnose", "fields", dia_fields);
        if (!deltas.empty()) cfg["sweep"]["deltas"] = deltas;
        if (!grids.empty()) cfg["sweep"]["grids"] = grids;
        set("sweep", "reference", reference);
        set("sweep", "smoothing_radius", sweep_radius);
        set("sweep", "realizations", realizations);
        set("sweep", "eval_margin", eval_margin);
        if (!orders.empty()) cfg["sweep"]["s"] = orders;

        const fs::path outp(out_dir);
        fs::create_directories(outp);
        if (*gen) cmd_generate(cfg, outp);
        else if (*rec) cmd_reconstruct(cfg, outp);
        else if (*dia) cmd_diagnose(cfg, outp);
        else if (*swp) cmd_sweep(cfg, outp);
        return 0;
    } catch (const Error& e) {
        return fail(std::string(errc_name(e.code())), e.what(), 2);
    } catch (const json::exception& e) {
        return fail("invalid-argument", e.what(), 2);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
}

}  // namespace admitrec::cli
