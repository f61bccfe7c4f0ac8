#pragma once

// JSON views of reports. Non-finite numbers are written as null.

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "admitrec/recon_aniso.hpp"

#ifndef ADMITREC_VERSION
#define ADMITREC_VERSION "0.1.0"
#endif

namespace admitrec {

inline std::string version() { return ADMITREC_VERSION; }

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json config_to_json(const ReconConfig& c) {
    return {{"fd_order", c.fd.order},
            {"detY_rel_threshold", c.detY_rel_threshold},
            {"w_cond_threshold", c.w_cond_threshold},
            {"solver_mode", solver_mode_name(c.solver_mode)},
            {"omega", c.omega},
            {"mu0", c.mu0},
            {"rank_tol", c.rank_tol}};
}

inline nlohmann::json report_to_json(const ReconReport& r) {
    nlohmann::json rejected = nlohmann::json::object();
    for (const auto& [k, v] : r.rejected) rejected[k] = v;
    const std::size_t valid = r.valid_mask.count();
    return {{"voxels", r.voxels},
            {"valid_voxels", valid},
            {"valid_fraction", r.voxels ? double(valid) / double(r.voxels) : 0.0},
            {"assembled_voxels", r.assembled_voxels},
            {"full_rank_voxels", r.full_rank_voxels},
            {"min_abs_det_y", finite_or_null(r.min_abs_det_y)},
            {"worst_cond_w", finite_or_null(r.worst_cond_w)},
            {"rejected", rejected}};
}

}  // namespace admitrec
