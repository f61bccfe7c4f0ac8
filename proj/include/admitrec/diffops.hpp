#pragma once

// Central finite differences on collocated grids. No one-sided stencils: voxels whose
// stencil leaves the grid (or the input mask) are excluded from the output mask and
// hold zero.

#include <optional>
#include <string>

#include "admitrec/fields.hpp"
#include "admitrec/parallel.hpp"

namespace admitrec {

struct FDConfig {
    int order = 2;

    int margin() const { return order / 2; }

    void validate() const {
        if (order != 2 && order != 4)
            throw Error(Errc::invalid_argument, "finite-difference order must be 2 or 4, got " + std::to_string(order));
    }
};

template <class T>
struct Derived {
    T field;
    Mask mask;
};

namespace detail {

inline void require_stencil_fits(const Grid3& g, int margin) {
    for (int a = 0; a < 3; ++a)
        if (g.dims[a] <= 2 * margin)
            throw Error(Errc::grid_too_small, "axis " + std::to_string(a) + " too short for stencil margin " +
                                                  std::to_string(margin));
}

inline Mask full_or(const Grid3& g, const Mask* m) {
    if (!m) return Mask(g, true);
    require_same_grid(g, m->grid, "derivative input mask");
    return *m;
}

}  // namespace detail

/// d/dx_axis of any per-voxel value type. Output mask = input mask eroded along axis.
template <class T>
Derived<Field<T>> partial(const Field<T>& f, int axis, const FDConfig& cfg, const Mask* in = nullptr) {
    cfg.validate();
    detail::require_stencil_fits(f.grid, cfg.margin());
    const Grid3& g = f.grid;
    Mask mask = erode_along(detail::full_or(g, in), axis, cfg.margin());
    Field<T> out(g);
    const auto s = g.stride(axis);
    const double h = g.spacing[std::size_t(axis)];
    parallel_for(g.size(), [&](std::size_t idx) {
        if (!mask[idx]) return;
        const auto i = std::ptrdiff_t(idx);
        if (cfg.order == 2) {
            out[idx] = (f[std::size_t(i + s)] - f[std::size_t(i - s)]) * (0.5 / h);
        } else {
            out[idx] = (f[std::size_t(i - 2 * s)] - f[std::size_t(i + 2 * s)] +
                        8.0 * (f[std::size_t(i + s)] - f[std::size_t(i - s)])) *
                       (1.0 / (12.0 * h));
        }
    });
    return {std::move(out), std::move(mask)};
}

inline Derived<VectorFieldC> gradient(const ScalarFieldC& f, const FDConfig& cfg, const Mask* in = nullptr) {
    auto dx = partial(f, 0, cfg, in), dy = partial(f, 1, cfg, in), dz = partial(f, 2, cfg, in);
    VectorFieldC out(f.grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = Vec3c(dx.field[i], dy.field[i], dz.field[i]);
    Mask m = intersect(intersect(dx.mask, dy.mask), dz.mask);
    return {std::move(out), std::move(m)};
}

/// J(c, a) = d V_c / d x_a.
inline Derived<MatrixFieldC> jacobian(const VectorFieldC& v, const FDConfig& cfg, const Mask* in = nullptr) {
    MatrixFieldC out(v.grid);
    Mask m(v.grid, true);
    for (int a = 0; a < 3; ++a) {
        auto d = partial(v, a, cfg, in);
        for (std::size_t i = 0; i < out.size(); ++i) out[i].col(a) = d.field[i];
        m = intersect(m, d.mask);
    }
    return {std::move(out), std::move(m)};
}

inline Derived<VectorFieldC> curl(const VectorFieldC& v, const FDConfig& cfg, const Mask* in = nullptr) {
    auto j = jacobian(v, cfg, in);
    VectorFieldC out(v.grid);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Mat3c& d = j.field[i];
        out[i] = Vec3c(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
    }
    return {std::move(out), std::move(j.mask)};
}

inline Derived<ScalarFieldC> divergence(const VectorFieldC& v, const FDConfig& cfg, const Mask* in = nullptr) {
    auto j = jacobian(v, cfg, in);
    ScalarFieldC out(v.grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = j.field[i].trace();
    return {std::move(out), std::move(j.mask)};
}

}  // namespace admitrec
