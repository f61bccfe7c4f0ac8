#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "admitrec/core.hpp"

namespace admitrec {

/// Voxel counts below this leave no room for a 4th-order stencil plus margin.
inline constexpr int min_grid_dim = 5;
inline constexpr std::size_t default_voxel_budget = std::size_t{1} << 24;

/// Uniform rectilinear voxel grid. Linear index runs with x3 fastest, x1 slowest.
struct Grid3 {
    std::array<int, 3> dims{};
    std::array<double, 3> spacing{};
    std::array<double, 3> origin{};

    std::size_t size() const {
        return std::size_t(dims[0]) * std::size_t(dims[1]) * std::size_t(dims[2]);
    }

    std::size_t index(int i, int j, int k) const {
        return (std::size_t(i) * std::size_t(dims[1]) + std::size_t(j)) * std::size_t(dims[2]) +
               std::size_t(k);
    }
    std::size_t index(const std::array<int, 3>& c) const { return index(c[0], c[1], c[2]); }

    std::array<int, 3> coords(std::size_t idx) const {
        const int k = int(idx % std::size_t(dims[2]));
        idx /= std::size_t(dims[2]);
        const int j = int(idx % std::size_t(dims[1]));
        const int i = int(idx / std::size_t(dims[1]));
        return {i, j, k};
    }

    /// Stride of the linear index along an axis.
    std::ptrdiff_t stride(int axis) const {
        switch (axis) {
            case 0: return std::ptrdiff_t(dims[1]) * dims[2];
            case 1: return dims[2];
            default: return 1;
        }
    }

    Vec3 position(int i, int j, int k) const {
        return {origin[0] + i * spacing[0], origin[1] + j * spacing[1], origin[2] + k * spacing[2]};
    }
    Vec3 position(std::size_t idx) const {
        const auto c = coords(idx);
        return position(c[0], c[1], c[2]);
    }

    friend bool operator==(const Grid3&, const Grid3&) = default;
};

inline Grid3 create_grid(std::array<int, 3> dims, std::array<double, 3> spacing,
                         std::array<double, 3> origin = {0.0, 0.0, 0.0},
                         std::size_t voxel_budget = default_voxel_budget) {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < min_grid_dim)
            throw Error(Errc::dimension_too_small,
                        "axis " + std::to_string(a) + " has " + std::to_string(dims[a]) +
                            " voxels, need at least " + std::to_string(min_grid_dim));
        if (!(spacing[a] > 0.0))
            throw Error(Errc::invalid_argument, "spacing must be positive");
    }
    Grid3 g{dims, spacing, origin};
    if (g.size() > voxel_budget)
        throw Error(Errc::voxel_budget_exceeded,
                    std::to_string(g.size()) + " voxels exceed budget " + std::to_string(voxel_budget));
    return g;
}

/// n^3 voxels covering the closed unit cube.
inline Grid3 unit_cube_grid(int n, std::size_t voxel_budget = default_voxel_budget) {
    const double h = n > 1 ? 1.0 / (n - 1) : 1.0;
    return create_grid({n, n, n}, {h, h, h}, {0.0, 0.0, 0.0}, voxel_budget);
}

inline void require_same_grid(const Grid3& a, const Grid3& b, const char* what) {
    if (!(a == b)) throw Error(Errc::grid_mismatch, what);
}

/// Per-voxel validity flags. Pipelines only ever shrink masks.
struct Mask {
    Grid3 grid;
    std::vector<std::uint8_t> flags;
    std::string provenance;

    Mask() = default;
    explicit Mask(const Grid3& g, bool value = true, std::string why = {})
        : grid(g), flags(g.size(), value ? 1 : 0), provenance(std::move(why)) {}

    bool operator[](std::size_t i) const { return flags[i] != 0; }
    void set(std::size_t i, bool v) { flags[i] = v ? 1 : 0; }

    std::size_t count() const {
        return std::size_t(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
    }
    bool empty() const { return count() == 0; }

    double fraction() const { return flags.empty() ? 0.0 : double(count()) / double(flags.size()); }
};

inline Mask intersect(const Mask& a, const Mask& b) {
    require_same_grid(a.grid, b.grid, "mask intersection");
    Mask out(a.grid, false);
    for (std::size_t i = 0; i < a.flags.size(); ++i) out.flags[i] = a.flags[i] & b.flags[i];
    if (a.provenance.empty()) out.provenance = b.provenance;
    else if (b.provenance.empty() || b.provenance == a.provenance) out.provenance = a.provenance;
    else out.provenance = a.provenance + "; " + b.provenance;
    return out;
}

/// True exactly for voxels at index distance >= margin from every face.
inline Mask interior_mask(const Grid3& g, int margin) {
    if (margin < 0) throw Error(Errc::invalid_argument, "negative margin");
    for (int a = 0; a < 3; ++a)
        if (2 * margin >= g.dims[a])
            throw Error(Errc::empty_interior, "margin " + std::to_string(margin) +
                                                  " consumes axis " + std::to_string(a));
    Mask m(g, false, "interior margin " + std::to_string(margin));
    for (int i = margin; i < g.dims[0] - margin; ++i)
        for (int j = margin; j < g.dims[1] - margin; ++j)
            for (int k = margin; k < g.dims[2] - margin; ++k) m.flags[g.index(i, j, k)] = 1;
    return m;
}

/// Keeps a voxel only if every voxel within `radius` steps along `axis` is in-grid and set.
inline Mask erode_along(const Mask& m, int axis, int radius) {
    const Grid3& g = m.grid;
    Mask out(g, false, m.provenance);
    const auto s = g.stride(axis);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        if (!m[idx]) continue;
        const int c = g.coords(idx)[axis];
        if (c < radius || c + radius >= g.dims[axis]) continue;
        bool ok = true;
        for (int t = 1; t <= radius && ok; ++t)
            ok = m[std::size_t(std::ptrdiff_t(idx) + t * s)] && m[std::size_t(std::ptrdiff_t(idx) - t * s)];
        out.flags[idx] = ok ? 1 : 0;
    }
    return out;
}

/// Erosion by the axis-aligned cross of the given radius (the footprint of grad/curl/div).
inline Mask erode_cross(const Mask& m, int radius) {
    Mask out = intersect(erode_along(m, 0, radius), erode_along(m, 1, radius));
    out = intersect(out, erode_along(m, 2, radius));
    out.provenance = m.provenance;
    return out;
}

}  // namespace admitrec
