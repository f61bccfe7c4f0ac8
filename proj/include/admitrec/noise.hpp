#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "admitrec/fields.hpp"

namespace admitrec {

struct NoiseSpec {
    double delta = 0.0;        ///< relative amplitude, std of the raw noise is delta * |H|_inf
    int smoothing_radius = 0;  ///< Gaussian std dev in voxels; 0 disables smoothing
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> gaussian_kernel(int radius) {
    const int half = 3 * radius;
    std::vector<double> w(std::size_t(2 * half + 1));
    double sum = 0.0;
    for (int t = -half; t <= half; ++t) {
        const double v = std::exp(-0.5 * double(t * t) / double(radius * radius));
        w[std::size_t(t + half)] = v;
        sum += v;
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Separable smoothing; the kernel is renormalized where it is clipped by the grid.
inline void smooth_axis(VectorFieldC& f, int axis, const std::vector<double>& w) {
    const Grid3& g = f.grid;
    const int half = int(w.size() / 2);
    const auto s = g.stride(axis);
    VectorFieldC out(g);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const int c = g.coords(idx)[axis];
        Vec3c acc = Vec3c::Zero();
        double norm = 0.0;
        for (int t = -half; t <= half; ++t) {
            if (c + t < 0 || c + t >= g.dims[axis]) continue;
            const double wt = w[std::size_t(t + half)];
            acc += wt * f[std::size_t(std::ptrdiff_t(idx) + t * s)];
            norm += wt;
        }
        out[idx] = acc / norm;
    }
    f = std::move(out);
}

}  // namespace detail

/// Adds circular complex Gaussian noise (E|n|^2 = (delta |H|_inf)^2 per component), smoothed
/// by a Gaussian of the given radius. Only the noise is smoothed, so delta = 0 is an exact no-op.
/// `stream` selects an independent sequence for the same seed (one per field).
inline VectorFieldC add_noise(const VectorFieldC& h, const NoiseSpec& spec, std::uint64_t stream = 0) {
    if (spec.delta < 0.0 || spec.smoothing_radius < 0)
        throw Error(Errc::invalid_argument, "noise delta and smoothing radius must be non-negative");
    if (spec.delta == 0.0) return h;
    const double sd = spec.delta * max_abs(h) / std::sqrt(2.0);
    std::seed_seq seq{std::uint32_t(spec.seed), std::uint32_t(spec.seed >> 32), std::uint32_t(stream),
                      std::uint32_t(stream >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorFieldC noise(h.grid);
    for (auto& v : noise.values)
        for (int c = 0; c < 3; ++c) {
            const double re = normal(rng);
            const double im = normal(rng);
            v[c] = cplx(sd * re, sd * im);
        }
    if (spec.smoothing_radius > 0) {
        const auto w = detail::gaussian_kernel(spec.smoothing_radius);
        for (int a = 0; a < 3; ++a) detail::smooth_axis(noise, a, w);
    }
    VectorFieldC out = h;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += noise[i];
    return out;
}

}  // namespace admitrec
