#pragma once

// Frequency-domain curl-curl solver on a Yee-style staggered grid.
//
// Grid voxels are the primal nodes. E lives on primal edges (component along the edge),
// curl E on primal faces. For every edge not lying in a boundary face we impose
//     (C^T C E)_e + i omega mu0 (gamma E)_e = 0,
// and tangential E on boundary edges is prescribed. gamma at an edge is the mean of its two
// node tensors; off-diagonal couplings average the four neighbouring transverse edges.
// H = (i / (omega mu0)) curl E is taken on faces and moved to the nodes.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#ifdef ADMITREC_HAS_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "admitrec/fields.hpp"
#include "admitrec/tensor_algebra.hpp"

namespace admitrec {

/// Direct sparse solves are capped at this many grid voxels (24^3).
inline constexpr std::size_t fdfd_voxel_budget = 24 * 24 * 24;

/// Tangential component of E along `axis` at the midpoint of a boundary edge.
using EdgeTrace = std::function<cplx(int axis, const Vec3& midpoint)>;

/// Trace of a closed-form field.
template <class F>
EdgeTrace trace_from_function(F field) {
    return [field](int axis, const Vec3& x) { return field(x)[axis]; };
}

/// Trace from node samples: edge value is the mean of its two end nodes.
inline EdgeTrace trace_from_nodes(const VectorFieldC& e) {
    return [e](int axis, const Vec3& mid) {
        const Grid3& g = e.grid;
        std::array<int, 3> c{};
        for (int a = 0; a < 3; ++a) {
            const double t = (mid[a] - g.origin[std::size_t(a)]) / g.spacing[std::size_t(a)];
            c[std::size_t(a)] = a == axis ? int(std::floor(t + 1e-9)) : int(std::lround(t));
        }
        std::array<int, 3> d = c;
        d[std::size_t(axis)] += 1;
        return 0.5 * (e[g.index(c)][axis] + e[g.index(d)][axis]);
    };
}

struct FdfdResult {
    VectorFieldC e;
    VectorFieldC h;
    double residual = 0.0;  ///< |A x - b| / |b| of the assembled system
    std::size_t unknowns = 0;
};

namespace detail {

struct Array3 {
    std::array<int, 3> d{};
    std::vector<cplx> v;

    Array3() = default;
    explicit Array3(std::array<int, 3> dims) : d(dims), v(std::size_t(dims[0]) * dims[1] * dims[2]) {}
    std::size_t id(int i, int j, int k) const { return (std::size_t(i) * d[1] + j) * d[2] + k; }
    std::size_t id(const std::array<int, 3>& c) const { return id(c[0], c[1], c[2]); }
    cplx& operator()(const std::array<int, 3>& c) { return v[id(c)]; }
    cplx operator()(const std::array<int, 3>& c) const { return v[id(c)]; }
};

// Values at half-points m + 1/2 along `axis` -> values at integer points; interior points
// average, end points extrapolate linearly (second order throughout).
inline Array3 destagger(const Array3& src, int axis) {
    auto dims = src.d;
    const int n = dims[std::size_t(axis)] + 1;
    dims[std::size_t(axis)] = n;
    Array3 out(dims);
    for (int i = 0; i < dims[0]; ++i)
        for (int j = 0; j < dims[1]; ++j)
            for (int k = 0; k < dims[2]; ++k) {
                std::array<int, 3> c{i, j, k};
                const int m = c[std::size_t(axis)];
                auto at = [&](int t) {
                    auto s = c;
                    s[std::size_t(axis)] = t;
                    return src(s);
                };
                cplx v;
                if (m == 0) v = 1.5 * at(0) - 0.5 * at(1);
                else if (m == n - 1) v = 1.5 * at(n - 2) - 0.5 * at(n - 3);
                else v = 0.5 * (at(m - 1) + at(m));
                out(c) = v;
            }
    return out;
}

class EdgeLayout {
public:
    explicit EdgeLayout(const Grid3& g) : g_(g) {
        std::size_t off = 0;
        for (int a = 0; a < 3; ++a) {
            dims_[std::size_t(a)] = g.dims;
            dims_[std::size_t(a)][std::size_t(a)] -= 1;
            offset_[std::size_t(a)] = off;
            off += std::size_t(dims_[std::size_t(a)][0]) * dims_[std::size_t(a)][1] * dims_[std::size_t(a)][2];
        }
        total_ = off;
    }

    std::size_t total() const { return total_; }
    const std::array<int, 3>& dims(int a) const { return dims_[std::size_t(a)]; }

    std::size_t id(int a, const std::array<int, 3>& c) const {
        const auto& d = dims_[std::size_t(a)];
        return offset_[std::size_t(a)] + (std::size_t(c[0]) * d[1] + c[1]) * d[2] + c[2];
    }

    bool on_boundary(int a, const std::array<int, 3>& c) const {
        for (int b = 0; b < 3; ++b)
            if (b != a && (c[std::size_t(b)] == 0 || c[std::size_t(b)] == g_.dims[std::size_t(b)] - 1)) return true;
        return false;
    }

    Vec3 midpoint(int a, const std::array<int, 3>& c) const {
        Vec3 x = g_.position(c[0], c[1], c[2]);
        x[a] += 0.5 * g_.spacing[std::size_t(a)];
        return x;
    }

    template <class Fn>
    void for_each(int a, Fn&& fn) const {
        const auto& d = dims_[std::size_t(a)];
        for (int i = 0; i < d[0]; ++i)
            for (int j = 0; j < d[1]; ++j)
                for (int k = 0; k < d[2]; ++k) fn(std::array<int, 3>{i, j, k});
    }

private:
    Grid3 g_;
    std::array<std::array<int, 3>, 3> dims_{};
    std::array<std::size_t, 3> offset_{};
    std::size_t total_ = 0;
};

inline std::array<int, 3> shifted(std::array<int, 3> c, int axis, int by) {
    c[std::size_t(axis)] += by;
    return c;
}

}  // namespace detail

/// Solves the variable-coefficient curl-curl system with prescribed tangential E.
inline FdfdResult fdfd_solve(const SymTensorFieldC& gamma, double omega, double mu0, const EdgeTrace& boundary) {
    using detail::shifted;
    const Grid3& g = gamma.grid;
    if (g.size() > fdfd_voxel_budget)
        throw Error(Errc::budget_exceeded, std::to_string(g.size()) + " voxels exceed the direct-solve budget of " +
                                               std::to_string(fdfd_voxel_budget));
    if (!(omega > 0.0) || !(mu0 > 0.0)) throw Error(Errc::invalid_argument, "omega and mu0 must be positive");
    for (const auto& m : gamma.values) {
        const auto rep = ellipticity_check(m, 1e6, omega);
        if (!rep.ok) throw Error(Errc::ellipticity, rep.failure);
    }

    const detail::EdgeLayout edges(g);
    std::vector<long> unknown(edges.total(), -1);
    Eigen::VectorXcd known = Eigen::VectorXcd::Zero(Eigen::Index(edges.total()));
    long n_unknown = 0;
    for (int a = 0; a < 3; ++a)
        edges.for_each(a, [&](const std::array<int, 3>& c) {
            const auto id = edges.id(a, c);
            if (edges.on_boundary(a, c)) known[Eigen::Index(id)] = boundary(a, edges.midpoint(a, c));
            else unknown[id] = n_unknown++;
        });

    using Triplet = Eigen::Triplet<cplx>;
    std::vector<Triplet> trip;
    trip.reserve(std::size_t(n_unknown) * 21);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n_unknown);

    auto add = [&](std::size_t row_edge, std::size_t col_edge, cplx v) {
        const long r = unknown[row_edge];
        if (r < 0) return;
        const long c = unknown[col_edge];
        if (c >= 0) trip.emplace_back(r, c, v);
        else rhs[r] -= v * known[Eigen::Index(col_edge)];
    };

    // Stiffness C^T C, face by face.
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3, cc = (a + 2) % 3;
        const double hb = g.spacing[std::size_t(b)], hc = g.spacing[std::size_t(cc)];
        for (int i = 0; i < g.dims[0] - (a == 0 ? 0 : 1); ++i)
            for (int j = 0; j < g.dims[1] - (a == 1 ? 0 : 1); ++j)
                for (int k = 0; k < g.dims[2] - (a == 2 ? 0 : 1); ++k) {
                    const std::array<int, 3> c{i, j, k};
                    const std::array<std::pair<std::size_t, double>, 4> ent{{
                        {edges.id(cc, shifted(c, b, 1)), 1.0 / hb},
                        {edges.id(cc, c), -1.0 / hb},
                        {edges.id(b, shifted(c, cc, 1)), -1.0 / hc},
                        {edges.id(b, c), 1.0 / hc},
                    }};
                    for (const auto& [e1, c1] : ent)
                        for (const auto& [e2, c2] : ent) add(e1, e2, c1 * c2);
                }
    }

    // Mass term i omega mu0 gamma.
    const cplx iwm = I * omega * mu0;
    for (int a = 0; a < 3; ++a)
        edges.for_each(a, [&](const std::array<int, 3>& c) {
            if (edges.on_boundary(a, c)) return;
            const auto row = edges.id(a, c);
            const Mat3c ge = 0.5 * (gamma[g.index(c)] + gamma[g.index(shifted(c, a, 1))]);
            add(row, row, iwm * ge(a, a));
            for (int b = 0; b < 3; ++b) {
                if (b == a || ge(a, b) == cplx(0.0)) continue;
                const cplx w = 0.25 * iwm * ge(a, b);
                add(row, edges.id(b, c), w);
                add(row, edges.id(b, shifted(c, b, -1)), w);
                add(row, edges.id(b, shifted(c, a, 1)), w);
                add(row, edges.id(b, shifted(shifted(c, a, 1), b, -1)), w);
            }
        });

    Eigen::SparseMatrix<cplx> A(n_unknown, n_unknown);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();

    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n_unknown);
    double residual = 0.0;
    if (rhs.norm() > 0.0) {
#ifdef ADMITREC_HAS_UMFPACK
        Eigen::UmfPackLU<Eigen::SparseMatrix<cplx>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success)
            throw Error(Errc::singular_system, "factorization failed (resonance-like discrete system)");
#else
        Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success)
            throw Error(Errc::singular_system, "factorization failed (resonance-like discrete system): " +
                                                   lu.lastErrorMessage());
#endif
        x = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !x.allFinite())
            throw Error(Errc::singular_system, "solve failed");
        residual = (A * x - rhs).norm() / rhs.norm();
    }

    // All edge values.
    std::array<detail::Array3, 3> edge_vals;
    for (int a = 0; a < 3; ++a) {
        edge_vals[std::size_t(a)] = detail::Array3(edges.dims(a));
        edges.for_each(a, [&](const std::array<int, 3>& c) {
            const auto id = edges.id(a, c);
            edge_vals[std::size_t(a)](c) = unknown[id] >= 0 ? x[unknown[id]] : known[Eigen::Index(id)];
        });
    }

    FdfdResult out;
    out.e = VectorFieldC(g);
    out.h = VectorFieldC(g);
    out.residual = residual;
    out.unknowns = std::size_t(n_unknown);

    const cplx h_scale = I / (omega * mu0);
    for (int a = 0; a < 3; ++a) {
        const auto node_e = detail::destagger(edge_vals[std::size_t(a)], a);
        const int b = (a + 1) % 3, cc = (a + 2) % 3;
        auto fd = g.dims;
        fd[std::size_t(b)] -= 1;
        fd[std::size_t(cc)] -= 1;
        detail::Array3 faces(fd);
        const double hb = g.spacing[std::size_t(b)], hc = g.spacing[std::size_t(cc)];
        const auto& eb = edge_vals[std::size_t(b)];
        const auto& ec = edge_vals[std::size_t(cc)];
        for (int i = 0; i < fd[0]; ++i)
            for (int j = 0; j < fd[1]; ++j)
                for (int k = 0; k < fd[2]; ++k) {
                    const std::array<int, 3> c{i, j, k};
                    faces(c) = h_scale * ((ec(shifted(c, b, 1)) - ec(c)) / hb - (eb(shifted(c, cc, 1)) - eb(c)) / hc);
                }
        const auto node_h = detail::destagger(detail::destagger(faces, b), cc);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            const auto c = g.coords(idx);
            out.e[idx][a] = node_e(c);
            out.h[idx][a] = node_h(c);
        }
    }
    return out;
}

}  // namespace admitrec
