#pragma once

#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "admitrec/grid.hpp"

namespace admitrec {

/// One value per voxel, indexed like Grid3.
template <class T>
struct Field {
    Grid3 grid;
    std::vector<T> values;

    Field() = default;
    explicit Field(const Grid3& g) : grid(g), values(g.size(), zero()) {}
    Field(const Grid3& g, const T& fill) : grid(g), values(g.size(), fill) {}

    static T zero() {
        if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, cplx>) return T{};
        else return T::Zero();
    }

    std::size_t size() const { return values.size(); }
    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }
    T& at(int i, int j, int k) { return values[grid.index(i, j, k)]; }
    const T& at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }
};

using ScalarFieldC = Field<cplx>;
using VectorFieldC = Field<Vec3c>;

enum class Symmetry { general, symmetric, antisymmetric };

inline std::string_view symmetry_name(Symmetry s) {
    switch (s) {
        case Symmetry::symmetric: return "symmetric";
        case Symmetry::antisymmetric: return "antisymmetric";
        default: return "general";
    }
}

inline Symmetry parse_symmetry(std::string_view s) {
    if (s == "symmetric") return Symmetry::symmetric;
    if (s == "antisymmetric") return Symmetry::antisymmetric;
    if (s == "general") return Symmetry::general;
    throw Error(Errc::invalid_argument, "unknown symmetry tag '" + std::string(s) + "'");
}

struct MatrixFieldC : Field<Mat3c> {
    Symmetry symmetry = Symmetry::general;

    MatrixFieldC() = default;
    explicit MatrixFieldC(const Grid3& g, Symmetry s = Symmetry::general)
        : Field<Mat3c>(g), symmetry(s) {}
};

/// Complex symmetric 3x3 tensor per voxel.
using SymTensorFieldC = MatrixFieldC;

/// Checks the symmetry tag per voxel: |A -/+ A^T|_inf <= tol * |A|_inf.
inline bool satisfies_symmetry(const MatrixFieldC& f, double tol = 1e-12) {
    if (f.symmetry == Symmetry::general) return true;
    const double sign = f.symmetry == Symmetry::symmetric ? -1.0 : 1.0;
    for (const auto& a : f.values) {
        const double scale = max_abs(a);
        if (max_abs(a + sign * a.transpose()) > tol * scale) return false;
    }
    return true;
}

template <class F>
auto sample(const Grid3& g, F&& fn) {
    using T = std::decay_t<decltype(fn(Vec3{}))>;
    if constexpr (std::is_same_v<T, Mat3c>) {
        MatrixFieldC out(g);
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = fn(g.position(i));
        return out;
    } else {
        Field<T> out(g);
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = fn(g.position(i));
        return out;
    }
}

/// Component c of a vector field as a scalar field.
inline ScalarFieldC component(const VectorFieldC& v, int c) {
    ScalarFieldC out(v.grid);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i][c];
    return out;
}

inline double max_abs(const VectorFieldC& v) {
    double m = 0.0;
    for (const auto& x : v.values) m = std::max(m, max_abs(x));
    return m;
}

}  // namespace admitrec
