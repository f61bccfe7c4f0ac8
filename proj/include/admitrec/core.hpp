#pragma once

// Scalar/vector aliases and the library-wide error type.

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace admitrec {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Vec3c = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;
using Mat3c = Eigen::Matrix3cd;

inline constexpr cplx I{0.0, 1.0};

/// Complex bilinear dot product a·b (no conjugation).
inline cplx bdot(const Vec3c& a, const Vec3c& b) { return a.cwiseProduct(b).sum(); }

/// Bilinear cross product (Eigen's cross() conjugates complex results).
inline Vec3c cross(const Vec3c& a, const Vec3c& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Bilinear matrix pairing A:B = tr(A^T B).
inline cplx colon(const Mat3c& a, const Mat3c& b) { return a.cwiseProduct(b).sum(); }

/// Largest entry modulus.
template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.cwiseAbs().maxCoeff();
}

enum class Errc {
    invalid_argument,
    dimension_too_small,
    voxel_budget_exceeded,
    empty_interior,
    grid_mismatch,
    grid_too_small,
    io_failure,
    length_mismatch,
    unknown_format_version,
    checksum_mismatch,
    near_degenerate_spectrum,
    isotropic_eigenvector,
    ellipticity,
    singular_system,
    budget_exceeded,
    too_few_fields,
    all_masked,
    mask_too_small,
    root_domain,
    first_quadrant,
};

inline std::string_view errc_name(Errc c) {
    switch (c) {
        case Errc::invalid_argument: return "invalid-argument";
        case Errc::dimension_too_small: return "dimension-too-small";
        case Errc::voxel_budget_exceeded: return "voxel-budget-exceeded";
        case Errc::empty_interior: return "empty-interior";
        case Errc::grid_mismatch: return "grid-mismatch";
        case Errc::grid_too_small: return "grid-too-small";
        case Errc::io_failure: return "io-failure";
        case Errc::length_mismatch: return "length-mismatch";
        case Errc::unknown_format_version: return "unknown-format-version";
        case Errc::checksum_mismatch: return "checksum-mismatch";
        case Errc::near_degenerate_spectrum: return "near-degenerate-spectrum";
        case Errc::isotropic_eigenvector: return "isotropic-eigenvector";
        case Errc::ellipticity: return "ellipticity";
        case Errc::singular_system: return "singular-system";
        case Errc::budget_exceeded: return "budget-exceeded";
        case Errc::too_few_fields: return "too-few-fields";
        case Errc::all_masked: return "all-masked";
        case Errc::mask_too_small: return "mask-too-small";
        case Errc::root_domain: return "root-domain";
        case Errc::first_quadrant: return "first-quadrant";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace admitrec
