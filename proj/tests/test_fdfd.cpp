#include "test_support.hpp"

using namespace admitrec;

namespace {

SymTensorFieldC constant(const Grid3& g, const Mat3c& m) {
    SymTensorFieldC out(g, Symmetry::symmetric);
    for (auto& v : out.values) v = m;
    return out;
}

struct MmsError {
    double e = 0.0;
    double h = 0.0;
    double residual = 0.0;
};

// Plane wave j of the constant-gamma frame as boundary data; errors on the interior nodes.
MmsError mms(const Mat3c& gamma0, int n, int j) {
    const auto f = plane_wave_frame(gamma0);
    const auto g = unit_cube_grid(n);
    const auto r = fdfd_solve(constant(g, gamma0), f.omega, f.mu0,
                              trace_from_function([&](const Vec3& x) { return f.e_field(j, x); }));
    const Mask in = interior_mask(g, 1);
    MmsError out;
    out.residual = r.residual;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!in[i]) continue;
        const Vec3 x = g.position(i);
        out.e = std::max(out.e, max_abs(Vec3c(r.e[i] - f.e_field(j, x))));
        out.h = std::max(out.h, max_abs(Vec3c(r.h[i] - f.h_field(j, x))));
    }
    return out;
}

}  // namespace

TEST(Fdfd, ManufacturedPlaneWaveScalar) {
    const Mat3c gamma0 = cplx(2.0, 1.0) * Mat3c::Identity();
    const auto coarse = mms(gamma0, 9, 0), fine = mms(gamma0, 17, 0);
    EXPECT_LE(coarse.residual, 1e-8);
    EXPECT_LE(fine.residual, 1e-8);
    EXPECT_LT(fine.e, 1e-2);
    EXPECT_NEAR(coarse.e / fine.e, 4.0, 1.2);
    EXPECT_NEAR(coarse.h / fine.h, 4.0, 1.2);
}

TEST(Fdfd, ManufacturedPlaneWaveAnisotropic) {
    const auto coarse = mms(test::anisotropic_gamma(), 9, 1), fine = mms(test::anisotropic_gamma(), 17, 1);
    EXPECT_LE(fine.residual, 1e-8);
    EXPECT_NEAR(coarse.e / fine.e, 4.0, 1.2);
}

TEST(Fdfd, ZeroDataGivesZeroField) {
    const auto g = unit_cube_grid(8);
    const auto r = fdfd_solve(constant(g, cplx(1.0, 1.0) * Mat3c::Identity()), 1.0, 1.0,
                              [](int, const Vec3&) { return cplx(0.0); });
    EXPECT_EQ(max_abs(r.e), 0.0);
    EXPECT_EQ(max_abs(r.h), 0.0);
}

TEST(Fdfd, BudgetExceeded) {
    const auto g = unit_cube_grid(32);
    try {
        fdfd_solve(constant(g, cplx(1.0, 1.0) * Mat3c::Identity()), 1.0, 1.0, [](int, const Vec3&) { return cplx(1.0); });
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::budget_exceeded);
    }
}

TEST(Fdfd, NonEllipticRejected) {
    const auto g = unit_cube_grid(6);
    try {
        fdfd_solve(constant(g, cplx(1.0, -1.0) * Mat3c::Identity()), 1.0, 1.0, [](int, const Vec3&) { return cplx(1.0); });
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ellipticity);
    }
}

TEST(Fdfd, VariableCoefficientResidualAndDivergence) {
    const auto g = unit_cube_grid(12);
    SymTensorFieldC gamma(g, Symmetry::symmetric);
    for (std::size_t i = 0; i < g.size(); ++i) gamma[i] = test::manufactured_gamma(g.position(i)) * Mat3c::Identity();
    const auto f = plane_wave_frame(Mat3c::Identity());
    const auto r = fdfd_solve(gamma, 1.0, 1.0, trace_from_function([&](const Vec3& x) { return f.e_field(0, x); }));
    EXPECT_LE(r.residual, 1e-8);
    EXPECT_GT(r.unknowns, 0u);
    // H is divergence free up to discretization error on the trusted interior.
    FDConfig fd;
    const Mask in = interior_mask(g, 1);
    const auto d = divergence(r.h, fd, &in);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (d.mask[i]) worst = std::max(worst, std::abs(d.field[i]));
    EXPECT_LT(worst, 0.05 * max_abs(r.h) / g.spacing[0]);
}

TEST(Fdfd, TraceFromNodesMatchesFunction) {
    const auto f = plane_wave_frame(Mat3c::Identity());
    const auto g = unit_cube_grid(9);
    const auto e = sample(g, [&](const Vec3& x) { return f.e_field(1, x); });
    const auto a = trace_from_nodes(e);
    const auto b = trace_from_function([&](const Vec3& x) { return f.e_field(1, x); });
    const Vec3 mid = g.position(0, 3, 4) + Vec3(0.0, 0.5 * g.spacing[1], 0.0);
    EXPECT_LT(std::abs(a(1, mid) - b(1, mid)), 0.01);
}
