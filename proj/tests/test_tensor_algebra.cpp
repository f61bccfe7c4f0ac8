#include "test_support.hpp"

using namespace admitrec;
using admitrec::test::random_matrix;
using admitrec::test::random_vector;

namespace {

const Mat3c& w(int i) { return sym_basis()[std::size_t(i - 1)]; }

Mat3c random_symmetric(std::mt19937_64& rng) { return sym_part(random_matrix(rng)); }

}  // namespace

TEST(FrobeniusInner, Examples) {
    const Mat3c id = Mat3c::Identity();
    EXPECT_NEAR(std::abs(frobenius_inner(id, id) - cplx(3.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(frobenius_inner(id, I * id) - cplx(0.0, 3.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(frobenius_inner(I * id, id) - cplx(0.0, -3.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(frobenius_inner(w(4), w(4)) - cplx(2.0)), 0.0, 1e-15);
}

TEST(FrobeniusInner, HermitianProperties) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        const Mat3c a = random_matrix(rng), b = random_matrix(rng);
        EXPECT_NEAR(std::abs(frobenius_inner(a, b) - std::conj(frobenius_inner(b, a))), 0.0, 1e-12);
        const cplx aa = frobenius_inner(a, a);
        EXPECT_GT(aa.real(), 0.0);
        EXPECT_NEAR(aa.imag(), 0.0, 1e-12);
    }
    EXPECT_EQ(frobenius_inner(Mat3c::Zero(), Mat3c::Zero()), cplx(0.0));
}

TEST(SymBasis, OrthogonalAndSpanning) {
    for (int i = 1; i <= 6; ++i) {
        EXPECT_GT(frobenius_norm(w(i)), 0.0);
        EXPECT_EQ(w(i), w(i).transpose());
        for (int j = i + 1; j <= 6; ++j) EXPECT_EQ(frobenius_inner(w(i), w(j)), cplx(0.0));
    }
    std::mt19937_64 rng(2);
    const Mat3c s = random_symmetric(rng);
    const Vec6c g = sym_coords(s);
    Mat3c back = Mat3c::Zero();
    for (int i = 0; i < 6; ++i) back += g[i] * w(i + 1);
    EXPECT_LT(max_abs(Mat3c(back - s)), 1e-15);
    EXPECT_EQ(from_sym_coords(g), s);
}

TEST(AntisymBasis, RealAntisymmetricOrthogonal) {
    const auto& om = antisym_basis();
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(om[std::size_t(i)].transpose(), -om[std::size_t(i)]);
        for (int j = i + 1; j < 3; ++j) EXPECT_EQ((om[std::size_t(i)].transpose() * om[std::size_t(j)]).trace(), 0.0);
    }
    // Omega_j v = e_j x v
    const Vec3c v(1.0, 2.0, I);
    for (int j = 0; j < 3; ++j) {
        const Vec3c e = Vec3c::Unit(j);
        EXPECT_LT(max_abs(Vec3c(om[std::size_t(j)].cast<cplx>() * v - cross(e, v))), 1e-15);
    }
}

TEST(Cross, IsBilinear) {
    // Eigen's cross() conjugates for complex scalars; ours must not.
    const Vec3c a(I, 0.0, 0.0), b(0.0, I, 0.0);
    EXPECT_LT(max_abs(Vec3c(cross(a, b) - Vec3c(0.0, 0.0, -1.0))), 1e-15);
    std::mt19937_64 rng(3);
    const Vec3c u = random_vector(rng), v = random_vector(rng);
    EXPECT_LT(max_abs(Vec3c(skew(u) * v - cross(u, v))), 1e-14);
    EXPECT_LT(std::abs(bdot(cross(u, v), u)), 1e-13);
}

TEST(HodgeStarVector, Examples) {
    Mat3c e1 = Mat3c::Zero();
    e1(1, 2) = 1.0;
    e1(2, 1) = -1.0;
    EXPECT_EQ(hodge_star_vector(Vec3c(1, 0, 0)), e1);
    EXPECT_EQ(hodge_star_vector(Vec3c::Zero()), Mat3c::Zero());
    const Mat3c a = hodge_star_vector(Vec3c(1, 2, 3));
    EXPECT_EQ(a(0, 1), cplx(3.0));
    EXPECT_EQ(a(0, 2), cplx(-2.0));
    EXPECT_EQ(a(1, 2), cplx(1.0));
    EXPECT_EQ(a, Mat3c(-a.transpose()));
}

TEST(HodgeStarVector, MatchesExteriorAlgebra) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        const Vec3c v = random_vector(rng);
        const Mat3c direct = hodge_star_vector(v);
        EXPECT_LT(max_abs(Mat3c(direct - two_form_matrix(hodge_star(one_form(v))))), 1e-15);
        EXPECT_EQ(direct + direct.transpose(), Mat3c::Zero());
        EXPECT_LT(max_abs(Vec3c(hodge_star_matrix(direct) - v)), 1e-15);
    }
}

TEST(HodgeStarVector, ComplexLinear) {
    std::mt19937_64 rng(5);
    const Vec3c u = random_vector(rng), v = random_vector(rng);
    const cplx a(0.3, -1.2), b(-2.0, 0.5);
    EXPECT_LT(max_abs(Mat3c(hodge_star_vector(a * u + b * v) - a * hodge_star_vector(u) - b * hodge_star_vector(v))),
              1e-14);
}

TEST(Hodge, InvolutionOnBasisForms) {
    EXPECT_TRUE(hodge_involution_check(1));
    EXPECT_TRUE(hodge_involution_check(2));
    EXPECT_TRUE(hodge_involution_check(0));
    EXPECT_TRUE(hodge_involution_check(3));
}

TEST(Hodge, DxAndDyDz) {
    FormR3 dx = make_form(1);
    dx.coeffs[0] = 1.0;
    const FormR3 s = hodge_star(dx);
    // *dx = dy^dz, the 2-form with mask {1,2} (last in mask order)
    EXPECT_EQ(s.degree, 2);
    EXPECT_EQ(s.coeffs[2], cplx(1.0));
    EXPECT_EQ(s.coeffs[0], cplx(0.0));
    EXPECT_EQ(hodge_star(s).coeffs, dx.coeffs);
    FormR3 dydz = make_form(2);
    dydz.coeffs[2] = 1.0;
    EXPECT_EQ(hodge_star(hodge_star(dydz)).coeffs, dydz.coeffs);
    // *dy = -dx^dz
    FormR3 dy = make_form(1);
    dy.coeffs[1] = 1.0;
    EXPECT_EQ(hodge_star(dy).coeffs[1], cplx(-1.0));
}

TEST(Hodge, RandomFormsAreFixedPoints) {
    std::mt19937_64 rng(6);
    for (int l : {1, 2})
        for (int t = 0; t < 25; ++t) {
            FormR3 f = make_form(l);
            const Vec3c c = random_vector(rng);
            for (int i = 0; i < 3; ++i) f.coeffs[std::size_t(i)] = c[i];
            const FormR3 ff = hodge_star(hodge_star(f));
            for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(ff.coeffs[std::size_t(i)] - c[i]), 1e-15);
        }
}

TEST(GramSchmidt, AlreadyOrthogonal) {
    const std::vector<Mat3c> gen{w(1), w(2)};
    const auto gs = gram_schmidt(gen);
    EXPECT_EQ(gs.rank, 2);
    EXPECT_LT(max_abs(Mat3c(gs.ortho[0] - w(1))), 1e-15);
    EXPECT_LT(max_abs(Mat3c(gs.ortho[1] - w(2))), 1e-15);
}

TEST(GramSchmidt, CollinearPair) {
    const std::vector<Mat3c> gen{w(1), Mat3c(2.0 * w(1))};
    EXPECT_EQ(gram_schmidt(gen).rank, 1);
    EXPECT_EQ(gram_schmidt(gen, 1e-8, true).rank, 1);
}

TEST(GramSchmidt, AllZeroIsRankZero) {
    const std::vector<Mat3c> gen(3, Mat3c::Zero());
    EXPECT_EQ(gram_schmidt(gen).rank, 0);
}

TEST(GramSchmidt, BadArguments) {
    const std::vector<Mat3c> none;
    EXPECT_THROW(gram_schmidt(none), Error);
    const std::vector<Mat3c> one{w(1)};
    EXPECT_THROW(gram_schmidt(one, 0.0), Error);
}

TEST(GramSchmidt, OrthonormalSpanAndCoefficients) {
    std::mt19937_64 rng(8);
    for (bool pivot : {false, true}) {
        std::vector<Mat3c> gen;
        for (int i = 0; i < 9; ++i) gen.push_back(random_symmetric(rng));
        gen[4] = gen[0] - 2.0 * gen[1];  // dependent
        const auto gs = gram_schmidt(gen, 1e-8, pivot);
        ASSERT_EQ(gs.rank, 6);
        for (int i = 0; i < gs.rank; ++i)
            for (int j = 0; j < gs.rank; ++j)
                EXPECT_LT(std::abs(frobenius_inner(gs.ortho[std::size_t(i)], gs.ortho[std::size_t(j)]) -
                                   cplx(i == j ? 1.0 : 0.0)),
                          1e-12);
        // coefficients reproduce each ortho element from the generators
        for (int p = 0; p < gs.rank; ++p) {
            Mat3c acc = Mat3c::Zero();
            for (std::size_t r = 0; r < gen.size(); ++r) acc += gs.coeffs[std::size_t(p)][r] * gen[r];
            EXPECT_LT(max_abs(Mat3c(acc - gs.ortho[std::size_t(p)])), 1e-12);
        }
        // every generator lies in the span
        for (const auto& g : gen) {
            Mat3c res = g;
            for (const auto& o : gs.ortho) res -= frobenius_inner(o, g) * o;
            EXPECT_LT(frobenius_norm(res), 1e-10 * frobenius_norm(g));
        }
    }
}

TEST(GramSchmidt, FrameGeneratorsHaveFullRank) {
    const auto f = plane_wave_frame(test::anisotropic_gamma());
    const Vec3 x(0.5, 0.5, 0.5);
    Mat3c y;
    for (int j = 0; j < 3; ++j) y.col(j) = f.y_field(j, x);
    std::vector<Mat3c> z(3, Mat3c::Zero()), m(3, Mat3c::Zero());
    for (int k = 0; k < 3; ++k) z[std::size_t(k)].col(k) = f.lambda_grad[std::size_t(k)];
    const auto sys = build_voxel_system(y, z, m);
    ASSERT_EQ(sys.generators.size(), 9u);
    EXPECT_EQ(gram_schmidt(sys.generators).rank, 6);
}

TEST(Diagonalize, ScalarMatrix) {
    const auto d = complex_orthogonal_diagonalize(Mat3c::Identity());
    EXPECT_EQ(d.q, Mat3c::Identity());
    EXPECT_EQ(d.eigvals, Vec3c::Ones());
}

TEST(Diagonalize, TwoByTwoBlock) {
    Mat3c s;
    s << 1.0, I, 0.0, I, 1.0, 0.0, 0.0, 0.0, 2.0;
    const auto d = complex_orthogonal_diagonalize(s);
    EXPECT_LT(std::abs(d.eigvals[0] - cplx(1, 1)), 1e-12);
    EXPECT_LT(std::abs(d.eigvals[1] - cplx(1, -1)), 1e-12);
    EXPECT_LT(std::abs(d.eigvals[2] - cplx(2, 0)), 1e-12);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_LT(max_abs(Vec3c(d.q.col(0) - Vec3c(r, r, 0))), 1e-12);
    EXPECT_LT(max_abs(Vec3c(d.q.col(1) - Vec3c(r, -r, 0))), 1e-12);
    EXPECT_LT(max_abs(Vec3c(d.q.col(2) - Vec3c(0, 0, 1))), 1e-12);
    for (int j = 0; j < 3; ++j) EXPECT_LT(max_abs(Vec3c(s * d.q.col(j) - d.eigvals[j] * d.q.col(j))), 1e-12);
    EXPECT_LT(max_abs(Mat3c(d.q.transpose() * d.q - Mat3c::Identity())), 1e-12);
}

TEST(Diagonalize, NilpotentBlockIsRejected) {
    Mat3c s;
    s << 1.0, I, 0.0, I, -1.0, 0.0, 0.0, 0.0, 2.0;
    try {
        complex_orthogonal_diagonalize(s);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_TRUE(e.code() == Errc::isotropic_eigenvector || e.code() == Errc::near_degenerate_spectrum);
    }
}

TEST(Diagonalize, DegenerateNonScalarRejected) {
    const Mat3c s = Vec3c(1.0, 1.0, 2.0).asDiagonal();
    EXPECT_THROW(complex_orthogonal_diagonalize(s), Error);
}

TEST(Diagonalize, DiagonalOrderedAscending) {
    const Mat3c s = Vec3c(4.0, 1.0, 2.0).asDiagonal();
    const auto d = complex_orthogonal_diagonalize(s);
    EXPECT_LT(max_abs(Vec3c(d.eigvals - Vec3c(1.0, 2.0, 4.0))), 1e-14);
    EXPECT_LT(max_abs(Vec3c(d.q.col(0) - Vec3c(0, 1, 0))), 1e-14);
}

TEST(Diagonalize, RandomRoundTrip) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 200; ++t) {
        const Mat3c s = random_symmetric(rng);
        const auto d = complex_orthogonal_diagonalize(s);
        const double scale = max_abs(s);
        EXPECT_LE(max_abs(Mat3c(d.q * d.eigvals.asDiagonal() * d.q.transpose() - s)), 1e-10 * scale);
        EXPECT_LE(max_abs(Mat3c(d.q.transpose() * d.q - Mat3c::Identity())), 1e-10);
    }
}

TEST(Diagonalize, NonSymmetricInput) {
    Mat3c s = Mat3c::Identity();
    s(0, 1) = 1.0;
    EXPECT_THROW(complex_orthogonal_diagonalize(s), Error);
}

TEST(Ellipticity, Examples) {
    const Mat3c id = Mat3c::Identity();
    EXPECT_TRUE(ellipticity_check((1.0 + I) * id, 2.0, 1.0).ok);
    const auto bad = ellipticity_check((1.0 - I) * id, 2.0, 1.0);
    EXPECT_FALSE(bad.ok);
    EXPECT_EQ(bad.margins[2], -1.0);
    Mat3c d = Mat3c::Zero();
    d(0, 0) = cplx(3, 1);
    d(1, 1) = cplx(1, 1);
    d(2, 2) = cplx(1, 3);
    const auto r = ellipticity_check(d, 2.0, 1.0);
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.margins[1], 3.0);
    EXPECT_EQ(r.margins[3], 3.0);
}

TEST(Ellipticity, OmegaScalesImaginaryPart) {
    const Mat3c g = cplx(1.0, 4.0) * Mat3c::Identity();
    EXPECT_FALSE(ellipticity_check(g, 2.0).ok);
    EXPECT_TRUE(ellipticity_check(g, 2.0, 4.0).ok);
    EXPECT_THROW(ellipticity_check(g, 0.5), Error);
}
