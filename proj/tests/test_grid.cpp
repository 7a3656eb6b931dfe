#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace vchr;
using vchr::test::random_field;

namespace {

constexpr double pi = std::numbers::pi;

GridSpec line(int n, double len, BoundaryKind bc) { return GridSpec::cube(1, n, len, bc); }

} // namespace

TEST(GridSpec, SpacingFollowsBoundaryConvention) {
    EXPECT_DOUBLE_EQ(GridSpec::cube(2, 8, 1.0, BoundaryKind::Periodic).spacing(0), 1.0 / 8);
    EXPECT_DOUBLE_EQ(GridSpec::cube(2, 9, 1.0, BoundaryKind::NoFlux).spacing(1), 1.0 / 8);
    EXPECT_DOUBLE_EQ(GridSpec::cube(3, 4, 2.0, BoundaryKind::Periodic).volume(), 8.0);
}

TEST(GridSpec, RejectsInvalidShapes) {
    EXPECT_THROW(GridSpec::cube(2, 3, 1.0, BoundaryKind::Periodic), UsageError);
    EXPECT_THROW(GridSpec::cube(4, 8, 1.0, BoundaryKind::Periodic), UsageError);
    EXPECT_THROW(GridSpec::cube(2, 8, 0.0, BoundaryKind::Periodic), UsageError);
    EXPECT_THROW(GridSpec::cube(2, 8, -1.0, BoundaryKind::NoFlux), UsageError);
    EXPECT_THROW(parse_boundary("dirichlet"), UsageError);
}

TEST(ScalarField, RowMajorLastAxisFastest) {
    const auto g = GridSpec::make(3, std::array{4, 5, 6}, std::array{1.0, 1.0, 1.0}, BoundaryKind::Periodic);
    ScalarField f(g);
    f.at(1, 2, 3) = 7.0;
    EXPECT_EQ(f[1 * 30 + 2 * 6 + 3], 7.0);
}

TEST(ScalarField, GridMismatchIsUsageError) {
    ScalarField a(GridSpec::cube(2, 4, 1.0, BoundaryKind::Periodic));
    ScalarField b(GridSpec::cube(2, 4, 1.0, BoundaryKind::NoFlux));
    EXPECT_THROW(inner(a, b), UsageError);
    EXPECT_THROW(a += b, UsageError);
}

TEST(Inner, ConstantsOnUnitSquare) {
    for (auto bc : {BoundaryKind::Periodic, BoundaryKind::NoFlux}) {
        for (int n : {4, 7, 16}) {
            const auto g = GridSpec::cube(2, n, 1.0, bc);
            EXPECT_NEAR(inner(ScalarField(g, 1.0), ScalarField(g, 1.0)), 1.0, 1e-14);
            EXPECT_NEAR(inner(ScalarField(g, 2.0), ScalarField(g, 3.0)), 6.0, 1e-14);
        }
    }
}

TEST(Inner, PeriodicSineSamples) {
    const auto g = line(4, 2 * pi, BoundaryKind::Periodic);
    const ScalarField f(g, {0.0, 1.0, 0.0, -1.0});
    EXPECT_NEAR(inner(f, f), pi, 1e-14);
}

TEST(Mean, ConstantAndProjection) {
    const auto g = line(4, 1.0, BoundaryKind::Periodic);
    EXPECT_DOUBLE_EQ(mean(ScalarField(g, 3.25)), 3.25);
    EXPECT_EQ(project_zero_mean(ScalarField(g, 3.25)).max_abs(), 0.0);

    const ScalarField f(g, {1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(mean(f), 2.5);
    const ScalarField p = project_zero_mean(f);
    const std::array expect{-1.5, -0.5, 0.5, 1.5};
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p[i], expect[i]);
}

TEST(Mean, ProjectionLeavesRoundOffMean) {
    for (auto bc : {BoundaryKind::Periodic, BoundaryKind::NoFlux}) {
        const auto g = GridSpec::cube(3, 9, 1.3, bc);
        const ScalarField f = random_field(g, 11, 2.0, 5.0);
        EXPECT_LE(std::abs(mean(project_zero_mean(f))), 1e-14 * f.max_abs());
    }
}

TEST(Laplacian, ConstantMapsToZero) {
    for (auto bc : {BoundaryKind::Periodic, BoundaryKind::NoFlux}) {
        EXPECT_EQ(laplacian(ScalarField(GridSpec::cube(3, 5, 1.0, bc), 4.2)).max_abs(), 0.0);
    }
}

TEST(Laplacian, PeriodicEigenfield) {
    const auto g = line(4, 2 * pi, BoundaryKind::Periodic);
    const ScalarField f(g, {0.0, 1.0, 0.0, -1.0});
    const ScalarField lf = laplacian(f);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(lf[i], -8.0 / (pi * pi) * f[i], 1e-15);
    EXPECT_NEAR(dirichlet_energy(f), 8.0 / (pi * pi) * pi, 1e-14);
}

TEST(Laplacian, NoFluxMirrorStencilByHand) {
    // h = 1 / 3 on four vertex-centered points
    const auto g = line(4, 1.0, BoundaryKind::NoFlux);
    const double h2 = 1.0 / 9.0;
    const ScalarField lf = laplacian(ScalarField(g, {1.0, 2.0, 3.0, 4.0}));
    EXPECT_NEAR(lf[0], 2.0 / h2, 1e-12);
    EXPECT_NEAR(lf[1], 0.0, 1e-12);
    EXPECT_NEAR(lf[2], 0.0, 1e-12);
    EXPECT_NEAR(lf[3], -2.0 / h2, 1e-12);
}

TEST(Laplacian, AnisotropicSpacingPerAxis) {
    const auto g = GridSpec::make(2, std::array{8, 4}, std::array{2.0, 1.0}, BoundaryKind::Periodic);
    ScalarField f(g);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 4; ++j) f.at(i, j) = std::cos(2 * pi * g.coordinate(1, j));
    // only the y-axis varies; eigenvalue -(2 - 2 cos(2 pi h))/h^2 with h = 1/4
    const double lam = -(2.0 - 2.0 * std::cos(pi / 2)) * 16.0;
    const ScalarField lf = laplacian(f);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(lf[i], lam * f[i], 1e-12);
}

class LaplacianProperties : public ::testing::TestWithParam<std::tuple<BoundaryKind, int>> {};

TEST_P(LaplacianProperties, SymmetricConservativeSemidefinite) {
    const auto [bc, dim] = GetParam();
    const std::array n{7, 6, 5};
    const std::array len{1.0, 0.7, 1.9};
    const auto g = GridSpec::make(dim, std::span(n).first(dim), std::span(len).first(dim), bc);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ScalarField f = random_field(g, seed);
        const ScalarField h = random_field(g, 1000 + seed);
        const ScalarField lf = laplacian(f);
        const double nf = norm_l2(f), nh = norm_l2(h);
        EXPECT_LE(std::abs(inner(lf, h) - inner(f, laplacian(h))), 1e-12 * nf * nh)
            << "symmetry, seed " << seed;
        EXPECT_LE(std::abs(mean(lf)), 1e-13 * f.max_abs()) << "conservation, seed " << seed;
        EXPECT_LE(inner(lf, f), 1e-12 * nf * nf) << "semidefinite, seed " << seed;
        EXPECT_GE(dirichlet_energy(f), -1e-12 * nf * nf);
    }
}

INSTANTIATE_TEST_SUITE_P(BothBoundaries, LaplacianProperties,
                         ::testing::Combine(::testing::Values(BoundaryKind::Periodic, BoundaryKind::NoFlux),
                                            ::testing::Values(1, 2, 3)),
                         vchr::test::ParamName());

TEST(Laplacian, NullSpaceIsConstants) {
    // The dense stencil matrix has exactly one zero eigenvalue, with a constant eigenvector.
    for (auto bc : {BoundaryKind::Periodic, BoundaryKind::NoFlux}) {
        const auto g = GridSpec::make(2, std::array{5, 6}, std::array{1.0, 1.0}, bc);
        const Eigen::MatrixXd L = vchr::test::assemble(g, [](const ScalarField& f) { return laplacian(f); });
        // symmetrize with the quadrature weights: W L is symmetric
        const Eigen::VectorXd w = vchr::test::quadrature_weights(g);
        const Eigen::VectorXd sw = w.cwiseSqrt();
        const Eigen::MatrixXd S = sw.asDiagonal() * L * sw.cwiseInverse().asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
        const auto& ev = es.eigenvalues();
        int zeros = 0;
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            EXPECT_LE(ev[i], 1e-9);
            if (std::abs(ev[i]) < 1e-9) ++zeros;
        }
        EXPECT_EQ(zeros, 1);
        const Eigen::VectorXd v = sw.cwiseInverse().asDiagonal() * es.eigenvectors().col(ev.size() - 1);
        EXPECT_LE((v.array() - v.mean()).abs().maxCoeff(), 1e-10 * v.cwiseAbs().maxCoeff());
    }
}

TEST(DirichletEnergy, EqualsForwardDifferenceSumOnPeriodicGrid) {
    const auto g = GridSpec::make(2, std::array{9, 6}, std::array{1.0, 2.0}, BoundaryKind::Periodic);
    const ScalarField f = random_field(g, 5);
    double sum = 0.0;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 6; ++j) {
            const double dx = (f.at((i + 1) % 9, j) - f.at(i, j)) / g.spacing(0);
            const double dy = (f.at(i, (j + 1) % 6) - f.at(i, j)) / g.spacing(1);
            sum += dx * dx + dy * dy;
        }
    EXPECT_NEAR(dirichlet_energy(f), sum * g.cell_volume(), 1e-12 * sum * g.cell_volume());
}

TEST(Integral, TrapezoidExactForLinearOnNoFlux) {
    const auto g = GridSpec::make(2, std::array{5, 9}, std::array{2.0, 1.0}, BoundaryKind::NoFlux);
    ScalarField f(g);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 9; ++j) f.at(i, j) = 1.0 + g.coordinate(0, i) + 3.0 * g.coordinate(1, j);
    // integral over [0,2]x[0,1] of 1 + x + 3y = 2 + 2 + 3
    EXPECT_NEAR(integral(f), 7.0, 1e-13);
}
