#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace vchr;
using vchr::test::assemble;
using vchr::test::from_vector;
using vchr::test::random_field;
using vchr::test::to_vector;

namespace {

struct Levels {
    ScalarField phi, psi, U, mu;
};

// Solves the unreduced scheme equations for (phi, psi, U, mu) at the new level with a dense LU.
// Shares only the Laplacian stencil and H with the library.
Levels dense_step(const StepperState& s, const ModelParams& p, double dt, Scheme scheme) {
    const GridSpec& g = s.grid();
    const auto n = static_cast<Eigen::Index>(g.size());
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const MatrixXd L = assemble(g, [](const ScalarField& f) { return laplacian(f); });
    const MatrixXd I = MatrixXd::Identity(n, n);
    const VectorXd H = to_vector(H_field(p.potential, extrapolate(s, scheme)));
    const MatrixXd Hd = H.asDiagonal();
    const VectorXd phi0 = to_vector(s.phi_n), psi0 = to_vector(s.psi_n), U0 = to_vector(s.U_n);
    const VectorXd phim = to_vector(s.phi_nm1), psim = to_vector(s.psi_nm1), Um = to_vector(s.U_nm1);
    const double e2 = p.eps * p.eps;

    // block order: phi, psi, U, mu
    MatrixXd K = MatrixXd::Zero(4 * n, 4 * n);
    VectorXd rhs(4 * n);
    if (scheme == Scheme::CN2) {
        // alpha (psi1 - psi0)/dt + (psi1 + psi0)/2 = lap mu
        K.block(0, n, n, n) = (p.alpha / dt + 0.5) * I;
        K.block(0, 3 * n, n, n) = -L;
        rhs.segment(0, n) = (p.alpha / dt - 0.5) * psi0;
        // mu = -eps^2/2 lap(phi1 + phi0) + H (U1 + U0)/2 + beta (phi1 - phi0)/dt
        K.block(n, 0, n, n) = 0.5 * e2 * L - p.beta / dt * I;
        K.block(n, 2 * n, n, n) = -0.5 * Hd;
        K.block(n, 3 * n, n, n) = I;
        rhs.segment(n, n) = -0.5 * e2 * L * phi0 + 0.5 * Hd * U0 - p.beta / dt * phi0;
        // U1 - U0 = H (phi1 - phi0) / 2
        K.block(2 * n, 0, n, n) = -0.5 * Hd;
        K.block(2 * n, 2 * n, n, n) = I;
        rhs.segment(2 * n, n) = U0 - 0.5 * Hd * phi0;
        // (psi1 + psi0)/2 = (phi1 - phi0)/dt
        K.block(3 * n, 0, n, n) = -I / dt;
        K.block(3 * n, n, n, n) = 0.5 * I;
        rhs.segment(3 * n, n) = -0.5 * psi0 - phi0 / dt;
    } else {
        const VectorXd dphi_old = -4.0 * phi0 + phim; // 3 phi1 + dphi_old = 3 phi1 - 4 phi0 + phim
        // alpha (3 psi1 - 4 psi0 + psim)/(2 dt) + psi1 = lap mu
        K.block(0, n, n, n) = (1.5 * p.alpha / dt + 1.0) * I;
        K.block(0, 3 * n, n, n) = -L;
        rhs.segment(0, n) = p.alpha * (4.0 * psi0 - psim) / (2 * dt);
        // mu = -eps^2 lap phi1 + H U1 + beta (3 phi1 - 4 phi0 + phim)/(2 dt)
        K.block(n, 0, n, n) = e2 * L - 1.5 * p.beta / dt * I;
        K.block(n, 2 * n, n, n) = -Hd;
        K.block(n, 3 * n, n, n) = I;
        rhs.segment(n, n) = p.beta * dphi_old / (2 * dt);
        // 3 U1 - 4 U0 + Um = H (3 phi1 - 4 phi0 + phim) / 2
        K.block(2 * n, 0, n, n) = -1.5 * Hd;
        K.block(2 * n, 2 * n, n, n) = 3.0 * I;
        rhs.segment(2 * n, n) = 4.0 * U0 - Um + 0.5 * Hd * dphi_old;
        // psi1 = (3 phi1 - 4 phi0 + phim)/(2 dt)
        K.block(3 * n, 0, n, n) = -1.5 / dt * I;
        K.block(3 * n, n, n, n) = I;
        rhs.segment(3 * n, n) = dphi_old / (2 * dt);
    }
    const Eigen::FullPivLU<MatrixXd> lu(K);
    EXPECT_TRUE(lu.isInvertible());
    const VectorXd x = lu.solve(rhs);
    return {from_vector(g, x.segment(0, n)), from_vector(g, x.segment(n, n)), from_vector(g, x.segment(2 * n, n)),
            from_vector(g, x.segment(3 * n, n))};
}

double rel_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs() / std::max(1.0, b.max_abs()); }

ModelParams model(double alpha, double beta, double eps = 0.05) {
    ModelParams p;
    p.eps = eps;
    p.alpha = alpha;
    p.beta = beta;
    return p;
}

SchemeConfig scheme_cfg(Scheme s, double dt, double tol = 1e-12) {
    SchemeConfig c;
    c.scheme = s;
    c.dt = dt;
    c.cg_tol = tol;
    return c;
}

} // namespace

TEST(InitState, UniformHalf) {
    const auto g = GridSpec::cube(2, 8, 1.0, BoundaryKind::Periodic);
    const StepperState s = init_state(model(0, 0), g, ScalarField(g, 0.5));
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(s.U_n[i], 0.25);
        EXPECT_EQ(s.psi_n[i], 0.0);
    }
    EXPECT_DOUBLE_EQ(s.mass0, 0.5);
    EXPECT_EQ(s.step, 0);
    EXPECT_EQ(init_state(model(0, 0), g, ScalarField(g, 0.0)).U_n.max_abs(), 0.0);
    const StepperState r = init_state(model(0, 0), g, random_field(g, 4));
    EXPECT_EQ(mean(r.psi_n), 0.0);
    EXPECT_EQ((r.phi_nm1 - r.phi_n).max_abs(), 0.0);
    EXPECT_EQ((r.U_nm1 - r.U_n).max_abs(), 0.0);
}

TEST(InitState, RejectsForeignGrid) {
    const auto g = GridSpec::cube(2, 8, 1.0, BoundaryKind::Periodic);
    const auto h = GridSpec::cube(2, 8, 1.0, BoundaryKind::NoFlux);
    EXPECT_THROW(init_state(model(0, 0), g, ScalarField(h, 0.5)), UsageError);
}

TEST(Extrapolate, Formulas) {
    const auto g = GridSpec::cube(2, 4, 1.0, BoundaryKind::Periodic);
    StepperState s;
    s.phi_n = ScalarField(g, 2.0);
    s.phi_nm1 = ScalarField(g, 1.0);
    EXPECT_EQ(extrapolate(s, Scheme::CN2)[0], 2.5);
    EXPECT_EQ(extrapolate(s, Scheme::BDF2)[0], 3.0);
    s.phi_nm1 = s.phi_n;
    EXPECT_EQ(extrapolate(s, Scheme::CN2)[0], 2.0);
    EXPECT_EQ(extrapolate(s, Scheme::BDF2)[0], 2.0);
}

TEST(Extrapolate, ExactForLinearInTime) {
    // phi^k = a + b k dt: phi* hits t^{n+1/2}, phi^dagger hits t^{n+1}
    const auto g = GridSpec::cube(2, 4, 1.0, BoundaryKind::Periodic);
    const double a = 0.3, b = -1.25, dt = 0.125;
    const int n = 5;
    StepperState s;
    s.phi_n = ScalarField(g, a + b * n * dt);
    s.phi_nm1 = ScalarField(g, a + b * (n - 1) * dt);
    EXPECT_DOUBLE_EQ(extrapolate(s, Scheme::CN2)[0], a + b * (n + 0.5) * dt);
    EXPECT_DOUBLE_EQ(extrapolate(s, Scheme::BDF2)[0], a + b * (n + 1) * dt);
}

TEST(Coefficients, AlphaHatAndAlphaTilde) {
    EXPECT_NEAR(cn_alpha_hat(1.0, 0.1), 210.0, 1e-12);
    EXPECT_NEAR(bdf_alpha_tilde(1.0, 0.1), 240.0, 1e-12);
}

class DenseOracle : public ::testing::TestWithParam<std::tuple<BoundaryKind, Scheme, PotentialKind>> {};

TEST_P(DenseOracle, StepMatchesUnreducedEquations) {
    const auto [bc, scheme, pot] = GetParam();
    const auto g = GridSpec::make(2, std::array{6, 6}, std::array{1.0, 1.0}, bc);
    const SpectralPlan plan(g);
    ModelParams p = model(0.4, 0.3, 0.08);
    if (pot == PotentialKind::FloryHuggins) p.potential = PotentialSpec::flory_huggins();
    const SchemeConfig cfg = scheme_cfg(scheme, 0.02, 1e-13);
    StepperState s = init_state(p, g, 0.5 + 0.3 * project_zero_mean(random_field(g, 31)));
    for (int k = 0; k < 4; ++k) {
        const Scheme used = (scheme == Scheme::BDF2 && s.step >= 1) ? Scheme::BDF2 : Scheme::CN2;
        const Levels ref = dense_step(s, p, cfg.dt, used);
        const StepperState next = advance(s, p, cfg, plan);
        EXPECT_EQ(next.last_scheme, used);
        EXPECT_LE(rel_diff(next.phi_n, ref.phi), 1e-10) << "step " << next.step;
        EXPECT_LE(rel_diff(next.psi_n, ref.psi), 1e-9) << "step " << next.step;
        EXPECT_LE(rel_diff(next.U_n, ref.U), 1e-10) << "step " << next.step;
        EXPECT_LE(rel_diff(next.mu_n, ref.mu), 1e-9) << "step " << next.step;
        EXPECT_LE(next.scheme_residual, 1.0);
        s = next;
    }
}

INSTANTIATE_TEST_SUITE_P(AllCombinations, DenseOracle,
                         ::testing::Combine(::testing::Values(BoundaryKind::Periodic, BoundaryKind::NoFlux),
                                            ::testing::Values(Scheme::CN2, Scheme::BDF2),
                                            ::testing::Values(PotentialKind::DoubleWell, PotentialKind::FloryHuggins)),
                         vchr::test::ParamName());

TEST(Stepper, ReducesToIeqCahnHilliardWithoutAlphaBeta) {
    // phi-only IEQ Cahn-Hilliard update, eliminated by hand:
    //   CN2:  phi1/dt - lap(-eps^2/2 lap + H^2/4) phi1 = phi0/dt + lap(-eps^2/2 lap phi0 + H U0 - H^2/4 phi0)
    //   BDF2: 3 phi1/(2dt) - lap(-eps^2 lap + H^2/2) phi1 = (4 phi0 - phim)/(2dt) + lap(H h1)
    const auto g = GridSpec::cube(2, 8, 1.0, BoundaryKind::Periodic);
    const SpectralPlan plan(g);
    const ModelParams p = model(0.0, 0.0, 0.05);
    const auto n = static_cast<Eigen::Index>(g.size());
    const Eigen::MatrixXd L = assemble(g, [](const ScalarField& f) { return laplacian(f); });
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const double e2 = p.eps * p.eps;
    for (Scheme scheme : {Scheme::CN2, Scheme::BDF2}) {
        const SchemeConfig cfg = scheme_cfg(scheme, 0.01, 1e-14);
        StepperState s = init_state(p, g, 0.5 + 0.2 * project_zero_mean(random_field(g, 5)));
        for (int k = 0; k < 3; ++k) {
            const bool bdf = scheme == Scheme::BDF2 && s.step >= 1;
            const Eigen::VectorXd H = to_vector(H_field(p.potential, extrapolate(s, bdf ? Scheme::BDF2 : Scheme::CN2)));
            const Eigen::MatrixXd Hd = H.asDiagonal();
            const Eigen::VectorXd phi0 = to_vector(s.phi_n), U0 = to_vector(s.U_n);
            Eigen::MatrixXd A;
            Eigen::VectorXd b;
            if (!bdf) {
                A = I / cfg.dt - L * (-0.5 * e2 * L + 0.25 * Hd * Hd);
                b = phi0 / cfg.dt + L * (-0.5 * e2 * L * phi0 + Hd * U0 - 0.25 * Hd * Hd * phi0);
            } else {
                const Eigen::VectorXd phim = to_vector(s.phi_nm1), Um = to_vector(s.U_nm1);
                const Eigen::VectorXd h1 = (4.0 * U0 - Um) / 3.0 - 0.5 * Hd * (4.0 * phi0 - phim) / 3.0;
                A = 1.5 / cfg.dt * I - L * (-e2 * L + 0.5 * Hd * Hd);
                b = (4.0 * phi0 - phim) / (2 * cfg.dt) + L * (Hd * h1);
            }
            const Eigen::VectorXd ref = A.fullPivLu().solve(b);
            s = advance(s, p, cfg, plan);
            EXPECT_LE((to_vector(s.phi_n) - ref).cwiseAbs().maxCoeff(), 1e-12)
                << to_string(scheme) << " step " << s.step;
        }
    }
}

TEST(Stepper, HomogeneousSteadyStateIsFixedPoint) {
    for (auto bc : {BoundaryKind::Periodic, BoundaryKind::NoFlux}) {
        for (Scheme scheme : {Scheme::CN2, Scheme::BDF2}) {
            for (const auto& pot : {PotentialSpec::double_well(), PotentialSpec::flory_huggins()}) {
                const auto g = GridSpec::cube(2, 16, 1.0, bc);
                const SpectralPlan plan(g);
                ModelParams p = model(0.5, 0.5);
                p.potential = pot;
                StepperState s = init_state(p, g, ScalarField(g, 0.5));
                const StepperState s0 = s;
                s = run(s, p, scheme_cfg(scheme, 0.1), 5, plan);
                EXPECT_LE((s.phi_n - s0.phi_n).max_abs(), 1e-14);
                EXPECT_LE(s.psi_n.max_abs(), 1e-14);
                EXPECT_LE((s.U_n - s0.U_n).max_abs(), 1e-14);
            }
        }
    }
}

TEST(Stepper, ConservesMassAndZeroMeanPsi) {
    for (auto bc : {BoundaryKind::Periodic, BoundaryKind::NoFlux}) {
        for (Scheme scheme : {Scheme::CN2, Scheme::BDF2}) {
            const auto g = GridSpec::cube(2, 32, 1.0, bc);
            const SpectralPlan plan(g);
            const ModelParams p = model(0.5, 0.2, 0.02);
            const StepperState s0 = init_state(p, g, random_perturbation(g, 0.4, 0.2, 3));
            run(s0, p, scheme_cfg(scheme, 0.05), 10, plan, [&](int, const StepperState& s, const EnergyRecord& r) {
                EXPECT_LE(std::abs(integral(s.phi_n) - s0.mass0), 1e-9 * (1 + std::abs(s0.mass0)));
                EXPECT_LE(std::abs(mean(s.psi_n)), 1e-9);
                EXPECT_LE(std::abs(r.mass_drift), 1e-9 * (1 + std::abs(s0.mass0)));
            });
        }
    }
}

TEST(Run, RejectsZeroSteps) {
    const auto g = GridSpec::cube(2, 8, 1.0, BoundaryKind::Periodic);
    const SpectralPlan plan(g);
    EXPECT_THROW(run(init_state(model(0, 0), g, ScalarField(g, 0.5)), model(0, 0), scheme_cfg(Scheme::CN2, 0.1), 0,
                     plan),
                 UsageError);
}

TEST(Run, SolverFailureCarriesStepIndex) {
    const auto g = GridSpec::cube(2, 32, 1.0, BoundaryKind::Periodic);
    const SpectralPlan plan(g);
    const ModelParams p = model(0.5, 0.5, 0.01);
    SchemeConfig cfg = scheme_cfg(Scheme::CN2, 0.1, 1e-15);
    cfg.cg_maxit = 1;
    try {
        run(init_state(p, g, random_perturbation(g, 0.5, 0.3, 1)), p, cfg, 3, plan);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos) << e.what();
    }
}

TEST(Run, IsDeterministic) {
    const auto g = GridSpec::cube(2, 32, 1.0, BoundaryKind::NoFlux);
    const SpectralPlan plan(g);
    const ModelParams p = model(0.5, 0.5, 0.02);
    const auto series = [&] {
        std::vector<double> e;
        run(init_state(p, g, random_perturbation(g, 0.5, 0.1, 9)), p, scheme_cfg(Scheme::BDF2, 0.01), 8, plan,
            [&](int, const StepperState&, const EnergyRecord& r) { e.push_back(r.E_discrete); });
        return e;
    };
    const auto a = series(), b = series();
    ASSERT_EQ(a.size(), 8u);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Run, SchemesAgreeToSecondOrder) {
    // || phi_cn(dt) - phi_bdf(dt) || shrinks ~4x per halving of dt
    const auto g = GridSpec::cube(2, 32, 1.0, BoundaryKind::Periodic);
    const SpectralPlan plan(g);
    const ModelParams p = model(0.5, 0.5, 0.05);
    const ScalarField phi0 = cos_product(g);
    std::vector<double> gaps;
    for (double dt : {0.02, 0.01, 0.005, 0.0025}) {
        const int steps = static_cast<int>(std::lround(0.2 / dt));
        const auto cn = run(init_state(p, g, phi0), p, scheme_cfg(Scheme::CN2, dt), steps, plan);
        const auto bdf = run(init_state(p, g, phi0), p, scheme_cfg(Scheme::BDF2, dt), steps, plan);
        gaps.push_back(norm_l2(cn.phi_n - bdf.phi_n));
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        EXPECT_GE(std::log2(gaps[i - 1] / gaps[i]), 1.7) << "level " << i;
        EXPECT_LE(std::log2(gaps[i - 1] / gaps[i]), 2.3) << "level " << i;
    }
}

TEST(Stepper, BdfStepNeedsHistory) {
    const auto g = GridSpec::cube(2, 8, 1.0, BoundaryKind::Periodic);
    const SpectralPlan plan(g);
    EXPECT_THROW(step_bdf(init_state(model(0, 0), g, ScalarField(g, 0.5)), model(0, 0), scheme_cfg(Scheme::BDF2, 0.1),
                          plan),
                 UsageError);
}

TEST(Stepper, SelfCheckCanBeDisabled) {
    const auto g = GridSpec::cube(2, 16, 1.0, BoundaryKind::Periodic);
    const SpectralPlan plan(g);
    const ModelParams p = model(0.5, 0.5);
    SchemeConfig cfg = scheme_cfg(Scheme::CN2, 0.05);
    const StepperState s = init_state(p, g, cos_product(g));
    EXPECT_GT(advance(s, p, cfg, plan).scheme_residual, 0.0);
    cfg.self_check = false;
    EXPECT_EQ(advance(s, p, cfg, plan).scheme_residual, 0.0);
}
