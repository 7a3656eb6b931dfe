#pragma once

// Linear, second-order time stepping for the viscous Cahn-Hilliard equation with hyperbolic
// relaxation in quadratized form:
//
//     alpha psi_t + psi = lap mu,   mu = -eps^2 lap phi + U H(phi) + beta phi_t,
//     U_t = H(phi) phi_t / 2,       psi = phi_t.
//
// Both schemes treat H explicitly at an extrapolated phi, eliminate psi and U, and reduce the
// step to one SPD solve for the zero-mean part of phi^{n+1} (spd_operator.hpp). The mean of
// phi^{n+1} is fixed by mass conservation and the constant part of mu never enters the solve.

#include <cmath>
#include <string>
#include <string_view>

#include "vchr/errors.hpp"
#include "vchr/grid.hpp"
#include "vchr/potential.hpp"
#include "vchr/spd_operator.hpp"
#include "vchr/spectral.hpp"

namespace vchr {

struct ModelParams {
    double eps = 0.01;
    double alpha = 0.0; // hyperbolic relaxation
    double beta = 0.0;  // viscosity
    PotentialSpec potential;

    void validate() const {
        if (!(eps > 0.0)) throw UsageError("eps must be > 0");
        if (!(alpha >= 0.0)) throw UsageError("alpha must be >= 0");
        if (!(beta >= 0.0)) throw UsageError("beta must be >= 0");
        potential.validate();
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

enum class Scheme { CN2, BDF2 };

inline std::string_view to_string(Scheme s) { return s == Scheme::CN2 ? "cn2" : "bdf2"; }

inline Scheme parse_scheme(std::string_view s) {
    if (s == "cn2") return Scheme::CN2;
    if (s == "bdf2") return Scheme::BDF2;
    throw UsageError("unknown scheme '" + std::string(s) + "' (expected cn2|bdf2)");
}

struct SchemeConfig {
    Scheme scheme = Scheme::CN2;
    double dt = 0.01;
    double cg_tol = 1e-10;
    int cg_maxit = 500;
    bool self_check = true; // verify the unreduced scheme equations after every step

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("dt must be > 0");
        if (!(cg_tol > 0.0)) throw UsageError("cg_tol must be > 0");
        if (cg_maxit < 1) throw UsageError("cg_maxit must be >= 1");
    }

    friend bool operator==(const SchemeConfig&, const SchemeConfig&) = default;
};

/// Two time levels of (phi, psi, U) plus bookkeeping for the last step taken.
struct StepperState {
    ScalarField phi_n, phi_nm1;
    ScalarField psi_n, psi_nm1;
    ScalarField U_n, U_nm1;
    ScalarField mu_n; // chemical potential produced by the last step (zero before the first)
    int step = 0;
    double mass0 = 0.0; // integral of phi^0

    Scheme last_scheme = Scheme::CN2;
    int cg_iterations = 0;
    double cg_residual = 0.0;
    double scheme_residual = 0.0; // worst self-check ratio (<= 1 passes), 0 when disabled

    const GridSpec& grid() const { return phi_n.grid(); }
};

/// Initial state: psi = 0, U = r(phi0), history levels copied from time 0.
inline StepperState init_state(const ModelParams& params, const GridSpec& grid, const ScalarField& phi0) {
    params.validate();
    if (!(phi0.grid() == grid)) throw UsageError("init_state: phi0 is not on the given grid");
    if (!phi0.all_finite()) throw UsageError("init_state: phi0 contains non-finite values");
    StepperState s;
    s.phi_n = phi0;
    s.phi_nm1 = phi0;
    s.psi_n = ScalarField(grid);
    s.psi_nm1 = ScalarField(grid);
    s.U_n = U_init(params.potential, phi0);
    s.U_nm1 = s.U_n;
    s.mu_n = ScalarField(grid);
    s.mass0 = integral(phi0);
    return s;
}

/// phi* = (3 phi^n - phi^{n-1}) / 2 for CN2, phi^dagger = 2 phi^n - phi^{n-1} for BDF2.
inline ScalarField extrapolate(const StepperState& s, Scheme scheme) {
    return scheme == Scheme::CN2 ? lincomb(1.5, s.phi_n, -0.5, s.phi_nm1) : lincomb(2.0, s.phi_n, -1.0, s.phi_nm1);
}

/// alpha_hat = (alpha/dt + 1/2)(2/dt)
inline double cn_alpha_hat(double alpha, double dt) { return (alpha / dt + 0.5) * (2.0 / dt); }

/// alpha_tilde = (3 alpha/(2 dt) + 1)(3/(2 dt))
inline double bdf_alpha_tilde(double alpha, double dt) { return (1.5 * alpha / dt + 1.0) * (1.5 / dt); }

namespace detail {

// One step in reduced form:  alpha_hat phi = lap mu + g_lin,  mu = P(phi) + g_mu,
// with P = -eps^2 c1 lap + hsq + visc.
struct ReducedStep {
    double alpha_hat;
    double grad_coeff;
    double visc;
    ScalarField hsq;
    ScalarField g_lin;
    ScalarField g_mu;
};

struct ReducedSolution {
    ScalarField phi;
    ScalarField mu;
    double rhs_norm;
    int iterations;
    double residual;
};

inline ReducedSolution solve_reduced(const ReducedStep& red, const ModelParams& params, const SchemeConfig& cfg,
                                     const SpectralPlan& plan, double mean_phi) {
    SpdOperator op{red.alpha_hat, params.eps, red.grad_coeff, red.visc, red.hsq, &plan};

    // f = g_lin - alpha_hat V, zero mean because mean(g_lin) = alpha_hat V
    ScalarField f = red.g_lin;
    f += -red.alpha_hat * mean_phi;
    f = project_zero_mean(std::move(f));

    ScalarField rhs = inv_laplacian(plan, f);
    rhs *= -1.0;
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= red.g_mu[i] + (red.hsq[i] + red.visc) * mean_phi;
    rhs = project_zero_mean(std::move(rhs));

    CgResult cg = cg_solve(op, rhs, {cfg.cg_tol, cfg.cg_maxit});

    ReducedSolution sol;
    sol.phi = std::move(cg.x);
    sol.phi = project_zero_mean(std::move(sol.phi));
    sol.phi += mean_phi;
    const ScalarField lphi = laplacian(sol.phi);
    const double ce = params.eps * params.eps * red.grad_coeff;
    sol.mu = ScalarField(sol.phi.grid());
    for (std::size_t i = 0; i < sol.mu.size(); ++i) {
        sol.mu[i] = -ce * lphi[i] + (red.hsq[i] + red.visc) * sol.phi[i] + red.g_mu[i];
    }
    sol.rhs_norm = norm_l2(rhs);
    sol.iterations = cg.iterations;
    sol.residual = cg.residual;
    return sol;
}

/// ||r|| / allowed, so values <= 1 pass.
inline double residual_ratio(const ScalarField& r, double allowed) {
    const double n = norm_l2(r);
    if (allowed <= 0.0) return n == 0.0 ? 0.0 : INFINITY;
    return n / allowed;
}

constexpr double roundoff_slack = 1e-11;

// Worst self-check ratio and the equation it came from.
struct CheckLog {
    double worst = 0.0;
    const char* which = "";
    void add(const char* name, double ratio) {
        if (!(ratio <= worst)) {
            worst = ratio;
            which = name;
        }
    }
};

} // namespace detail

/// One Crank-Nicolson step.
inline StepperState step_cn(const StepperState& s, const ModelParams& params, const SchemeConfig& cfg,
                            const SpectralPlan& plan) {
    cfg.validate();
    const double dt = cfg.dt;
    const double a = params.alpha / dt + 0.5;
    const double a_minus = params.alpha / dt - 0.5;
    const GridSpec& g = s.grid();

    const ScalarField H = H_field(params.potential, extrapolate(s, Scheme::CN2));
    const ScalarField lap_phi_n = laplacian(s.phi_n);

    ScalarField g1(g), g2(g), g3(g), g4(g), hsq(g);
    for (std::size_t i = 0; i < g1.size(); ++i) {
        g1[i] = s.U_n[i] - 0.5 * H[i] * s.phi_n[i];
        g2[i] = -(2.0 / dt) * s.phi_n[i] - s.psi_n[i];
        g3[i] = -a * g2[i] + a_minus * s.psi_n[i];
        g4[i] = -0.5 * params.eps * params.eps * lap_phi_n[i] + 0.5 * H[i] * (g1[i] + s.U_n[i]) -
                (params.beta / dt) * s.phi_n[i];
        hsq[i] = 0.25 * H[i] * H[i];
    }

    detail::ReducedStep red{cn_alpha_hat(params.alpha, dt), 0.5, params.beta / dt, std::move(hsq), g3, std::move(g4)};
    const double mean_phi = s.mass0 / g.volume();
    detail::ReducedSolution sol = detail::solve_reduced(red, params, cfg, plan, mean_phi);

    StepperState next;
    next.phi_nm1 = s.phi_n;
    next.psi_nm1 = s.psi_n;
    next.U_nm1 = s.U_n;
    next.phi_n = std::move(sol.phi);
    next.mu_n = std::move(sol.mu);
    next.psi_n = ScalarField(g);
    next.U_n = ScalarField(g);
    for (std::size_t i = 0; i < g1.size(); ++i) {
        next.psi_n[i] = (2.0 / dt) * next.phi_n[i] + g2[i];
        next.U_n[i] = 0.5 * H[i] * next.phi_n[i] + g1[i];
    }
    next.step = s.step + 1;
    next.mass0 = s.mass0;
    next.last_scheme = Scheme::CN2;
    next.cg_iterations = sol.iterations;
    next.cg_residual = sol.residual;

    if (cfg.self_check) {
        const ScalarField& phi1 = next.phi_n;
        const ScalarField& psi1 = next.psi_n;
        const ScalarField& U1 = next.U_n;
        const ScalarField& mu1 = next.mu_n;
        const ScalarField lap_phi1 = laplacian(phi1);
        detail::CheckLog check;

        // momentum equation, in inverse-Laplacian form (its mean is carried by mu)
        ScalarField lhs(g);
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            lhs[i] = params.alpha * (psi1[i] - s.psi_n[i]) / dt + 0.5 * (psi1[i] + s.psi_n[i]);
        }
        const double lhs_mean = mean(lhs);
        const ScalarField ilhs = inv_laplacian(plan, project_zero_mean(lhs));
        const ScalarField mu0 = project_zero_mean(mu1);
        const double scale1 = norm_l2(ilhs) + norm_l2(mu0);
        check.add("momentum", detail::residual_ratio(ilhs - mu0, 10.0 * cfg.cg_tol * sol.rhs_norm +
                                                                        detail::roundoff_slack * scale1));
        // the mean is a difference of O(phi/dt) terms
        const double mean_scale = (a + std::abs(a_minus)) * (norm_l2(psi1) + norm_l2(s.psi_n) +
                                                             2.0 / dt * (norm_l2(phi1) + norm_l2(s.phi_n)));
        check.add("momentum mean", std::abs(lhs_mean) / (detail::roundoff_slack * mean_scale + 1e-300));

        ScalarField r2(g), r3(g), r4(g);
        for (std::size_t i = 0; i < r2.size(); ++i) {
            r2[i] = mu1[i] - (-0.5 * params.eps * params.eps * (lap_phi1[i] + lap_phi_n[i]) +
                              0.5 * (U1[i] + s.U_n[i]) * H[i] + params.beta * (phi1[i] - s.phi_n[i]) / dt);
            r3[i] = U1[i] - s.U_n[i] - 0.5 * H[i] * (phi1[i] - s.phi_n[i]);
            r4[i] = 0.5 * (psi1[i] + s.psi_n[i]) - (phi1[i] - s.phi_n[i]) / dt;
        }
        const double mu_scale = norm_l2(mu1) + params.eps * params.eps * (norm_l2(lap_phi1) + norm_l2(lap_phi_n)) +
                                norm_l2(H * U1) + norm_l2(H * s.U_n) +
                                params.beta / dt * (norm_l2(phi1) + norm_l2(s.phi_n));
        check.add("mu", detail::residual_ratio(r2, detail::roundoff_slack * mu_scale));
        check.add("U", detail::residual_ratio(r3, detail::roundoff_slack * (norm_l2(U1) + norm_l2(s.U_n) +
                                                                                    norm_l2(H * phi1) +
                                                                                    norm_l2(H * s.phi_n))));
        check.add("psi", detail::residual_ratio(r4, detail::roundoff_slack *
                                                               (norm_l2(psi1) + norm_l2(s.psi_n) +
                                                                (norm_l2(phi1) + norm_l2(s.phi_n)) / dt)));
        next.scheme_residual = check.worst;
        if (!(check.worst <= 1.0)) {
            throw ConsistencyError("CN2 step " + std::to_string(next.step) +
                                   ": " + check.which + " equation violated (residual ratio " +
                                   std::to_string(check.worst) + ")");
        }
    }
    return next;
}

/// One BDF2 step. Requires two genuine time levels, i.e. s.step >= 1.
inline StepperState step_bdf(const StepperState& s, const ModelParams& params, const SchemeConfig& cfg,
                             const SpectralPlan& plan) {
    cfg.validate();
    if (s.step < 1) throw UsageError("step_bdf needs step >= 1; take the first step with step_cn");
    const double dt = cfg.dt;
    const double k = 1.5 / dt; // 3/(2 dt)
    const double b = 1.5 * params.alpha / dt + 1.0;
    const GridSpec& g = s.grid();

    const ScalarField H = H_field(params.potential, extrapolate(s, Scheme::BDF2));

    // S^pm = (4 S^n - S^{n-1}) / 3
    const ScalarField phi_pm = lincomb(4.0 / 3.0, s.phi_n, -1.0 / 3.0, s.phi_nm1);
    const ScalarField U_pm = lincomb(4.0 / 3.0, s.U_n, -1.0 / 3.0, s.U_nm1);
    const ScalarField psi_pm = lincomb(4.0 / 3.0, s.psi_n, -1.0 / 3.0, s.psi_nm1);

    ScalarField h1(g), h2(g), h3(g), h4(g), hsq(g);
    for (std::size_t i = 0; i < h1.size(); ++i) {
        h1[i] = U_pm[i] - 0.5 * H[i] * phi_pm[i];
        h2[i] = -k * phi_pm[i];
        h3[i] = -b * h2[i] + 1.5 * params.alpha / dt * psi_pm[i];
        h4[i] = H[i] * h1[i] - params.beta * k * phi_pm[i];
        hsq[i] = 0.5 * H[i] * H[i];
    }

    detail::ReducedStep red{bdf_alpha_tilde(params.alpha, dt), 1.0, params.beta * k, std::move(hsq), h3, std::move(h4)};
    const double mean_phi = s.mass0 / g.volume();
    detail::ReducedSolution sol = detail::solve_reduced(red, params, cfg, plan, mean_phi);

    StepperState next;
    next.phi_nm1 = s.phi_n;
    next.psi_nm1 = s.psi_n;
    next.U_nm1 = s.U_n;
    next.phi_n = std::move(sol.phi);
    next.mu_n = std::move(sol.mu);
    next.psi_n = ScalarField(g);
    next.U_n = ScalarField(g);
    for (std::size_t i = 0; i < h1.size(); ++i) {
        next.psi_n[i] = k * next.phi_n[i] + h2[i];
        next.U_n[i] = 0.5 * H[i] * next.phi_n[i] + h1[i];
    }
    next.step = s.step + 1;
    next.mass0 = s.mass0;
    next.last_scheme = Scheme::BDF2;
    next.cg_iterations = sol.iterations;
    next.cg_residual = sol.residual;

    if (cfg.self_check) {
        const ScalarField& phi1 = next.phi_n;
        const ScalarField& psi1 = next.psi_n;
        const ScalarField& U1 = next.U_n;
        const ScalarField& mu1 = next.mu_n;
        const ScalarField lap_phi1 = laplacian(phi1);
        detail::CheckLog check;

        ScalarField lhs(g), d_phi(g);
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            lhs[i] = params.alpha * (3.0 * psi1[i] - 4.0 * s.psi_n[i] + s.psi_nm1[i]) / (2.0 * dt) + psi1[i];
            d_phi[i] = 3.0 * phi1[i] - 4.0 * s.phi_n[i] + s.phi_nm1[i];
        }
        const double lhs_mean = mean(lhs);
        const ScalarField ilhs = inv_laplacian(plan, project_zero_mean(lhs));
        const ScalarField mu0 = project_zero_mean(mu1);
        const double scale1 = norm_l2(ilhs) + norm_l2(mu0);
        check.add("momentum", detail::residual_ratio(ilhs - mu0, 10.0 * cfg.cg_tol * sol.rhs_norm +
                                                                        detail::roundoff_slack * scale1));
        const double mean_scale =
            b * (norm_l2(psi1) + (4.0 * norm_l2(s.psi_n) + norm_l2(s.psi_nm1)) / 3.0 +
                 k * (norm_l2(phi1) + (4.0 * norm_l2(s.phi_n) + norm_l2(s.phi_nm1)) / 3.0));
        check.add("momentum mean", std::abs(lhs_mean) / (detail::roundoff_slack * mean_scale + 1e-300));

        ScalarField r2(g), r3(g), r4(g);
        for (std::size_t i = 0; i < r2.size(); ++i) {
            r2[i] = mu1[i] - (-params.eps * params.eps * lap_phi1[i] + U1[i] * H[i] +
                              params.beta * d_phi[i] / (2.0 * dt));
            r3[i] = 3.0 * U1[i] - 4.0 * s.U_n[i] + s.U_nm1[i] - 0.5 * H[i] * d_phi[i];
            r4[i] = psi1[i] - d_phi[i] / (2.0 * dt);
        }
        const double mu_scale = norm_l2(mu1) + params.eps * params.eps * norm_l2(lap_phi1) + norm_l2(H * U1) +
                                params.beta * k * (norm_l2(phi1) + norm_l2(phi_pm));
        check.add("mu", detail::residual_ratio(r2, detail::roundoff_slack * mu_scale));
        check.add("U", detail::residual_ratio(
                                    r3, detail::roundoff_slack * (3.0 * norm_l2(U1) + 4.0 * norm_l2(s.U_n) +
                                                                  norm_l2(s.U_nm1) + norm_l2(H * d_phi))));
        check.add("psi", detail::residual_ratio(
                                    r4, detail::roundoff_slack * (norm_l2(psi1) + (3.0 * norm_l2(phi1) +
                                                                                   4.0 * norm_l2(s.phi_n) +
                                                                                   norm_l2(s.phi_nm1)) / (2.0 * dt))));
        next.scheme_residual = check.worst;
        if (!(check.worst <= 1.0)) {
            throw ConsistencyError("BDF2 step " + std::to_string(next.step) +
                                   ": " + check.which + " equation violated (residual ratio " +
                                   std::to_string(check.worst) + ")");
        }
    }
    return next;
}

/// Advances one step with the configured scheme. BDF2 takes its first step with CN2.
inline StepperState advance(const StepperState& s, const ModelParams& params, const SchemeConfig& cfg,
                            const SpectralPlan& plan) {
    if (cfg.scheme == Scheme::BDF2 && s.step >= 1) return step_bdf(s, params, cfg, plan);
    return step_cn(s, params, cfg, plan);
}

} // namespace vchr
