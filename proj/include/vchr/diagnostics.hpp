#pragma once

// Energies and the discrete energy balances of both schemes, evaluated as equalities.
//
// Every gradient norm is dirichlet_energy(), i.e. (-lap f, f), and p = lap^{-1} psi. With
// these definitions the balances hold exactly up to the linear-solver residual.

#include <algorithm>
#include <cmath>
#include <utility>

#include "vchr/grid.hpp"
#include "vchr/potential.hpp"
#include "vchr/spectral.hpp"
#include "vchr/stepper.hpp"

namespace vchr {

struct EnergyRecord {
    int step = 0;
    double t = 0.0;
    double E_original = 0.0;    // eps^2/2 |grad phi|^2 + F(phi) + alpha/2 |grad p|^2
    double E_transformed = 0.0; // same with U^2 - B in place of F
    double E_discrete = 0.0;    // the energy the run's scheme dissipates
    double energy_change = 0.0; // relative change across this step, in the energy of the scheme that took it
    double dissipation_lhs = 0.0;
    double dissipation_rhs = 0.0;
    double identity_residual = 0.0;
    double mass_drift = 0.0;
    double psi_mean = 0.0;
    double U_deviation = 0.0;
    int cg_iterations = 0;
};

inline ScalarField pressure_like(const SpectralPlan& plan, const ScalarField& psi) {
    return inv_laplacian(plan, psi);
}

/// |grad p|^2 with p = lap^{-1} psi
inline double psi_gradient_energy(const SpectralPlan& plan, const ScalarField& psi) {
    return dirichlet_energy(pressure_like(plan, psi));
}

inline double energy_original(const ModelParams& params, const ScalarField& phi, const ScalarField& psi,
                              const SpectralPlan& plan) {
    double e = 0.5 * params.eps * params.eps * dirichlet_energy(phi) + bulk_energy(params.potential, phi);
    if (params.alpha != 0.0) e += 0.5 * params.alpha * psi_gradient_energy(plan, psi);
    return e;
}

inline double energy_transformed(const ModelParams& params, const ScalarField& phi, const ScalarField& U,
                                 const ScalarField& psi, const SpectralPlan& plan) {
    double e = 0.5 * params.eps * params.eps * dirichlet_energy(phi) + inner(U, U) -
               params.potential.B * phi.grid().volume();
    if (params.alpha != 0.0) e += 0.5 * params.alpha * psi_gradient_energy(plan, psi);
    return e;
}

/// Crank-Nicolson energy at the newest level.
inline double energy_discrete_cn(const ModelParams& params, const StepperState& s, const SpectralPlan& plan) {
    return energy_transformed(params, s.phi_n, s.U_n, s.psi_n, plan);
}

/// BDF2 energy: every quadratic term Q(S) replaced by (Q(S^n) + Q(2 S^n - S^{n-1})) / 2.
inline double energy_discrete_bdf(const ModelParams& params, const StepperState& s, const SpectralPlan& plan) {
    const auto avg = [](auto&& q, const ScalarField& a, const ScalarField& b) {
        return 0.5 * (q(a) + q(lincomb(2.0, a, -1.0, b)));
    };
    const auto l2 = [](const ScalarField& f) { return inner(f, f); };
    double e = 0.5 * params.eps * params.eps * avg(dirichlet_energy, s.phi_n, s.phi_nm1) +
               avg(l2, s.U_n, s.U_nm1) - params.potential.B * s.grid().volume();
    if (params.alpha != 0.0) {
        const ScalarField p1 = pressure_like(plan, s.psi_n);
        const ScalarField p0 = pressure_like(plan, s.psi_nm1);
        e += 0.5 * params.alpha * avg(dirichlet_energy, p1, p0);
    }
    return e;
}

struct DissipationBalance {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0; // |lhs - rhs| / max(1, |lhs|)
};

namespace detail {
inline DissipationBalance make_balance(double lhs, double rhs) {
    return {lhs, rhs, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs))};
}
} // namespace detail

/// Crank-Nicolson balance across one step:
///   E^{n+1} - E^n = -(dt/4) |grad(p^{n+1} + p^n)|^2 - (beta/dt) |phi^{n+1} - phi^n|^2.
inline DissipationBalance dissipation_identity_cn(const ModelParams& params, const StepperState& prev,
                                                  const StepperState& next, double dt, const SpectralPlan& plan) {
    const double lhs = energy_discrete_cn(params, next, plan) - energy_discrete_cn(params, prev, plan);
    const ScalarField p1 = pressure_like(plan, next.psi_n);
    const ScalarField p0 = pressure_like(plan, prev.psi_n);
    const ScalarField dphi = next.phi_n - prev.phi_n;
    const double rhs = -0.25 * dt * dirichlet_energy(p1 + p0) - params.beta / dt * inner(dphi, dphi);
    return detail::make_balance(lhs, rhs);
}

/// BDF2 balance across one step, before the nonnegative second-difference terms are dropped:
///   sum over (phi, U, p) of c_S [Q(a)-Q(b) + Q(2a-b)-Q(2b-c) + Q(a-2b+c)]
///     = -2 dt |grad p^{n+1}|^2 - beta/(2 dt) |3 phi^{n+1} - 4 phi^n + phi^{n-1}|^2
/// with (a, b, c) the levels n+1, n, n-1, c_phi = eps^2/2, c_U = 1, c_p = alpha/2.
/// `prev` supplies levels n and n-1, `next` supplies n+1.
inline DissipationBalance dissipation_identity_bdf(const ModelParams& params, const StepperState& prev,
                                                   const StepperState& next, double dt, const SpectralPlan& plan) {
    const auto telescoped = [](auto&& q, const ScalarField& a, const ScalarField& b, const ScalarField& c) {
        ScalarField second = a;
        second.axpy(-2.0, b);
        second += c;
        return q(a) - q(b) + q(lincomb(2.0, a, -1.0, b)) - q(lincomb(2.0, b, -1.0, c)) + q(second);
    };
    const auto l2 = [](const ScalarField& f) { return inner(f, f); };

    const ScalarField p2 = pressure_like(plan, next.psi_n);
    double lhs = 0.5 * params.eps * params.eps *
                     telescoped(dirichlet_energy, next.phi_n, prev.phi_n, prev.phi_nm1) +
                 telescoped(l2, next.U_n, prev.U_n, prev.U_nm1);
    if (params.alpha != 0.0) {
        const ScalarField p1 = pressure_like(plan, prev.psi_n);
        const ScalarField p0 = pressure_like(plan, prev.psi_nm1);
        lhs += 0.5 * params.alpha * telescoped(dirichlet_energy, p2, p1, p0);
    }
    ScalarField d = next.phi_n;
    d.axpy(-4.0 / 3.0, prev.phi_n);
    d.axpy(1.0 / 3.0, prev.phi_nm1);
    d *= 3.0;
    const double rhs = -2.0 * dt * dirichlet_energy(p2) - params.beta / (2.0 * dt) * inner(d, d);
    return detail::make_balance(lhs, rhs);
}

/// Both sides of (3a - 4b + c) 2a = a^2 - b^2 + (2a-b)^2 - (2b-c)^2 + (a-2b+c)^2.
inline std::pair<double, double> bdf_scalar_identity(double a, double b, double c) {
    const double left = (3.0 * a - 4.0 * b + c) * 2.0 * a;
    const double right = a * a - b * b + (2.0 * a - b) * (2.0 * a - b) - (2.0 * b - c) * (2.0 * b - c) +
                         (a - 2.0 * b + c) * (a - 2.0 * b + c);
    return {left, right};
}

/// max |U^n - r(phi^n)|: how far the auxiliary variable has drifted from its definition.
inline double u_deviation(const ModelParams& params, const StepperState& s) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.U_n.size(); ++i) {
        m = std::max(m, std::abs(s.U_n[i] - U_val(params.potential, s.phi_n[i])));
    }
    return m;
}

/// Energy the run's scheme dissipates at the newest level of `s`.
inline double energy_discrete(const ModelParams& params, Scheme scheme, const StepperState& s,
                              const SpectralPlan& plan) {
    return scheme == Scheme::CN2 ? energy_discrete_cn(params, s, plan) : energy_discrete_bdf(params, s, plan);
}

/// Record for the newest level of `next`; `prev` is the state it was stepped from
/// (pass nullptr for the initial record).
inline EnergyRecord make_record(const ModelParams& params, const SchemeConfig& cfg, const StepperState* prev,
                                const StepperState& next, const SpectralPlan& plan) {
    EnergyRecord r;
    r.step = next.step;
    r.t = next.step * cfg.dt;
    r.E_original = energy_original(params, next.phi_n, next.psi_n, plan);
    r.E_transformed = energy_discrete_cn(params, next, plan);
    r.E_discrete = energy_discrete(params, cfg.scheme, next, plan);
    if (prev) {
        const DissipationBalance bal = next.last_scheme == Scheme::CN2
                                           ? dissipation_identity_cn(params, *prev, next, cfg.dt, plan)
                                           : dissipation_identity_bdf(params, *prev, next, cfg.dt, plan);
        // The CN2 startup step of a BDF2 run is measured in the CN2 energy; the two-level BDF2
        // energy is only dissipated from the second step on.
        const double before = energy_discrete(params, next.last_scheme, *prev, plan);
        const double after = next.last_scheme == cfg.scheme ? r.E_discrete : r.E_transformed;
        r.energy_change = (after - before) / std::max(1.0, std::abs(before));
        r.dissipation_lhs = bal.lhs;
        r.dissipation_rhs = bal.rhs;
        r.identity_residual = bal.residual;
        r.cg_iterations = next.cg_iterations;
    }
    r.mass_drift = integral(next.phi_n) - next.mass0;
    r.psi_mean = mean(next.psi_n);
    r.U_deviation = u_deviation(params, next);
    return r;
}

} // namespace vchr
