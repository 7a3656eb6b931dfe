#pragma once

// The per-step linear operator on zero-mean fields
//
//     A x = P0[ -alpha_hat * lap^{-1} x - eps^2 * c1 * lap x + hsq * x + visc * x ]
//
// (P0 = projection onto zero mean) and its preconditioned conjugate-gradient solve.
// The preconditioner replaces hsq by its mean, which makes every term diagonal in the
// Laplacian eigenbasis.

#include <cmath>
#include <string>
#include <vector>

#include "vchr/errors.hpp"
#include "vchr/grid.hpp"
#include "vchr/spectral.hpp"

namespace vchr {

struct SpdOperator {
    double alpha_hat = 0.0;  // coefficient of -lap^{-1}
    double eps = 0.0;
    double grad_coeff = 0.5; // c1: 1/2 for Crank-Nicolson, 1 for BDF2
    double visc_coeff = 0.0; // beta/dt or 3 beta/(2 dt)
    ScalarField hsq_field;   // H*H/4 or H*H/2, pointwise
    const SpectralPlan* plan = nullptr;

    void validate() const {
        if (!plan) throw UsageError("SpdOperator needs a spectral plan");
        if (!(alpha_hat > 0.0)) throw UsageError("SpdOperator: alpha_hat must be > 0");
        if (!(visc_coeff >= 0.0)) throw UsageError("SpdOperator: visc_coeff must be >= 0");
        if (!(hsq_field.grid() == plan->grid())) throw UsageError("SpdOperator: hsq_field grid mismatch");
        for (double v : hsq_field.values()) {
            if (!(v >= 0.0)) throw UsageError("SpdOperator: hsq_field must be >= 0 pointwise");
        }
    }
};

inline ScalarField apply_spd(const SpdOperator& op, const ScalarField& x) {
    ScalarField ix = op.plan->apply_symbol(x, [](double lam) { return 1.0 / lam; });
    ScalarField lx = laplacian(x);
    const double ce = op.eps * op.eps * op.grad_coeff;
    ScalarField y(x.grid());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = -op.alpha_hat * ix[i] - ce * lx[i] + (op.hsq_field[i] + op.visc_coeff) * x[i];
    }
    return project_zero_mean(std::move(y));
}

/// The constant-coefficient approximation of the operator, inverted spectrally.
inline ScalarField apply_preconditioner(const SpdOperator& op, const ScalarField& r) {
    const double ce = op.eps * op.eps * op.grad_coeff;
    const double shift = mean(op.hsq_field) + op.visc_coeff;
    return op.plan->apply_symbol(r, [&](double lam) {
        const double mag = -lam;
        return 1.0 / (op.alpha_hat / mag + ce * mag + shift);
    });
}

struct CgResult {
    ScalarField x;
    int iterations = 0;
    double residual = 0.0;            // ||A x - b|| / ||b|| (recursive residual)
    std::vector<double> history;      // relative residual after each iteration, index 0 = start
    std::vector<double> precond_norm; // (r, M^{-1} r) after each iteration
};

struct CgOptions {
    double tol = 1e-10;
    int maxit = 500;
};

/// Solves A x = b on the zero-mean subspace. Throws SolverError if maxit is reached.
inline CgResult cg_solve(const SpdOperator& op, const ScalarField& b, CgOptions opt = {}) {
    op.validate();
    if (!(opt.tol > 0.0)) throw UsageError("cg_solve: tol must be > 0");
    if (opt.maxit < 1) throw UsageError("cg_solve: maxit must be >= 1");
    const double bnorm = norm_l2(b);
    const double bmean = mean(b);
    if (std::abs(bmean) > 1e-10 * std::max(1.0, b.max_abs())) {
        throw UsageError("cg_solve: right-hand side has nonzero mean " + std::to_string(bmean));
    }

    CgResult res;
    res.x = ScalarField(b.grid());
    res.history.push_back(bnorm == 0.0 ? 0.0 : 1.0);
    if (bnorm == 0.0) return res;

    ScalarField r = project_zero_mean(b);
    ScalarField z = apply_preconditioner(op, r);
    ScalarField p = z;
    double rz = inner(r, z);
    res.precond_norm.push_back(rz);

    for (int it = 1; it <= opt.maxit; ++it) {
        const ScalarField q = apply_spd(op, p);
        const double pq = inner(p, q);
        if (!(pq > 0.0)) {
            throw SolverError("cg_solve: operator not positive definite along search direction", res.residual, it);
        }
        const double step = rz / pq;
        res.x.axpy(step, p);
        r.axpy(-step, q);
        res.iterations = it;
        res.residual = norm_l2(r) / bnorm;
        res.history.push_back(res.residual);
        if (res.residual <= opt.tol) {
            res.precond_norm.push_back(inner(r, apply_preconditioner(op, r)));
            return res;
        }
        z = apply_preconditioner(op, r);
        const double rz_next = inner(r, z);
        res.precond_norm.push_back(rz_next);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    throw SolverError("cg_solve: no convergence in " + std::to_string(opt.maxit) + " iterations (residual " +
                          std::to_string(res.residual) + ")",
                      res.residual, res.iterations);
}

} // namespace vchr
