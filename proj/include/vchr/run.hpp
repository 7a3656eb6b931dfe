#pragma once

#include <functional>
#include <string>

#include "vchr/diagnostics.hpp"
#include "vchr/errors.hpp"
#include "vchr/spectral.hpp"
#include "vchr/stepper.hpp"

namespace vchr {

using StepObserver = std::function<void(int step, const StepperState&, const EnergyRecord&)>;

/// Advances `n_steps` steps (a BDF2 run starting at step 0 takes its first step with CN2) and
/// reports an EnergyRecord after each one. Single-threaded and deterministic.
inline StepperState run(StepperState state, const ModelParams& params, const SchemeConfig& cfg, int n_steps,
                        const SpectralPlan& plan, const StepObserver& observer = {}) {
    if (n_steps < 1) throw UsageError("run: n_steps must be >= 1");
    params.validate();
    cfg.validate();
    for (int i = 0; i < n_steps; ++i) {
        StepperState next;
        try {
            next = advance(state, params, cfg, plan);
        } catch (const SolverError& e) {
            throw SolverError("step " + std::to_string(state.step + 1) + ": " + e.what(), e.residual(),
                              e.iterations());
        }
        if (!next.phi_n.all_finite() || !next.U_n.all_finite() || !next.psi_n.all_finite()) {
            throw ConsistencyError("step " + std::to_string(next.step) + ": non-finite field values");
        }
        if (observer) observer(next.step, next, make_record(params, cfg, &state, next, plan));
        state = std::move(next);
    }
    return state;
}

} // namespace vchr
