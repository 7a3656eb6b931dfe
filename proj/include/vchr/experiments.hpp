#pragma once

// Experiment drivers: single runs with energy logs and snapshots, invariant audits,
// temporal refinement studies and (alpha, beta) sweeps.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vchr/config.hpp"
#include "vchr/diagnostics.hpp"
#include "vchr/errors.hpp"
#include "vchr/initial_conditions.hpp"
#include "vchr/run.hpp"
#include "vchr/snapshot.hpp"
#include "vchr/spectral.hpp"
#include "vchr/stepper.hpp"

namespace vchr {

// ---------------------------------------------------------------------------------------------
// Energy CSV

inline constexpr const char* energy_csv_header =
    "step,t,E_original,E_transformed,E_discrete,identity_residual,mass_drift,psi_mean,U_deviation,cg_iters";

inline std::string energy_csv_row(const EnergyRecord& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d", r.step, r.t,
                  r.E_original, r.E_transformed, r.E_discrete, r.identity_residual, r.mass_drift, r.psi_mean,
                  r.U_deviation, r.cg_iterations);
    return buf;
}

/// Parses rows written by energy_csv_row. dissipation_lhs/rhs and energy_change are not part
/// of the file and stay zero.
inline std::vector<EnergyRecord> read_energy_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != energy_csv_header) throw FormatError("energy csv: bad header", 0);
    std::vector<EnergyRecord> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        if (cells.size() != 10) throw FormatError("energy csv: expected 10 columns", lineno);
        EnergyRecord r;
        try {
            r.step = std::stoi(cells[0]);
            r.t = detail::parse_real("t", cells[1]);
            r.E_original = detail::parse_real("E_original", cells[2]);
            r.E_transformed = detail::parse_real("E_transformed", cells[3]);
            r.E_discrete = detail::parse_real("E_discrete", cells[4]);
            r.identity_residual = detail::parse_real("identity_residual", cells[5]);
            r.mass_drift = detail::parse_real("mass_drift", cells[6]);
            r.psi_mean = detail::parse_real("psi_mean", cells[7]);
            r.U_deviation = detail::parse_real("U_deviation", cells[8]);
            r.cg_iterations = std::stoi(cells[9]);
        } catch (const std::exception& e) {
            throw FormatError(std::string("energy csv: ") + e.what(), lineno);
        }
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Invariant audit

struct AuditLimits {
    double energy_slack = 1e-10;   // relative increase tolerated between consecutive records
    double identity_bound = 1e-8;  // max identity_residual
    double mass_bound = 1e-9;      // |drift| <= mass_bound (1 + |mass0|)
    double psi_mean_bound = 1e-9;

    static AuditLimits for_tolerance(double cg_tol) {
        AuditLimits l;
        l.identity_bound = 100.0 * cg_tol;
        return l;
    }
};

struct AuditReport {
    bool ok = true;
    double max_identity_residual = 0.0;
    double max_mass_drift = 0.0;
    double max_psi_mean = 0.0;
    double max_energy_increase = 0.0; // largest relative energy increase over one step (0 if none)
    std::vector<std::string> failures;
};

inline AuditReport audit_records(const std::vector<EnergyRecord>& records, double mass0, const AuditLimits& lim) {
    AuditReport rep;
    const auto fail = [&](const std::string& msg) {
        rep.ok = false;
        if (rep.failures.size() < 20) rep.failures.push_back(msg);
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        const EnergyRecord& r = records[i];
        const std::string at = "step " + std::to_string(r.step) + ": ";
        if (!std::isfinite(r.E_discrete) || !std::isfinite(r.E_original)) fail(at + "non-finite energy");
        rep.max_identity_residual = std::max(rep.max_identity_residual, r.identity_residual);
        rep.max_mass_drift = std::max(rep.max_mass_drift, std::abs(r.mass_drift));
        rep.max_psi_mean = std::max(rep.max_psi_mean, std::abs(r.psi_mean));
        if (!(r.identity_residual <= lim.identity_bound)) fail(at + "identity residual " + format_real(r.identity_residual));
        if (!(std::abs(r.mass_drift) <= lim.mass_bound * (1.0 + std::abs(mass0))))
            fail(at + "mass drift " + format_real(r.mass_drift));
        if (!(std::abs(r.psi_mean) <= lim.psi_mean_bound)) fail(at + "psi mean " + format_real(r.psi_mean));
        if (i > 0) {
            const double rel = r.energy_change;
            rep.max_energy_increase = std::max(rep.max_energy_increase, rel);
            if (!(rel <= lim.energy_slack)) fail(at + "discrete energy increased by " + format_real(rel));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Single runs

struct ExperimentResult {
    std::vector<EnergyRecord> records; // every step, index 0 = initial state
    StepperState final_state;
    AuditReport audit;
};

namespace detail {

inline std::string snapshot_name(const std::string& dir, int step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "phi_%07d.vchr", step);
    return (std::filesystem::path(dir) / buf).string();
}

} // namespace detail

/// Runs `cfg`, keeping every record in memory. Output paths are opened before any compute.
inline ExperimentResult run_experiment(const RunConfig& cfg) {
    cfg.validate();
    std::ofstream csv;
    if (!cfg.output.energy_csv.empty()) {
        csv.open(cfg.output.energy_csv, std::ios::trunc);
        if (!csv) throw IoError("cannot open energy csv '" + cfg.output.energy_csv + "' for writing");
        csv << energy_csv_header << '\n';
    }
    if (!cfg.output.snapshot_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(cfg.output.snapshot_dir, ec);
        const std::string probe = (std::filesystem::path(cfg.output.snapshot_dir) / ".vchr_probe").string();
        std::ofstream p(probe);
        if (ec || !p) throw IoError("snapshot directory '" + cfg.output.snapshot_dir + "' is not writable");
        p.close();
        std::filesystem::remove(probe, ec);
    }

    const SpectralPlan plan(cfg.grid);
    const ScalarField phi0 = make_ic(cfg.ic, cfg.grid, cfg.model);
    StepperState state = init_state(cfg.model, cfg.grid, phi0);

    ExperimentResult res;
    res.records.push_back(make_record(cfg.model, cfg.scheme, nullptr, state, plan));
    if (csv.is_open()) csv << energy_csv_row(res.records.back()) << '\n';
    const bool snaps = !cfg.output.snapshot_dir.empty();
    if (snaps) snapshot_write(state.phi_n, detail::snapshot_name(cfg.output.snapshot_dir, 0));

    const int n = cfg.steps();
    res.final_state = run(std::move(state), cfg.model, cfg.scheme, n, plan,
                          [&](int step, const StepperState& s, const EnergyRecord& r) {
                              res.records.push_back(r);
                              if (csv.is_open() && step % cfg.output.every == 0) csv << energy_csv_row(r) << '\n';
                              const bool cadence = cfg.output.snapshot_every > 0 && step % cfg.output.snapshot_every == 0;
                              if (snaps && (cadence || step == n))
                                  snapshot_write(s.phi_n, detail::snapshot_name(cfg.output.snapshot_dir, step));
                          });
    if (csv.is_open()) {
        csv.flush();
        if (!csv) throw IoError("write to '" + cfg.output.energy_csv + "' failed");
    }
    res.audit = audit_records(res.records, res.final_state.mass0, AuditLimits::for_tolerance(cfg.scheme.cg_tol));
    return res;
}

// ---------------------------------------------------------------------------------------------
// Temporal refinement

struct ConvergenceRow {
    int k = 0;
    double dt = 0.0;
    double error_phi = NAN; // || phi(dt_{k-1}) - phi(dt_k) || at t_end; NaN for k = 0
    double error_U = NAN;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::optional<double> order_phi; // unset when errors sit at round-off
    std::optional<double> order_U;
};

/// Least-squares slope of -log2(error) against k. Unset if any error is below `floor`.
inline std::optional<double> fitted_order(const std::vector<int>& ks, const std::vector<double>& errors,
                                          double floor) {
    if (ks.size() < 2) return std::nullopt;
    double sk = 0, sy = 0, skk = 0, sky = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (!(errors[i] > floor) || !std::isfinite(errors[i])) return std::nullopt;
        const double y = std::log2(errors[i]);
        sk += ks[i];
        sy += y;
        skk += double(ks[i]) * ks[i];
        sky += ks[i] * y;
    }
    const double m = static_cast<double>(ks.size());
    const double denom = m * skk - sk * sk;
    return -(m * sky - sk * sy) / denom;
}

/// Runs one problem at dt0 / 2^k and compares adjacent levels at t_end. Levels are cached,
/// so extending k_max only computes the new runs.
class ConvergenceStudy {
public:
    ConvergenceStudy(RunConfig base, double dt0, double t_end) : base_(std::move(base)), dt0_(dt0), t_end_(t_end) {
        base_.t_end = t_end;
        base_.n_steps.reset();
        base_.scheme.dt = dt0;
        base_.output = {};
        base_.validate();
        plan_ = SpectralPlan(base_.grid);
        phi0_ = make_ic(base_.ic, base_.grid, base_.model);
    }

    double dt(int k) const { return dt0_ / std::ldexp(1.0, k); }

    const StepperState& solution(int k) {
        auto it = cache_.find(k);
        if (it != cache_.end()) return it->second;
        SchemeConfig sc = base_.scheme;
        sc.dt = dt(k);
        const long long steps = std::llround(t_end_ / sc.dt);
        if (steps < 1 || std::abs(steps * sc.dt - t_end_) > 1e-9 * t_end_)
            throw UsageError("convergence: t_end is not a multiple of dt at level " + std::to_string(k));
        try {
            StepperState s = run(init_state(base_.model, base_.grid, phi0_), base_.model, sc,
                                 static_cast<int>(steps), plan_);
            ++runs_;
            return cache_.emplace(k, std::move(s)).first->second;
        } catch (const std::exception& e) {
            throw std::runtime_error("convergence: run at level k=" + std::to_string(k) + " failed: " + e.what());
        }
    }

    ConvergenceTable table(int k_max) {
        if (k_max < 1) throw UsageError("convergence: k_max must be >= 1");
        ConvergenceTable t;
        std::vector<int> ks;
        std::vector<double> ep, eu;
        double scale = 0.0;
        for (int k = 0; k <= k_max; ++k) {
            ConvergenceRow row;
            row.k = k;
            row.dt = dt(k);
            const StepperState& fine = solution(k);
            scale = std::max(scale, norm_l2(fine.phi_n) + norm_l2(fine.U_n));
            if (k > 0) {
                const StepperState& coarse = solution(k - 1);
                row.error_phi = norm_l2(coarse.phi_n - fine.phi_n);
                row.error_U = norm_l2(coarse.U_n - fine.U_n);
                ks.push_back(k);
                ep.push_back(row.error_phi);
                eu.push_back(row.error_U);
            }
            t.rows.push_back(row);
        }
        const double floor = 1e-12 * std::max(scale, 1e-300);
        t.order_phi = fitted_order(ks, ep, floor);
        t.order_U = fitted_order(ks, eu, floor);
        return t;
    }

    int runs_performed() const noexcept { return runs_; }
    const SpectralPlan& plan() const noexcept { return plan_; }
    const RunConfig& config() const noexcept { return base_; }

private:
    RunConfig base_;
    double dt0_;
    double t_end_;
    SpectralPlan plan_;
    ScalarField phi0_;
    std::map<int, StepperState> cache_;
    int runs_ = 0;
};

/// Convenience form: refinement of `base` (which must set t_end) from its own dt.
inline ConvergenceTable convergence_study(const RunConfig& base, int k_max) {
    if (k_max < 3) throw UsageError("convergence: k_max must be >= 3");
    if (!base.t_end) throw UsageError("convergence: config must set t_end");
    ConvergenceStudy study(base, base.scheme.dt, *base.t_end);
    return study.table(k_max);
}

// ---------------------------------------------------------------------------------------------
// Parameter sweeps

/// `energy.csv` -> `energy_a0.5_b1.csv`
inline std::string sweep_path(const std::string& path, double alpha, double beta) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    const std::string stem = p.stem().string() + "_a" + format_real(alpha) + "_b" + format_real(beta);
    return (p.parent_path() / (stem + p.extension().string())).string();
}

struct SweepEntry {
    double alpha;
    double beta;
    ExperimentResult result;
};

inline std::vector<SweepEntry> run_sweep(const RunConfig& base, const std::vector<double>& alphas,
                                         const std::vector<double>& betas) {
    std::vector<SweepEntry> out;
    for (double a : alphas) {
        for (double b : betas) {
            RunConfig c = base;
            c.model.alpha = a;
            c.model.beta = b;
            c.output.energy_csv = sweep_path(base.output.energy_csv, a, b);
            if (!base.output.snapshot_dir.empty())
                c.output.snapshot_dir = (std::filesystem::path(base.output.snapshot_dir) /
                                         ("a" + format_real(a) + "_b" + format_real(b)))
                                            .string();
            out.push_back({a, b, run_experiment(c)});
        }
    }
    return out;
}

} // namespace vchr
