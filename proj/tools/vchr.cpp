// vchr: command-line driver.
//
//   vchr run <config>
//   vchr converge <config> --kmax K
//   vchr sweep <config> --alpha a1,a2 --beta b1,b2
//   vchr inspect <snapshot>
//
// Exit status: 0 success (invariants held), 2 invariant violation, 1 any other error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "vchr/vchr.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_violation = 2;

void print_audit(const std::string& label, const vchr::AuditReport& a) {
    std::printf("%s: %s  max identity residual %.3e, max mass drift %.3e, max |mean psi| %.3e\n", label.c_str(),
                a.ok ? "invariants held" : "INVARIANT VIOLATION", a.max_identity_residual, a.max_mass_drift,
                a.max_psi_mean);
    for (const auto& f : a.failures) std::printf("  %s\n", f.c_str());
}

int cmd_run(const std::string& path) {
    const vchr::RunConfig cfg = vchr::load_config(path);
    const auto res = vchr::run_experiment(cfg);
    const auto& last = res.records.back();
    std::printf("steps %d  t %.6g  E_discrete %.12g -> %.12g  E_original %.12g\n", last.step, last.t,
                res.records.front().E_discrete, last.E_discrete, last.E_original);
    print_audit("audit", res.audit);
    return res.audit.ok ? exit_ok : exit_violation;
}

int cmd_converge(const std::string& path, int kmax) {
    const vchr::RunConfig cfg = vchr::load_config(path);
    const auto table = vchr::convergence_study(cfg, kmax);
    std::printf("%3s %14s %14s %14s\n", "k", "dt", "err_phi", "err_U");
    bool monotone = true;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        std::printf("%3d %14.6e %14.6e %14.6e\n", r.k, r.dt, r.error_phi, r.error_U);
        if (i >= 2) {
            const auto& p = table.rows[i - 1];
            if (!(r.error_phi < p.error_phi) || !(r.error_U < p.error_U)) monotone = false;
        }
    }
    const auto show = [](const std::optional<double>& o) {
        return o ? std::to_string(*o) : std::string("undefined (errors at round-off)");
    };
    std::printf("order phi: %s\norder U:   %s\n", show(table.order_phi).c_str(), show(table.order_U).c_str());
    // Errors already at round-off carry no ordering information.
    if (!monotone && table.order_phi && table.order_U) {
        std::printf("INVARIANT VIOLATION: Cauchy errors do not decrease monotonically\n");
        return exit_violation;
    }
    return exit_ok;
}

int cmd_sweep(const std::string& path, const std::vector<double>& alphas, const std::vector<double>& betas) {
    const vchr::RunConfig cfg = vchr::load_config(path);
    const auto entries = vchr::run_sweep(cfg, alphas, betas);
    bool ok = true;
    for (const auto& e : entries) {
        const auto& last = e.result.records.back();
        std::printf("alpha %-6g beta %-6g  E_discrete(t=%g) = %.12g\n", e.alpha, e.beta, last.t, last.E_discrete);
        print_audit("  audit", e.result.audit);
        ok = ok && e.result.audit.ok;
    }
    return ok ? exit_ok : exit_violation;
}

int cmd_inspect(const std::string& path) {
    const vchr::ScalarField f = vchr::snapshot_read(path);
    const auto& g = f.grid();
    const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
    std::printf("header  %s\n", vchr::snapshot_header(g).c_str());
    std::printf("points  %zu\n", g.size());
    std::printf("min     %.17g\nmax     %.17g\nmean    %.17g\nl2      %.17g\n", *lo, *hi, vchr::mean(f),
                vchr::norm_l2(f));
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vchr: viscous Cahn-Hilliard with hyperbolic relaxation, IEQ schemes"};
    app.require_subcommand(1);

    std::string config, snapshot;
    int kmax = 4;
    std::vector<double> alphas{0.0, 0.5, 1.0}, betas{0.0, 0.5, 1.0};

    auto* run = app.add_subcommand("run", "run one simulation described by a config file");
    run->add_option("config", config, "config file")->required();

    auto* conv = app.add_subcommand("converge", "temporal refinement study (config must set t_end)");
    conv->add_option("config", config, "config file")->required();
    conv->add_option("--kmax", kmax, "finest level; dt_k = dt / 2^k")->check(CLI::Range(3, 20));

    auto* sweep = app.add_subcommand("sweep", "run the config over a grid of (alpha, beta)");
    sweep->add_option("config", config, "config file")->required();
    sweep->add_option("--alpha", alphas, "comma-separated alpha values")->delimiter(',');
    sweep->add_option("--beta", betas, "comma-separated beta values")->delimiter(',');

    auto* inspect = app.add_subcommand("inspect", "print the header and statistics of a snapshot");
    inspect->add_option("snapshot", snapshot, "snapshot file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_error;
    }

    try {
        if (*run) return cmd_run(config);
        if (*conv) return cmd_converge(config, kmax);
        if (*sweep) return cmd_sweep(config, alphas, betas);
        if (*inspect) return cmd_inspect(snapshot);
    } catch (const vchr::ConsistencyError& e) {
        std::fprintf(stderr, "vchr: invariant violation: %s\n", e.what());
        return exit_violation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "vchr: error: %s\n", e.what());
        return exit_error;
    }
    return exit_error;
}
