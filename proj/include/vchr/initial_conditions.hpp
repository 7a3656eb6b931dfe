#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "vchr/errors.hpp"
#include "vchr/grid.hpp"
#include "vchr/snapshot.hpp"
#include "vchr/stepper.hpp"

namespace vchr {

enum class InitialKind { TwoBubbles, RandomPerturbation, CosProduct, FromFile };

inline std::string_view to_string(InitialKind k) {
    switch (k) {
    case InitialKind::TwoBubbles: return "two_bubbles";
    case InitialKind::RandomPerturbation: return "random";
    case InitialKind::CosProduct: return "cos_product";
    case InitialKind::FromFile: return "file";
    }
    return "?";
}

inline InitialKind parse_initial(std::string_view s) {
    if (s == "two_bubbles") return InitialKind::TwoBubbles;
    if (s == "random") return InitialKind::RandomPerturbation;
    if (s == "cos_product") return InitialKind::CosProduct;
    if (s == "file") return InitialKind::FromFile;
    throw UsageError("unknown initial condition '" + std::string(s) +
                     "' (expected two_bubbles|random|cos_product|file)");
}

struct InitialCondition {
    InitialKind kind = InitialKind::TwoBubbles;
    double phibar = 0.5;       // random: mean value
    double amplitude = 0.001;  // random: noise amplitude
    std::uint64_t seed = 1;    // random: generator seed
    std::string path;          // file: snapshot to load

    friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

/// Uniform double in [0, 1) from the top 53 bits, identical on every standard library.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Two touching discs (spheres in 3D) of radius 0.2 centered at x = 0.71 and x = 0.29.
inline ScalarField two_bubbles(const GridSpec& g, double eps) {
    if (g.dim < 2) throw UsageError("two_bubbles needs dim >= 2");
    ScalarField f(g);
    for (int i = 0; i < g.n[0]; ++i) {
        for (int j = 0; j < g.n[1]; ++j) {
            for (int k = 0; k < g.n[2]; ++k) {
                const double x = g.coordinate(0, i);
                const double y = g.coordinate(1, j);
                const double z2 = g.dim == 3 ? std::pow(g.coordinate(2, k) - 0.5, 2) : 0.0;
                const double r1 = std::sqrt((x - 0.71) * (x - 0.71) + (y - 0.5) * (y - 0.5) + z2);
                const double r2 = std::sqrt((x - 0.29) * (x - 0.29) + (y - 0.5) * (y - 0.5) + z2);
                f.at(i, j, k) = 0.5 * (1.0 + std::max(std::tanh((0.2 - r1) / eps), std::tanh((0.2 - r2) / eps)));
            }
        }
    }
    return f;
}

/// phibar + amplitude * (u - mean u), u uniform on [0, 1); the mean is exactly phibar up to round-off.
inline ScalarField random_perturbation(const GridSpec& g, double phibar, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ScalarField u(g);
    for (double& v : u.values()) v = unit_uniform(rng);
    u = project_zero_mean(std::move(u));
    u *= amplitude;
    u += phibar;
    return u;
}

/// 0.5 (1 + cos(2 pi x) cos(2 pi y))
inline ScalarField cos_product(const GridSpec& g) {
    if (g.dim < 2) throw UsageError("cos_product needs dim >= 2");
    ScalarField f(g);
    const double tau = 2.0 * std::numbers::pi;
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k)
                f.at(i, j, k) = 0.5 * (1.0 + std::cos(tau * g.coordinate(0, i)) * std::cos(tau * g.coordinate(1, j)));
    return f;
}

inline ScalarField make_ic(const InitialCondition& ic, const GridSpec& grid, const ModelParams& model) {
    grid.validate();
    switch (ic.kind) {
    case InitialKind::TwoBubbles: return two_bubbles(grid, model.eps);
    case InitialKind::RandomPerturbation: return random_perturbation(grid, ic.phibar, ic.amplitude, ic.seed);
    case InitialKind::CosProduct: return cos_product(grid);
    case InitialKind::FromFile: {
        ScalarField f = snapshot_read(ic.path);
        if (!(f.grid() == grid)) throw IoError("initial snapshot '" + ic.path + "' does not match the run grid");
        return f;
    }
    }
    throw UsageError("unhandled initial condition kind");
}

} // namespace vchr
