#pragma once

// Bulk free-energy densities and the quadratization quantities U = r(phi), H = 2 r'(phi).

#include <cmath>
#include <string>
#include <string_view>

#include "vchr/errors.hpp"
#include "vchr/grid.hpp"

namespace vchr {

enum class PotentialKind { DoubleWell, FloryHuggins };

inline std::string_view to_string(PotentialKind k) {
    return k == PotentialKind::DoubleWell ? "double_well" : "flory_huggins";
}

inline PotentialKind parse_potential(std::string_view s) {
    if (s == "double_well") return PotentialKind::DoubleWell;
    if (s == "flory_huggins") return PotentialKind::FloryHuggins;
    throw UsageError("unknown potential '" + std::string(s) + "' (expected double_well|flory_huggins)");
}

struct PotentialSpec {
    PotentialKind kind = PotentialKind::DoubleWell;
    double B = 0.0;       // shift making F + B positive
    double theta = 2.5;   // Flory-Huggins mixing parameter
    double sigma = 0.001; // Flory-Huggins regularization width

    static PotentialSpec double_well(double B = 0.0) { return {PotentialKind::DoubleWell, B, 2.5, 0.001}; }
    static PotentialSpec flory_huggins(double theta = 2.5, double sigma = 0.001, double B = 1.0) {
        return {PotentialKind::FloryHuggins, B, theta, sigma};
    }

    void validate() const {
        if (!(B >= 0.0)) throw UsageError("potential shift B must be >= 0");
        if (kind == PotentialKind::FloryHuggins) {
            if (!(B >= 1.0)) throw UsageError("Flory-Huggins potential requires B >= 1");
            if (!(theta > 0.0)) throw UsageError("Flory-Huggins theta must be > 0");
            if (!(sigma > 0.0 && sigma < 0.5)) throw UsageError("Flory-Huggins sigma must lie in (0, 0.5)");
        }
    }

    /// True when U is the signed polynomial root r(x) = x(1-x) instead of sqrt(F + B).
    bool signed_branch() const { return kind == PotentialKind::DoubleWell && B == 0.0; }

    friend bool operator==(const PotentialSpec&, const PotentialSpec&) = default;
};

// The regularized Flory-Huggins density replaces the singular log by its second-order Taylor
// model about sigma (resp. 1 - sigma). The surviving logs, ln(1-x) for x <= sigma and ln x for
// x >= 1 - sigma, have arguments >= 1 - sigma, so every branch is finite on the whole real line.

/// F(x)
inline double F_val(const PotentialSpec& p, double x) {
    if (p.kind == PotentialKind::DoubleWell) {
        const double r = x * (x - 1.0);
        return r * r;
    }
    const double s = p.sigma;
    const double mix = p.theta * x * (1.0 - x);
    if (x >= 1.0 - s) {
        const double y = 1.0 - x;
        return x * std::log(x) + y * y / (2.0 * s) + y * std::log(s) - 0.5 * s + mix;
    }
    if (x <= s) return (1.0 - x) * std::log1p(-x) + x * x / (2.0 * s) + x * std::log(s) - 0.5 * s + mix;
    return x * std::log(x) + (1.0 - x) * std::log1p(-x) + mix;
}

/// f(x) = F'(x)
inline double f_val(const PotentialSpec& p, double x) {
    if (p.kind == PotentialKind::DoubleWell) return 2.0 * x * (x - 1.0) * (2.0 * x - 1.0);
    const double s = p.sigma;
    const double mix = p.theta * (1.0 - 2.0 * x);
    if (x >= 1.0 - s) return std::log(x) + 1.0 - (1.0 - x) / s - std::log(s) + mix;
    if (x <= s) return -std::log1p(-x) - 1.0 + x / s + std::log(s) + mix;
    return std::log(x) - std::log1p(-x) + mix;
}

/// F''(x)
inline double f_prime(const PotentialSpec& p, double x) {
    if (p.kind == PotentialKind::DoubleWell) return 12.0 * x * x - 12.0 * x + 2.0;
    const double s = p.sigma;
    const double mix = -2.0 * p.theta;
    if (x >= 1.0 - s) return 1.0 / x + 1.0 / s + mix;
    if (x <= s) return 1.0 / (1.0 - x) + 1.0 / s + mix;
    return 1.0 / x + 1.0 / (1.0 - x) + mix;
}

/// r(x): the auxiliary variable's pointwise value, r^2 = F + B.
inline double U_val(const PotentialSpec& p, double x) {
    if (p.signed_branch()) return x * (1.0 - x);
    return std::sqrt(F_val(p, x) + p.B);
}

/// H(x) = f(x) / sqrt(F(x) + B), with the double-well B = 0 case taken along the smooth
/// branch r(x) = x(1-x), where H = 2 r'(x) = 2(1 - 2x).
inline double H_val(const PotentialSpec& p, double x) {
    if (p.signed_branch()) return 2.0 * (1.0 - 2.0 * x);
    return f_val(p, x) / std::sqrt(F_val(p, x) + p.B);
}

inline ScalarField U_init(const PotentialSpec& p, const ScalarField& phi0) {
    return map(phi0, [&](double x) { return U_val(p, x); });
}

inline ScalarField H_field(const PotentialSpec& p, const ScalarField& phi) {
    return map(phi, [&](double x) { return H_val(p, x); });
}

/// integral of F(phi) over the domain
inline double bulk_energy(const PotentialSpec& p, const ScalarField& phi) {
    return integral(map(phi, [&](double x) { return F_val(p, x); }));
}

} // namespace vchr
