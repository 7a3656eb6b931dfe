#pragma once

// Test helpers: seeded random fields and dense assembly of linear field maps.

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <tuple>

#include "vchr/vchr.hpp"

namespace vchr::test {

inline ScalarField random_field(const GridSpec& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    ScalarField f(g);
    for (double& v : f.values()) v = u(rng);
    return f;
}

inline ScalarField random_zero_mean(const GridSpec& g, std::uint64_t seed) {
    return project_zero_mean(random_field(g, seed));
}

inline Eigen::VectorXd to_vector(const ScalarField& f) {
    return Eigen::Map<const Eigen::VectorXd>(f.values().data(), static_cast<Eigen::Index>(f.size()));
}

inline ScalarField from_vector(const GridSpec& g, const Eigen::VectorXd& v) {
    return ScalarField(g, std::vector<double>(v.data(), v.data() + v.size()));
}

/// Dense matrix of a linear map on grid functions, column j = map(e_j).
inline Eigen::MatrixXd assemble(const GridSpec& g, const std::function<ScalarField(const ScalarField&)>& map) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd m(n, n);
    ScalarField e(g);
    for (Eigen::Index j = 0; j < n; ++j) {
        e[j] = 1.0;
        m.col(j) = to_vector(map(e));
        e[j] = 0.0;
    }
    return m;
}

/// Diagonal matrix of quadrature weights, so that inner(f, g) = f^T W g.
inline Eigen::VectorXd quadrature_weights(const GridSpec& g) {
    ScalarField one(g, 1.0);
    Eigen::VectorXd w(static_cast<Eigen::Index>(g.size()));
    ScalarField e(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
        e[j] = 1.0;
        w[static_cast<Eigen::Index>(j)] = inner(e, one);
        e[j] = 0.0;
    }
    return w;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }

// Readable names for Combine()-parameterized tests, e.g. "noflux_bdf2_double_well".
inline std::string label(BoundaryKind b) { return std::string(to_string(b)); }
inline std::string label(Scheme s) { return std::string(to_string(s)); }
inline std::string label(PotentialKind k) { return std::string(to_string(k)); }
inline std::string label(bool bdf) { return bdf ? "bdf2" : "cn2"; }
inline std::string label(int dim) { return std::to_string(dim) + "d"; }
inline std::string label(double beta) {
    std::string s = "beta" + format_real(beta);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

struct ParamName {
    template <class Tuple>
    std::string operator()(const ::testing::TestParamInfo<Tuple>& info) const {
        std::string out;
        std::apply([&](const auto&... v) { ((out += (out.empty() ? "" : "_") + label(v)), ...); }, info.param);
        return out;
    }
};

} // namespace vchr::test
