#pragma once

// Uniform tensor grids, grid functions and the second-order Laplacian.
//
// Layout is row-major with the last axis fastest. Unused axes (dim < 3) are carried as
// extent-1 axes so every kernel runs the same triple loop. All reductions are sequential
// in storage order, which makes results bit-reproducible.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vchr/errors.hpp"

namespace vchr {

enum class BoundaryKind { Periodic, NoFlux };

inline std::string_view to_string(BoundaryKind bc) {
    return bc == BoundaryKind::Periodic ? "periodic" : "noflux";
}

inline BoundaryKind parse_boundary(std::string_view s) {
    if (s == "periodic") return BoundaryKind::Periodic;
    if (s == "noflux") return BoundaryKind::NoFlux;
    throw UsageError("unknown boundary kind '" + std::string(s) + "' (expected periodic|noflux)");
}

/// Uniform grid on the box [0, L0] x ... x [0, L_{dim-1}].
///
/// Periodic grids hold n equispaced points x_j = j*h with h = L/n (the point at L is the
/// wrap image of x_0). No-flux grids are vertex-centered: n points including both faces,
/// h = L/(n-1), with mirror ghosts f_{-1} = f_1 at the faces.
struct GridSpec {
    int dim = 2;
    std::array<int, 3> n{1, 1, 1};
    std::array<double, 3> length{1.0, 1.0, 1.0};
    BoundaryKind bc = BoundaryKind::Periodic;

    static constexpr int min_points = 4;

    static GridSpec make(int dim, std::span<const int> points, std::span<const double> lengths,
                         BoundaryKind bc) {
        if (dim < 1 || dim > 3) throw UsageError("grid dimension must be 1, 2 or 3");
        if (static_cast<int>(points.size()) != dim || static_cast<int>(lengths.size()) != dim)
            throw UsageError("grid needs one point count and one length per axis");
        GridSpec g;
        g.dim = dim;
        g.bc = bc;
        for (int a = 0; a < dim; ++a) {
            g.n[a] = points[a];
            g.length[a] = lengths[a];
        }
        g.validate();
        return g;
    }

    /// Square/cubic grid with the same count and length on every axis.
    static GridSpec cube(int dim, int points, double len, BoundaryKind bc) {
        std::array<int, 3> p{points, points, points};
        std::array<double, 3> l{len, len, len};
        return make(dim, std::span<const int>(p.data(), dim), std::span<const double>(l.data(), dim), bc);
    }

    void validate() const {
        if (dim < 1 || dim > 3) throw UsageError("grid dimension must be 1, 2 or 3");
        for (int a = 0; a < dim; ++a) {
            if (n[a] < min_points)
                throw UsageError("grid needs at least " + std::to_string(min_points) + " points per axis");
            if (!(length[a] > 0.0) || !std::isfinite(length[a]))
                throw UsageError("grid lengths must be positive and finite");
        }
        for (int a = dim; a < 3; ++a) {
            if (n[a] != 1) throw UsageError("unused grid axes must have extent 1");
        }
    }

    double spacing(int axis) const {
        if (axis >= dim) return 1.0;
        return bc == BoundaryKind::Periodic ? length[axis] / n[axis] : length[axis] / (n[axis] - 1);
    }

    std::size_t size() const {
        return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) * static_cast<std::size_t>(n[2]);
    }

    /// |Omega|
    double volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= length[a];
        return v;
    }

    double coordinate(int axis, int index) const { return index * spacing(axis); }

    /// Quadrature weight of point `index` along `axis`, relative to h (trapezoid at no-flux faces).
    double axis_weight(int axis, int index) const {
        if (axis >= dim || bc == BoundaryKind::Periodic) return 1.0;
        return (index == 0 || index == n[axis] - 1) ? 0.5 : 1.0;
    }

    double cell_volume() const {
        double w = 1.0;
        for (int a = 0; a < dim; ++a) w *= spacing(a);
        return w;
    }

    std::array<std::size_t, 3> strides() const {
        return {static_cast<std::size_t>(n[1]) * n[2], static_cast<std::size_t>(n[2]), 1};
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Real grid function; one value per grid point.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const GridSpec& grid, double value = 0.0) : grid_(grid), data_(grid.size(), value) {}
    ScalarField(const GridSpec& grid, std::vector<double> data) : grid_(grid), data_(std::move(data)) {
        if (data_.size() != grid_.size()) throw UsageError("field data length does not match grid size");
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    double& at(int i, int j = 0, int k = 0) noexcept {
        const auto s = grid_.strides();
        return data_[i * s[0] + j * s[1] + k];
    }
    double at(int i, int j = 0, int k = 0) const noexcept {
        const auto s = grid_.strides();
        return data_[i * s[0] + j * s[1] + k];
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }

    ScalarField& operator+=(const ScalarField& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    ScalarField& operator*=(double s) noexcept {
        for (double& v : data_) v *= s;
        return *this;
    }
    ScalarField& operator+=(double s) noexcept {
        for (double& v : data_) v += s;
        return *this;
    }
    /// this += s * x
    ScalarField& axpy(double s, const ScalarField& x) {
        check_same(x);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * x.data_[i];
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
    friend ScalarField operator+(ScalarField a, double s) { return a += s; }
    friend ScalarField operator+(double s, ScalarField a) { return a += s; }

    /// Pointwise product.
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
        a.check_same(b);
        ScalarField r(a.grid_);
        for (std::size_t i = 0; i < a.data_.size(); ++i) r.data_[i] = a.data_[i] * b.data_[i];
        return r;
    }

    void check_same(const ScalarField& o) const {
        if (!(grid_ == o.grid_)) throw UsageError("fields live on different grids");
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    double max_abs() const noexcept {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    GridSpec grid_;
    std::vector<double> data_;
};

/// Linear combination a*x + b*y.
inline ScalarField lincomb(double a, const ScalarField& x, double b, const ScalarField& y) {
    x.check_same(y);
    ScalarField r(x.grid());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a * x[i] + b * y[i];
    return r;
}

template <class Fn>
ScalarField map(const ScalarField& f, Fn&& fn) {
    ScalarField r(f.grid());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = fn(f[i]);
    return r;
}

namespace detail {

template <class Fn>
double weighted_sum(const GridSpec& g, Fn&& term) {
    const auto s = g.strides();
    double total = 0.0;
    for (int i = 0; i < g.n[0]; ++i) {
        const double wi = g.axis_weight(0, i);
        for (int j = 0; j < g.n[1]; ++j) {
            const double wij = wi * g.axis_weight(1, j);
            const std::size_t row = i * s[0] + j * s[1];
            for (int k = 0; k < g.n[2]; ++k) total += wij * g.axis_weight(2, k) * term(row + k);
        }
    }
    return total * g.cell_volume();
}

} // namespace detail

/// (f, g) with the grid's quadrature weights.
inline double inner(const ScalarField& f, const ScalarField& g) {
    f.check_same(g);
    return detail::weighted_sum(f.grid(), [&](std::size_t i) { return f[i] * g[i]; });
}

inline double integral(const ScalarField& f) {
    return detail::weighted_sum(f.grid(), [&](std::size_t i) { return f[i]; });
}

inline double norm_l2(const ScalarField& f) { return std::sqrt(inner(f, f)); }

inline double mean(const ScalarField& f) { return integral(f) / f.grid().volume(); }

inline ScalarField project_zero_mean(ScalarField f) {
    f += -mean(f);
    return f;
}

/// Second-order (2*dim+1)-point Laplacian. Periodic axes wrap; no-flux axes use mirror ghosts.
inline ScalarField laplacian(const ScalarField& f) {
    const GridSpec& g = f.grid();
    const auto s = g.strides();
    const bool periodic = g.bc == BoundaryKind::Periodic;
    ScalarField out(g);
    for (int a = 0; a < g.dim; ++a) {
        const double inv_h2 = 1.0 / (g.spacing(a) * g.spacing(a));
        const int na = g.n[a];
        const std::size_t sa = s[a];
        for (std::size_t idx = 0; idx < f.size(); ++idx) {
            const int ia = static_cast<int>((idx / sa) % na);
            double left, right;
            if (ia > 0) {
                left = f[idx - sa];
            } else {
                left = periodic ? f[idx + (na - 1) * sa] : f[idx + sa];
            }
            if (ia < na - 1) {
                right = f[idx + sa];
            } else {
                right = periodic ? f[idx - (na - 1) * sa] : f[idx - sa];
            }
            out[idx] += (left - 2.0 * f[idx] + right) * inv_h2;
        }
    }
    return out;
}

/// ||grad f||^2 realized as (-lap f, f). This is the only gradient norm used in the energies.
inline double dirichlet_energy(const ScalarField& f) {
    const ScalarField lf = laplacian(f);
    return -inner(lf, f);
}

} // namespace vchr
