#pragma once

// Exact diagonalization of the grid Laplacian: a real FFT for periodic grids and a type-I
// cosine transform (FFTW REDFT00) for vertex-centered no-flux grids. The eigenvalues are
// those of the discrete stencil in grid.hpp, not of the continuous operator, so
// laplacian(inv_laplacian(f)) == f up to round-off.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "vchr/errors.hpp"
#include "vchr/grid.hpp"

namespace vchr {

enum class TransformKind { RealPeriodic, Cosine };

namespace detail {

// FFTW planning and plan destruction are not thread-safe; execution with the new-array
// interface is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwPlans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    FftwPlans() = default;
    FftwPlans(const FftwPlans&) = delete;
    FftwPlans& operator=(const FftwPlans&) = delete;
    ~FftwPlans() {
        std::lock_guard lock(fftw_planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

/// 4 sin^2(theta/2) / h^2 == (2 - 2 cos theta) / h^2, without the cancellation near theta = 0.
inline double stencil_symbol(double theta, double h) {
    const double s = std::sin(0.5 * theta);
    return 4.0 * s * s / (h * h);
}

} // namespace detail

class SpectralPlan {
public:
    SpectralPlan() = default;

    explicit SpectralPlan(const GridSpec& grid) : grid_(grid) {
        grid_.validate();
        kind_ = grid.bc == BoundaryKind::Periodic ? TransformKind::RealPeriodic : TransformKind::Cosine;
        auto plans = std::make_shared<detail::FftwPlans>();
        const int rank = grid.dim;
        int dims[3];
        for (int a = 0; a < rank; ++a) dims[a] = grid.n[a];
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

        if (kind_ == TransformKind::RealPeriodic) {
            modes_ = 1;
            for (int a = 0; a < rank - 1; ++a) modes_ *= grid.n[a];
            modes_ *= grid.n[rank - 1] / 2 + 1;
            std::vector<double> real(grid.size());
            std::vector<std::complex<double>> spec(modes_);
            auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
            std::lock_guard lock(detail::fftw_planner_mutex());
            plans->forward = fftw_plan_dft_r2c(rank, dims, real.data(), cplx, flags);
            plans->backward = fftw_plan_dft_c2r(rank, dims, cplx, real.data(), flags);
        } else {
            modes_ = grid.size();
            std::vector<double> a(grid.size()), b(grid.size());
            fftw_r2r_kind kinds[3] = {FFTW_REDFT00, FFTW_REDFT00, FFTW_REDFT00};
            std::lock_guard lock(detail::fftw_planner_mutex());
            plans->forward = fftw_plan_r2r(rank, dims, a.data(), b.data(), kinds, flags);
            plans->backward = plans->forward == nullptr ? nullptr
                                                        : fftw_plan_r2r(rank, dims, a.data(), b.data(), kinds, flags);
        }
        if (!plans->forward || !plans->backward) throw std::runtime_error("FFTW planning failed");
        plans_ = std::move(plans);
        build_eigenvalues();
    }

    const GridSpec& grid() const noexcept { return grid_; }
    TransformKind kind() const noexcept { return kind_; }

    /// Eigenvalues of the grid Laplacian in transform layout; entry 0 is the constant mode.
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }

    /// Applies s(lambda) to f mode by mode. `symbol` is never called for the constant mode,
    /// which is mapped to zero, so the result always has zero mean.
    template <class Symbol>
    ScalarField apply_symbol(const ScalarField& f, Symbol&& symbol) const {
        check_grid(f);
        ScalarField out(grid_);
        if (kind_ == TransformKind::RealPeriodic) {
            std::vector<double> real(f.values().begin(), f.values().end());
            std::vector<std::complex<double>> spec(modes_);
            auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
            fftw_execute_dft_r2c(plans_->forward, real.data(), cplx);
            const double norm = 1.0 / static_cast<double>(grid_.size());
            spec[0] = 0.0;
            for (std::size_t m = 1; m < modes_; ++m) spec[m] *= symbol(eigenvalues_[m]) * norm;
            fftw_execute_dft_c2r(plans_->backward, cplx, out.storage().data());
        } else {
            std::vector<double> in(f.values().begin(), f.values().end());
            std::vector<double> coef(modes_);
            fftw_execute_r2r(plans_->forward, in.data(), coef.data());
            double norm = 1.0;
            for (int a = 0; a < grid_.dim; ++a) norm *= 2.0 * (grid_.n[a] - 1);
            norm = 1.0 / norm;
            coef[0] = 0.0;
            for (std::size_t m = 1; m < modes_; ++m) coef[m] *= symbol(eigenvalues_[m]) * norm;
            fftw_execute_r2r(plans_->backward, coef.data(), out.storage().data());
        }
        return out;
    }

    /// Forward transform followed by the inverse, constant mode kept. Used to audit the
    /// transform pair itself.
    ScalarField round_trip(const ScalarField& f) const {
        const double m = mean(f);
        ScalarField r = apply_symbol(f, [](double) { return 1.0; });
        r += m;
        return r;
    }

private:
    void check_grid(const ScalarField& f) const {
        if (!plans_) throw UsageError("spectral plan is not initialized");
        if (!(f.grid() == grid_)) throw UsageError("field grid does not match spectral plan grid");
    }

    void build_eigenvalues() {
        const int rank = grid_.dim;
        // per-axis symbols, then the separable sum over the transform layout
        std::vector<std::vector<double>> axis(rank);
        std::vector<int> extent(rank);
        for (int a = 0; a < rank; ++a) {
            const double h = grid_.spacing(a);
            const int na = grid_.n[a];
            const bool half = kind_ == TransformKind::RealPeriodic && a == rank - 1;
            extent[a] = half ? na / 2 + 1 : na;
            axis[a].resize(extent[a]);
            for (int k = 0; k < extent[a]; ++k) {
                const double theta = kind_ == TransformKind::RealPeriodic
                                         ? 2.0 * std::numbers::pi * k / na
                                         : std::numbers::pi * k / (na - 1);
                axis[a][k] = k == 0 ? 0.0 : -detail::stencil_symbol(theta, h);
            }
        }
        eigenvalues_.assign(modes_, 0.0);
        for (std::size_t m = 0; m < modes_; ++m) {
            std::size_t rest = m;
            double lam = 0.0;
            for (int a = rank - 1; a >= 0; --a) {
                lam += axis[a][rest % extent[a]];
                rest /= extent[a];
            }
            eigenvalues_[m] = lam;
        }
    }

    GridSpec grid_;
    TransformKind kind_ = TransformKind::RealPeriodic;
    std::size_t modes_ = 0;
    std::vector<double> eigenvalues_;
    std::shared_ptr<const detail::FftwPlans> plans_;
};

/// Zero-mean solution v of lap v = f. Requires |mean(f)| <= 1e-10 * max(1, max|f|).
inline ScalarField inv_laplacian(const SpectralPlan& plan, const ScalarField& f) {
    const double m = mean(f);
    const double limit = 1e-10 * std::max(1.0, f.max_abs());
    if (std::abs(m) > limit) {
        throw UsageError("inv_laplacian: right-hand side has mean " + std::to_string(m) +
                         " (limit " + std::to_string(limit) + ")");
    }
    return plan.apply_symbol(f, [](double lam) { return 1.0 / lam; });
}

} // namespace vchr
