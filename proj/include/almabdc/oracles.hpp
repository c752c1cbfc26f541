#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "almabdc/errors.hpp"
#include "almabdc/kernel.hpp"
#include "almabdc/rng.hpp"

namespace almabdc {

// ---------------------------------------------------------------------------
// Gaussian mixture reward surface (bandit demo environment).

struct MixtureComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;
    double noise_std = 0.0;
    std::vector<Eigen::VectorXd> arm_grid;

private:
    std::vector<Eigen::MatrixXd> precision_;

public:
    void finalize() {
        if (components.empty()) throw ConfigError("MixtureSpec: no components");
        double total = 0.0;
        precision_.clear();
        for (const auto& c : components) {
            total += c.weight;
            Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
            if (llt.info() != Eigen::Success)
                throw ConfigError("MixtureSpec: singular component covariance");
            precision_.push_back(llt.solve(
                Eigen::MatrixXd::Identity(c.covariance.rows(), c.covariance.cols())));
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("MixtureSpec: weights must sum to 1");
        if (noise_std < 0.0) throw ConfigError("MixtureSpec: noise_std must be >= 0");
    }

    double value(const Eigen::VectorXd& x) const {
        double v = 0.0;
        for (std::size_t i = 0; i < components.size(); ++i) {
            const Eigen::VectorXd d = x - components[i].mean;
            v += components[i].weight * std::exp(-0.5 * d.dot(precision_[i] * d));
        }
        return v;
    }
};

inline double mixture_true(const MixtureSpec& spec, const Eigen::VectorXd& x) {
    return spec.value(x);
}

inline double mixture_reward(const MixtureSpec& spec, const Eigen::VectorXd& x, Rng& rng) {
    double v = spec.value(x);
    if (spec.noise_std > 0.0) v += rng.normal(0.0, spec.noise_std);
    return v;
}

// ---------------------------------------------------------------------------
// Dose-response utility: net clinical benefit of binary efficacy/toxicity.

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct DoseSpec {
    std::vector<double> grid;  // 33 levels {0, 0.25, ..., 8.0} by default
    double eff_intercept = -1.5;
    double eff_slope = 0.9;
    double tox_intercept = -5.0;
    double tox_slope = 1.2;
    double toxicity_penalty = 0.5;  // lambda

    static DoseSpec standard() {
        DoseSpec spec;
        spec.grid.reserve(33);
        for (int i = 0; i < 33; ++i) spec.grid.push_back(0.25 * i);
        return spec;
    }

    std::size_t index_of(double x) const {
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (std::abs(grid[i] - x) < 1e-9) return i;
        throw InputError("DoseSpec: dose is not on the grid");
    }

    double efficacy_prob(double x) const { return logistic(eff_intercept + eff_slope * x); }
    double toxicity_prob(double x) const { return logistic(tox_intercept + tox_slope * x); }
};

/// f(x) = p_eff(x) - lambda * p_tox(x); checks grid membership.
inline double dose_utility(const DoseSpec& spec, double x) {
    spec.index_of(x);
    return spec.efficacy_prob(x) - spec.toxicity_penalty * spec.toxicity_prob(x);
}

struct DoseOutcome {
    bool efficacy = false;
    bool toxicity = false;
};

/// One Bernoulli cohort draw per endpoint. The scalar policy reward is
/// efficacy - lambda * toxicity.
inline DoseOutcome dose_sample(const DoseSpec& spec, double x, Rng& rng) {
    spec.index_of(x);
    DoseOutcome out;
    out.efficacy = rng.bernoulli(spec.efficacy_prob(x));
    out.toxicity = rng.bernoulli(spec.toxicity_prob(x));
    return out;
}

inline double dose_reward(const DoseSpec& spec, const DoseOutcome& outcome) {
    return (outcome.efficacy ? 1.0 : 0.0) - spec.toxicity_penalty * (outcome.toxicity ? 1.0 : 0.0);
}

// ---------------------------------------------------------------------------
// Latent spatial field on a square grid (sensor-placement environment).

struct SpatialSpec {
    int grid_side = 8;
    KernelSpec kernel{KernelKind::Matern32, 0.35, 1.0};
    double noise_std = 0.2;

    /// Row-major grid over the unit square, spacing 1/(side-1).
    std::vector<Eigen::VectorXd> grid() const {
        std::vector<Eigen::VectorXd> cells;
        cells.reserve(static_cast<std::size_t>(grid_side) * static_cast<std::size_t>(grid_side));
        const double step = 1.0 / static_cast<double>(grid_side - 1);
        for (int i = 0; i < grid_side; ++i)
            for (int j = 0; j < grid_side; ++j) {
                Eigen::VectorXd s(2);
                s << static_cast<double>(i) * step, static_cast<double>(j) * step;
                cells.push_back(std::move(s));
            }
        return cells;
    }
};

/// Exact zero-mean multivariate-normal draw of the field over the grid via
/// Cholesky of the Gram matrix. Pass a prefactored root to amortize replicates.
inline Eigen::MatrixXd spatial_field_root(const SpatialSpec& spec) {
    const auto cells = spec.grid();
    Eigen::MatrixXd gram = gram_matrix(spec.kernel, cells);
    gram.diagonal().array() += 1e-9 * spec.kernel.signal_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw NumericalError("spatial_field_root: Cholesky factorization failed");
    return llt.matrixL();
}

inline Eigen::VectorXd spatial_field_draw(const Eigen::MatrixXd& root, Rng& rng) {
    Eigen::VectorXd z(root.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return root.triangularView<Eigen::Lower>() * z;
}

inline Eigen::VectorXd spatial_field_draw(const SpatialSpec& spec, Rng& rng) {
    return spatial_field_draw(spatial_field_root(spec), rng);
}

/// Noisy observation of a drawn field at grid cell `cell`.
inline double spatial_observe(const SpatialSpec& spec, const Eigen::VectorXd& field,
                              std::size_t cell, Rng& rng) {
    if (cell >= static_cast<std::size_t>(field.size()))
        throw InputError("spatial_observe: cell index out of range");
    return field(static_cast<Eigen::Index>(cell)) + rng.normal(0.0, spec.noise_std);
}

// ---------------------------------------------------------------------------
// Saturating quality surface: A (1 - exp(-q(x))) with a quadratic score q
// that peaks at a configured optimum and falls to zero at the far corner.

struct SaturationSpec {
    double asymptote = 1.0;
    double peak_value = 0.9342;  // noise-free value at the optimum
    Eigen::VectorXd optimum;
    Eigen::VectorXd box_lo;
    Eigen::VectorXd box_hi;
    Eigen::VectorXd axis_weights;  // normalized internally
    double noise_std = 0.0;

    void validate() const {
        if (!(asymptote > 0.0) || !(peak_value > 0.0) || peak_value >= asymptote)
            throw ConfigError("SaturationSpec: need 0 < peak_value < asymptote");
        const auto d = optimum.size();
        if (box_lo.size() != d || box_hi.size() != d || axis_weights.size() != d)
            throw ConfigError("SaturationSpec: dimension mismatch");
        for (Eigen::Index i = 0; i < d; ++i) {
            if (!(box_lo(i) < box_hi(i))) throw ConfigError("SaturationSpec: empty box");
            if (optimum(i) < box_lo(i) || optimum(i) > box_hi(i))
                throw ConfigError("SaturationSpec: optimum outside box");
            if (!(axis_weights(i) > 0.0)) throw ConfigError("SaturationSpec: weights must be > 0");
        }
        if (noise_std < 0.0) throw ConfigError("SaturationSpec: noise_std must be >= 0");
    }

    double quality(const Eigen::VectorXd& x) const {
        const double q_max = -std::log(1.0 - peak_value / asymptote);
        double dist = 0.0;
        const double weight_total = axis_weights.sum();
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double reach = std::max(optimum(i) - box_lo(i), box_hi(i) - optimum(i));
            const double u = (x(i) - optimum(i)) / reach;
            dist += axis_weights(i) / weight_total * u * u;
        }
        return q_max * std::max(0.0, 1.0 - dist);
    }

    double value(const Eigen::VectorXd& x) const {
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (x(i) < box_lo(i) - 1e-12 || x(i) > box_hi(i) + 1e-12)
                throw InputError("saturation_oracle: point outside search box");
        return asymptote * (1.0 - std::exp(-quality(x)));
    }
};

inline double saturation_true(const SaturationSpec& spec, const Eigen::VectorXd& x) {
    return spec.value(x);
}

inline double saturation_oracle(const SaturationSpec& spec, const Eigen::VectorXd& x, Rng& rng) {
    double v = spec.value(x);
    if (spec.noise_std > 0.0) v += rng.normal(0.0, spec.noise_std);
    return v;
}

// ---------------------------------------------------------------------------
// Smooth convex drag bowl over (camber, thickness).

struct DragSpec {
    double camber_lo = 0.01, camber_hi = 0.10;
    double thickness_lo = 0.05, thickness_hi = 0.20;
    double camber_opt = 0.045;
    double thickness_opt = 0.11;
    double min_drag = 0.0587;
    double camber_curvature = 6.0;
    double thickness_curvature = 2.5;
    double noise_std = 0.0011;

    double value(double camber, double thickness) const {
        if (camber < camber_lo - 1e-12 || camber > camber_hi + 1e-12 ||
            thickness < thickness_lo - 1e-12 || thickness > thickness_hi + 1e-12)
            throw InputError("drag_oracle: point outside design range");
        const double dc = camber - camber_opt;
        const double dt = thickness - thickness_opt;
        return min_drag + camber_curvature * dc * dc + thickness_curvature * dt * dt;
    }
};

inline double drag_true(const DragSpec& spec, double camber, double thickness) {
    return spec.value(camber, thickness);
}

inline double drag_oracle(const DragSpec& spec, double camber, double thickness, Rng& rng) {
    double v = spec.value(camber, thickness);
    if (spec.noise_std > 0.0) v += rng.normal(0.0, spec.noise_std);
    return v;
}

}  // namespace almabdc
