#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "almabdc/errors.hpp"

namespace almabdc {

enum class KernelKind { SquaredExponential, Matern32 };

/// Stationary covariance k(s, s') with k(s, s) = signal_variance.
struct KernelSpec {
    KernelKind kind = KernelKind::SquaredExponential;
    double length_scale = 1.0;
    double signal_variance = 1.0;

    void validate() const {
        if (!(length_scale > 0.0)) throw InputError("KernelSpec: length_scale must be positive");
        if (!(signal_variance > 0.0)) throw InputError("KernelSpec: signal_variance must be positive");
    }
};

inline double kernel_eval_r(const KernelSpec& spec, double r) {
    switch (spec.kind) {
        case KernelKind::SquaredExponential: {
            const double z = r / spec.length_scale;
            return spec.signal_variance * std::exp(-0.5 * z * z);
        }
        case KernelKind::Matern32: {
            const double z = std::sqrt(3.0) * r / spec.length_scale;
            return spec.signal_variance * (1.0 + z) * std::exp(-z);
        }
    }
    throw InputError("kernel_eval: unknown kernel kind");
}

inline double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& s2) {
    spec.validate();
    if (s.size() != s2.size()) throw InputError("kernel_eval: dimension mismatch");
    return kernel_eval_r(spec, (s - s2).norm());
}

/// Gram matrix on `points` (columns of X are not used; one point per row).
inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const std::vector<Eigen::VectorXd>& points) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = spec.signal_variance;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = kernel_eval_r(spec, (points[static_cast<std::size_t>(i)] -
                                                  points[static_cast<std::size_t>(j)]).norm());
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

}  // namespace almabdc
