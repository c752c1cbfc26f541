#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "almabdc/errors.hpp"

namespace almabdc {

/// Serial fraction, base efficiency, and communication-overhead growth
/// parameters for the throughput model.
struct ScalingParams {
    double serial_fraction = 0.08;  // p in [0, 1]
    double base_efficiency = 1.0;   // eta in (0, 1]
    double comm_alpha = 0.0;        // alpha >= 0
    double comm_beta = 1.0;         // beta in [0.5, 1]

    void validate() const {
        if (serial_fraction < 0.0 || serial_fraction > 1.0)
            throw InputError("ScalingParams: serial_fraction must lie in [0,1]");
        if (!(base_efficiency > 0.0) || base_efficiency > 1.0)
            throw InputError("ScalingParams: base_efficiency must lie in (0,1]");
        if (comm_alpha < 0.0) throw InputError("ScalingParams: comm_alpha must be >= 0");
        if (comm_beta < 0.5 || comm_beta > 1.0)
            throw InputError("ScalingParams: comm_beta must lie in [0.5,1]");
    }
};

/// Wall-clock model T_K = (1-p) W / (eta K) + p W.
inline double amdahl_time(const ScalingParams& params, int k_agents, double total_cost) {
    params.validate();
    if (k_agents < 1) throw InputError("amdahl_time: K must be >= 1");
    if (total_cost < 0.0) throw InputError("amdahl_time: total_cost must be >= 0");
    const double p = params.serial_fraction;
    return (1.0 - p) * total_cost / (params.base_efficiency * static_cast<double>(k_agents)) +
           p * total_cost;
}

/// S(K) = 1 / (p + (1-p) / (eta K)).
inline double amdahl_speedup(const ScalingParams& params, int k_agents) {
    params.validate();
    if (k_agents < 1) throw InputError("amdahl_speedup: K must be >= 1");
    const double p = params.serial_fraction;
    return 1.0 / (p + (1.0 - p) / (params.base_efficiency * static_cast<double>(k_agents)));
}

/// Gustafson's scaled speedup S_G(K) = p + (1-p) K.
inline double gustafson_speedup(double serial_fraction, int k_agents) {
    if (k_agents < 1) throw InputError("gustafson_speedup: K must be >= 1");
    if (serial_fraction < 0.0 || serial_fraction > 1.0)
        throw InputError("gustafson_speedup: p must lie in [0,1]");
    return serial_fraction + (1.0 - serial_fraction) * static_cast<double>(k_agents);
}

/// eta(K) = 1 / (1 + alpha K^beta).
inline double parallel_efficiency(double alpha, double beta, int k_agents) {
    if (alpha < 0.0) throw InputError("parallel_efficiency: alpha must be >= 0");
    if (beta < 0.5 || beta > 1.0) throw InputError("parallel_efficiency: beta must lie in [0.5,1]");
    if (k_agents < 1) throw InputError("parallel_efficiency: K must be >= 1");
    return 1.0 / (1.0 + alpha * std::pow(static_cast<double>(k_agents), beta));
}

/// Interior optimum K* = ((1-p) / (alpha beta p))^(1/(1+beta)).
inline double optimal_agents(const ScalingParams& params) {
    params.validate();
    const double p = params.serial_fraction;
    if (p <= 0.0 || p >= 1.0 || params.comm_alpha <= 0.0)
        throw InputError("optimal_agents: no interior optimum (need p in (0,1) and alpha > 0)");
    return std::pow((1.0 - p) / (params.comm_alpha * params.comm_beta * p),
                    1.0 / (1.0 + params.comm_beta));
}

/// Least-squares fit of 1/S = p + (1-p)/K over observed (K, S) points with
/// eta fixed at 1. Returns p clamped to [0, 1].
inline double fit_serial_fraction(const std::vector<std::pair<int, double>>& speedups) {
    if (speedups.size() < 2) throw InputError("fit_serial_fraction: need at least 2 points");
    double num = 0.0;
    double den = 0.0;
    for (const auto& [k, s] : speedups) {
        if (k < 1) throw InputError("fit_serial_fraction: K must be >= 1");
        if (!(s > 0.0)) throw InputError("fit_serial_fraction: speedups must be positive");
        const double a = 1.0 - 1.0 / static_cast<double>(k);
        const double z = 1.0 / s - 1.0 / static_cast<double>(k);
        num += a * z;
        den += a * a;
    }
    if (den == 0.0) throw InputError("fit_serial_fraction: all points at K=1 (degenerate)");
    return std::clamp(num / den, 0.0, 1.0);
}

}  // namespace almabdc
