#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "almabdc/errors.hpp"
#include "almabdc/gp.hpp"

namespace almabdc {

enum class AcquisitionKind { UCB, ExpectedImprovement, MaxVariance };

struct AcquisitionSpec {
    AcquisitionKind kind = AcquisitionKind::UCB;
    double beta = 2.0;  // UCB exploration weight
    double xi = 0.0;    // EI jitter

    void validate() const {
        if (beta < 0.0) throw InputError("AcquisitionSpec: beta must be non-negative");
        if (xi < 0.0) throw InputError("AcquisitionSpec: xi must be non-negative");
    }
};

struct BatchSpec {
    int batch_size = 1;
    double diversity_weight = 0.5;

    void validate() const {
        if (batch_size < 1) throw InputError("BatchSpec: batch_size must be >= 1");
        if (diversity_weight < 0.0) throw InputError("BatchSpec: diversity_weight must be >= 0");
    }
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::inv_sqrt2); }

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Score a candidate from its posterior summary. `incumbent` is the current
/// best observed value; only EI reads it.
inline double acq_score(const AcquisitionSpec& spec, const PosteriorSummary& summary,
                        double incumbent = 0.0) {
    const double sigma = std::sqrt(std::max(0.0, summary.variance));
    switch (spec.kind) {
        case AcquisitionKind::UCB:
            return summary.mean + spec.beta * sigma;
        case AcquisitionKind::MaxVariance:
            return std::max(0.0, summary.variance);
        case AcquisitionKind::ExpectedImprovement: {
            const double delta = summary.mean - incumbent - spec.xi;
            if (sigma == 0.0) return std::max(delta, 0.0);
            const double z = delta / sigma;
            return delta * normal_cdf(z) + sigma * normal_pdf(z);
        }
    }
    throw InputError("acq_score: unknown acquisition kind");
}

/// Argmax of the acquisition over a finite candidate list; ties break to the
/// lowest index so replicates are reproducible.
inline std::size_t select_next(const GpPosterior& post,
                               const std::vector<Eigen::VectorXd>& candidates,
                               const AcquisitionSpec& spec, double incumbent = 0.0) {
    spec.validate();
    if (candidates.empty()) throw InputError("select_next: empty candidate list");
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double s = acq_score(spec, gp_predict(post, candidates[i]), incumbent);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return best;
}

/// Greedy Kriging-believer batch: each pick maximizes the acquisition minus a
/// correlation penalty against the points already in the batch, then the
/// posterior is conditioned on its own mean prediction at the pick.
inline std::vector<std::size_t> select_batch(const GpPosterior& post,
                                             const std::vector<Eigen::VectorXd>& candidates,
                                             const AcquisitionSpec& acq, const BatchSpec& batch,
                                             double incumbent = 0.0) {
    acq.validate();
    batch.validate();
    const std::size_t k = static_cast<std::size_t>(batch.batch_size);
    if (candidates.size() < k)
        throw InputError("select_batch: fewer candidates than batch_size");

    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    std::vector<bool> taken(candidates.size(), false);
    GpPosterior believer = post;

    for (std::size_t pick = 0; pick < k; ++pick) {
        std::size_t best = candidates.size();
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (taken[i]) continue;
            double s = acq_score(acq, gp_predict(believer, candidates[i]), incumbent);
            if (batch.diversity_weight > 0.0 && !chosen.empty()) {
                double max_corr = 0.0;
                for (std::size_t j : chosen) {
                    const double corr =
                        kernel_eval_r(post.kernel, (candidates[i] - candidates[j]).norm()) /
                        post.kernel.signal_variance;
                    max_corr = std::max(max_corr, corr);
                }
                s -= batch.diversity_weight * max_corr;
            }
            if (s > best_score) {
                best_score = s;
                best = i;
            }
        }
        taken[best] = true;
        chosen.push_back(best);
        if (pick + 1 < k) believer = gp_condition_hallucinated(believer, candidates[best]);
    }
    return chosen;
}

}  // namespace almabdc
