#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "almabdc/errors.hpp"
#include "almabdc/kernel.hpp"

namespace almabdc {

/// Training data for the Gaussian-process surrogate.
struct GpDataset {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> observations;
    double noise_std = 0.0;

    void validate() const {
        if (points.size() != observations.size())
            throw InputError("GpDataset: points/observations length mismatch");
        if (noise_std < 0.0) throw InputError("GpDataset: noise_std must be non-negative");
        for (const auto& p : points)
            if (!p.allFinite()) throw InputError("GpDataset: non-finite coordinate");
        for (double y : observations)
            if (!std::isfinite(y)) throw InputError("GpDataset: non-finite observation");
    }

    std::size_t size() const { return points.size(); }
};

struct PosteriorSummary {
    double mean = 0.0;
    double variance = 0.0;
};

namespace detail {
constexpr double kVarianceClamp = 1e-10;   // negatives above -1e-10 round to 0
constexpr double kJitterInitial = 1e-9;    // relative to signal variance
constexpr double kJitterMax = 1e-5;        // escalation cap, relative
}  // namespace detail

/// Conditioned GP state: lower Cholesky factor of (K + sigma_n^2 I + jitter I)
/// and the weight vector alpha solving that system against (y - mu0).
/// Immutable after construction; shareable across threads.
struct GpPosterior {
    GpDataset dataset;
    KernelSpec kernel;
    Eigen::MatrixXd chol_factor;   // n x n lower triangular
    Eigen::VectorXd forward;       // z = L^{-1} (y - mu0)
    Eigen::VectorXd weights;       // alpha = L^{-T} z
    double prior_mean = 0.0;
    double effective_jitter = 0.0; // absolute value added to the Gram diagonal

    std::size_t size() const { return dataset.size(); }
};

inline GpPosterior gp_fit(GpDataset data, KernelSpec kernel, double prior_mean = 0.0) {
    kernel.validate();
    data.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());

    GpPosterior post;
    post.kernel = kernel;
    post.prior_mean = prior_mean;
    post.effective_jitter = detail::kJitterInitial * kernel.signal_variance;

    if (n == 0) {
        post.dataset = std::move(data);
        return post;
    }

    const Eigen::MatrixXd gram = gram_matrix(kernel, data.points);
    const double noise_var = data.noise_std * data.noise_std;
    Eigen::VectorXd centered(n);
    for (Eigen::Index i = 0; i < n; ++i)
        centered(i) = data.observations[static_cast<std::size_t>(i)] - prior_mean;

    double jitter = detail::kJitterInitial * kernel.signal_variance;
    const double jitter_cap = detail::kJitterMax * kernel.signal_variance;
    for (;;) {
        Eigen::MatrixXd sys = gram;
        sys.diagonal().array() += noise_var + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(sys);
        if (llt.info() == Eigen::Success) {
            post.chol_factor = llt.matrixL();
            post.forward = post.chol_factor.triangularView<Eigen::Lower>().solve(centered);
            post.weights =
                post.chol_factor.transpose().triangularView<Eigen::Upper>().solve(post.forward);
            post.effective_jitter = jitter;
            post.dataset = std::move(data);
            return post;
        }
        jitter *= 10.0;
        if (jitter > jitter_cap)
            throw NumericalError("gp_fit: Cholesky failed after jitter escalation to " +
                                 std::to_string(jitter_cap) + " (ill-conditioned Gram matrix)");
    }
}

inline PosteriorSummary gp_predict(const GpPosterior& post, const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw InputError("gp_predict: non-finite query point");
    const Eigen::Index n = static_cast<Eigen::Index>(post.size());
    if (n == 0) return {post.prior_mean, post.kernel.signal_variance};
    if (post.dataset.points.front().size() != x.size())
        throw InputError("gp_predict: dimension mismatch");

    Eigen::VectorXd k_star(n);
    for (Eigen::Index i = 0; i < n; ++i)
        k_star(i) = kernel_eval_r(post.kernel,
                                  (post.dataset.points[static_cast<std::size_t>(i)] - x).norm());

    const double mean = post.prior_mean + k_star.dot(post.weights);
    const Eigen::VectorXd v = post.chol_factor.triangularView<Eigen::Lower>().solve(k_star);
    double variance = post.kernel.signal_variance - v.squaredNorm();
    if (variance < 0.0) variance = 0.0;
    return {mean, variance};
}

/// Kriging-believer step: condition on the pseudo-observation (x, mu_t(x)).
/// Extends the Cholesky factor by one row; falls back to a full refit if the
/// Schur complement degenerates. The input posterior is left untouched.
inline GpPosterior gp_condition_hallucinated(const GpPosterior& post, const Eigen::VectorXd& x) {
    const double believed = gp_predict(post, x).mean;

    GpDataset augmented = post.dataset;
    augmented.points.push_back(x);
    augmented.observations.push_back(believed);

    const Eigen::Index n = static_cast<Eigen::Index>(post.size());
    if (n == 0) return gp_fit(std::move(augmented), post.kernel, post.prior_mean);

    Eigen::VectorXd k_star(n);
    for (Eigen::Index i = 0; i < n; ++i)
        k_star(i) = kernel_eval_r(post.kernel,
                                  (post.dataset.points[static_cast<std::size_t>(i)] - x).norm());
    const double noise_var = post.dataset.noise_std * post.dataset.noise_std;
    const double k_self = post.kernel.signal_variance + noise_var + post.effective_jitter;

    const Eigen::VectorXd l = post.chol_factor.triangularView<Eigen::Lower>().solve(k_star);
    const double schur = k_self - l.squaredNorm();
    if (schur <= detail::kJitterInitial * post.kernel.signal_variance)
        return gp_fit(std::move(augmented), post.kernel, post.prior_mean);

    GpPosterior out;
    out.kernel = post.kernel;
    out.prior_mean = post.prior_mean;
    out.effective_jitter = post.effective_jitter;
    out.chol_factor = Eigen::MatrixXd::Zero(n + 1, n + 1);
    out.chol_factor.topLeftCorner(n, n) = post.chol_factor;
    out.chol_factor.row(n).head(n) = l.transpose();
    out.chol_factor(n, n) = std::sqrt(schur);

    out.forward.resize(n + 1);
    out.forward.head(n) = post.forward;
    out.forward(n) = (believed - post.prior_mean - l.dot(post.forward)) / out.chol_factor(n, n);
    out.weights =
        out.chol_factor.transpose().triangularView<Eigen::Upper>().solve(out.forward);
    out.dataset = std::move(augmented);
    return out;
}

/// Mean posterior variance over an evaluation grid (the Case-5 objective).
inline double integrated_posterior_variance(const GpPosterior& post,
                                            const std::vector<Eigen::VectorXd>& grid) {
    if (grid.empty()) throw InputError("integrated_posterior_variance: empty grid");
    double total = 0.0;
    for (const auto& s : grid) total += gp_predict(post, s).variance;
    return total / static_cast<double>(grid.size());
}

/// Incrementally conditioned GP over a fixed candidate set. Maintains the
/// per-candidate posterior mean/variance in O(n * C) per added observation,
/// matching gp_fit/gp_predict on the same data to numerical precision.
class CandidateGp {
public:
    CandidateGp(KernelSpec kernel, double noise_std, double prior_mean,
                std::vector<Eigen::VectorXd> candidates)
        : kernel_(kernel),
          noise_std_(noise_std),
          prior_mean_(prior_mean),
          candidates_(std::move(candidates)) {
        kernel_.validate();
        if (noise_std_ < 0.0) throw InputError("CandidateGp: noise_std must be non-negative");
        const Eigen::Index c = static_cast<Eigen::Index>(candidates_.size());
        cand_mean_ = Eigen::VectorXd::Constant(c, prior_mean_);
        cand_var_ = Eigen::VectorXd::Constant(c, kernel_.signal_variance);
        jitter_ = detail::kJitterInitial * kernel_.signal_variance;
        chol_.resize(0, 0);
        forward_.resize(0);
        cross_.resize(0, c);
    }

    std::size_t n_obs() const { return points_.size(); }
    std::size_t n_candidates() const { return candidates_.size(); }
    const std::vector<Eigen::VectorXd>& candidates() const { return candidates_; }
    const Eigen::VectorXd& candidate_means() const { return cand_mean_; }
    const Eigen::VectorXd& candidate_variances() const { return cand_var_; }
    double mean_at(std::size_t idx) const { return cand_mean_(static_cast<Eigen::Index>(idx)); }
    double variance_at(std::size_t idx) const {
        return std::max(0.0, cand_var_(static_cast<Eigen::Index>(idx)));
    }

    void add_observation(const Eigen::VectorXd& x, double y) {
        const Eigen::Index n = static_cast<Eigen::Index>(points_.size());
        const Eigen::Index c = static_cast<Eigen::Index>(candidates_.size());
        const double noise_var = noise_std_ * noise_std_;
        const double k_self = kernel_.signal_variance + noise_var + jitter_;

        Eigen::VectorXd l(n);
        if (n > 0) {
            Eigen::VectorXd k_star(n);
            for (Eigen::Index i = 0; i < n; ++i)
                k_star(i) = kernel_eval_r(kernel_, (points_[static_cast<std::size_t>(i)] - x).norm());
            l = chol_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(k_star);
        }
        double schur = k_self - l.squaredNorm();
        // Duplicate or near-duplicate inputs push the complement toward the
        // noise floor; keep it positive so the factor stays valid.
        if (schur < 1e-12 * kernel_.signal_variance) schur = 1e-12 * kernel_.signal_variance;
        const double d = std::sqrt(schur);

        grow(n + 1);
        chol_.row(n).head(n) = l.transpose();
        chol_(n, n) = d;
        forward_(n) = (y - prior_mean_ - l.dot(forward_.head(n))) / d;

        // New row of B = L^{-1} K(train, cand).
        Eigen::VectorXd k_cand(c);
        for (Eigen::Index j = 0; j < c; ++j)
            k_cand(j) = kernel_eval_r(kernel_, (candidates_[static_cast<std::size_t>(j)] - x).norm());
        Eigen::VectorXd b_row = k_cand;
        if (n > 0) b_row.noalias() -= cross_.topRows(n).transpose() * l;
        b_row /= d;
        cross_.row(n) = b_row.transpose();

        cand_var_.array() -= b_row.array().square();
        cand_mean_.array() += b_row.array() * forward_(n);

        points_.push_back(x);
        observations_.push_back(y);
    }

    /// Prediction at an arbitrary point (not necessarily a candidate).
    PosteriorSummary predict(const Eigen::VectorXd& x) const {
        const Eigen::Index n = static_cast<Eigen::Index>(points_.size());
        if (n == 0) return {prior_mean_, kernel_.signal_variance};
        Eigen::VectorXd k_star(n);
        for (Eigen::Index i = 0; i < n; ++i)
            k_star(i) = kernel_eval_r(kernel_, (points_[static_cast<std::size_t>(i)] - x).norm());
        const Eigen::VectorXd v =
            chol_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(k_star);
        const double mean = prior_mean_ + v.dot(forward_.head(n));
        double variance = kernel_.signal_variance - v.squaredNorm();
        if (variance < 0.0) variance = 0.0;
        return {mean, variance};
    }

    /// Mean posterior variance over the candidate set.
    double integrated_variance() const {
        if (candidates_.empty()) throw InputError("CandidateGp: no candidates");
        return cand_var_.cwiseMax(0.0).mean();
    }

    const std::vector<Eigen::VectorXd>& points() const { return points_; }
    const std::vector<double>& observations() const { return observations_; }

    /// Materialize the equivalent batch-fit posterior (test cross-checks).
    GpPosterior to_posterior() const {
        GpDataset data;
        data.points = points_;
        data.observations = observations_;
        data.noise_std = noise_std_;
        return gp_fit(std::move(data), kernel_, prior_mean_);
    }

private:
    void grow(Eigen::Index n_new) {
        const Eigen::Index cap = chol_.rows();
        if (n_new <= cap) return;
        const Eigen::Index new_cap = std::max<Eigen::Index>(2 * cap, std::max<Eigen::Index>(n_new, 8));
        Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(new_cap, new_cap);
        chol.topLeftCorner(cap, cap) = chol_;
        chol_.swap(chol);
        Eigen::VectorXd fwd = Eigen::VectorXd::Zero(new_cap);
        fwd.head(cap) = forward_;
        forward_.swap(fwd);
        Eigen::MatrixXd cross =
            Eigen::MatrixXd::Zero(new_cap, static_cast<Eigen::Index>(candidates_.size()));
        cross.topRows(cap) = cross_;
        cross_.swap(cross);
    }

    KernelSpec kernel_;
    double noise_std_;
    double prior_mean_;
    double jitter_;
    std::vector<Eigen::VectorXd> candidates_;
    std::vector<Eigen::VectorXd> points_;
    std::vector<double> observations_;
    Eigen::MatrixXd chol_;    // capacity x capacity, top-left n x n valid
    Eigen::VectorXd forward_; // z = L^{-1}(y - mu0)
    Eigen::MatrixXd cross_;   // B = L^{-1} K(train, cand)
    Eigen::VectorXd cand_mean_;
    Eigen::VectorXd cand_var_;
};

}  // namespace almabdc
