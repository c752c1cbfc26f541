#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "almabdc/gp.hpp"
#include "almabdc/kernel.hpp"
#include "almabdc/rng.hpp"

using namespace almabdc;

namespace {

Eigen::VectorXd vec1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}

Eigen::VectorXd random_point(Rng& rng, int dim, double lo, double hi) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.uniform(lo, hi);
    return v;
}

/// Brute-force predictive equations via explicit matrix inversion. Shares the
/// diagonal regularizer with the implementation but no other code path.
PosteriorSummary dense_inverse_predict(const GpDataset& data, const KernelSpec& kernel,
                                       const Eigen::VectorXd& x, double prior_mean = 0.0) {
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());
    Eigen::MatrixXd k = gram_matrix(kernel, data.points);
    k.diagonal().array() +=
        data.noise_std * data.noise_std + 1e-9 * kernel.signal_variance;
    const Eigen::MatrixXd k_inv = k.inverse();
    Eigen::VectorXd k_star(n);
    for (Eigen::Index i = 0; i < n; ++i)
        k_star(i) = kernel_eval(kernel, data.points[static_cast<std::size_t>(i)], x);
    Eigen::VectorXd centered(n);
    for (Eigen::Index i = 0; i < n; ++i)
        centered(i) = data.observations[static_cast<std::size_t>(i)] - prior_mean;
    const double mean = prior_mean + k_star.dot(k_inv * centered);
    const double variance = kernel.signal_variance - k_star.dot(k_inv * k_star);
    return {mean, std::max(0.0, variance)};
}

}  // namespace

TEST_CASE("kernel_eval matches closed forms") {
    KernelSpec matern{KernelKind::Matern32, 0.35, 1.0};
    CHECK(kernel_eval(matern, vec1(0.2), vec1(0.2)) == Catch::Approx(1.0));
    // r = length_scale: (1 + sqrt(3)) exp(-sqrt(3))
    const double expected = (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0));
    CHECK(kernel_eval(matern, vec1(0.0), vec1(0.35)) == Catch::Approx(expected).epsilon(1e-12));
    CHECK(expected == Catch::Approx(0.4833).margin(5e-5));

    KernelSpec rbf{KernelKind::SquaredExponential, 1.5, 0.9};
    CHECK(kernel_eval(rbf, vec1(0.7), vec1(0.7)) == Catch::Approx(0.9));

    Eigen::VectorXd a(2), b(3);
    a << 0, 0;
    b << 0, 0, 0;
    CHECK_THROWS_AS(kernel_eval(rbf, a, b), InputError);
    CHECK_THROWS_AS((KernelSpec{KernelKind::Matern32, -1.0, 1.0}.validate()), InputError);
}

TEST_CASE("kernel symmetry over random pairs") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        KernelSpec spec{trial % 2 == 0 ? KernelKind::Matern32 : KernelKind::SquaredExponential,
                        rng.uniform(0.1, 3.0), rng.uniform(0.1, 2.0)};
        const auto s = random_point(rng, 3, -2.0, 2.0);
        const auto s2 = random_point(rng, 3, -2.0, 2.0);
        CHECK(kernel_eval(spec, s, s2) == Catch::Approx(kernel_eval(spec, s2, s)).epsilon(1e-14));
    }
}

TEST_CASE("Gram matrices are positive semi-definite") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        KernelSpec spec{trial % 2 == 0 ? KernelKind::Matern32 : KernelKind::SquaredExponential,
                        rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)};
        std::vector<Eigen::VectorXd> points;
        const std::size_t n = 2 + rng.uniform_int(7);  // up to 8 points
        for (std::size_t i = 0; i < n; ++i) points.push_back(random_point(rng, 2, 0.0, 1.0));
        const Eigen::MatrixXd gram = gram_matrix(spec, points);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("empty dataset reproduces the prior") {
    KernelSpec spec{KernelKind::Matern32, 0.35, 1.0};
    GpDataset data;
    const GpPosterior post = gp_fit(data, spec, 0.25);
    const auto s = gp_predict(post, vec1(0.7));
    CHECK(s.mean == Catch::Approx(0.25));
    CHECK(s.variance == Catch::Approx(1.0));
}

TEST_CASE("noise-free posterior interpolates a single observation") {
    KernelSpec spec{KernelKind::SquaredExponential, 1.0, 1.0};
    GpDataset data;
    data.points.push_back(vec1(0.4));
    data.observations.push_back(-0.3);
    data.noise_std = 0.0;
    const GpPosterior post = gp_fit(data, spec);
    const auto s = gp_predict(post, vec1(0.4));
    CHECK(s.mean == Catch::Approx(-0.3).margin(1e-8));
    CHECK(s.variance == Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("gp_predict matches the dense-inverse oracle") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const int dim = 1 + static_cast<int>(rng.uniform_int(3));
        KernelSpec spec{trial % 2 == 0 ? KernelKind::Matern32 : KernelKind::SquaredExponential,
                        rng.uniform(0.4, 2.0), rng.uniform(0.3, 2.0)};
        GpDataset data;
        data.noise_std = rng.uniform(0.05, 0.4);
        const std::size_t n = 1 + rng.uniform_int(20);
        for (std::size_t i = 0; i < n; ++i) {
            data.points.push_back(random_point(rng, dim, 0.0, 2.0));
            data.observations.push_back(rng.normal(0.0, 1.0));
        }
        const double prior_mean = rng.uniform(-0.5, 0.5);
        const GpPosterior post = gp_fit(data, spec, prior_mean);
        for (int q = 0; q < 5; ++q) {
            const auto x = random_point(rng, dim, 0.0, 2.0);
            const auto got = gp_predict(post, x);
            const auto want = dense_inverse_predict(data, spec, x, prior_mean);
            CHECK(got.mean == Catch::Approx(want.mean).margin(1e-8));
            CHECK(got.variance == Catch::Approx(want.variance).margin(1e-8));
        }
    }
}

TEST_CASE("adding an observation never increases posterior variance") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        KernelSpec spec{KernelKind::Matern32, rng.uniform(0.3, 1.5), 1.0};
        GpDataset data;
        data.noise_std = rng.uniform(0.0, 0.3);
        const std::size_t n = rng.uniform_int(8);
        for (std::size_t i = 0; i < n; ++i) {
            data.points.push_back(random_point(rng, 2, 0.0, 1.0));
            data.observations.push_back(rng.normal(0.0, 1.0));
        }
        const GpPosterior before = gp_fit(data, spec);
        GpDataset more = data;
        more.points.push_back(random_point(rng, 2, 0.0, 1.0));
        more.observations.push_back(rng.normal(0.0, 1.0));
        const GpPosterior after = gp_fit(more, spec);
        for (int q = 0; q < 10; ++q) {
            const auto x = random_point(rng, 2, 0.0, 1.0);
            CHECK(gp_predict(after, x).variance <=
                  gp_predict(before, x).variance + 1e-9);
        }
    }
}

TEST_CASE("hallucinating at a noise-free training point changes nothing") {
    KernelSpec spec{KernelKind::SquaredExponential, 0.8, 1.0};
    GpDataset data;
    data.noise_std = 0.0;
    data.points = {vec1(0.0), vec1(0.5), vec1(1.0)};
    data.observations = {0.1, -0.4, 0.9};
    const GpPosterior post = gp_fit(data, spec);
    const GpPosterior hallucinated = gp_condition_hallucinated(post, vec1(0.5));
    for (double x = -0.2; x <= 1.2; x += 0.1) {
        const auto a = gp_predict(post, vec1(x));
        const auto b = gp_predict(hallucinated, vec1(x));
        CHECK(b.mean == Catch::Approx(a.mean).margin(1e-8));
        CHECK(b.variance == Catch::Approx(a.variance).margin(1e-8));
    }
}

TEST_CASE("hallucination removes variance at the believed point") {
    KernelSpec spec{KernelKind::Matern32, 0.5, 1.0};
    GpDataset data;
    data.noise_std = 0.1;
    data.points = {vec1(0.0), vec1(1.0)};
    data.observations = {0.2, 0.4};
    const GpPosterior post = gp_fit(data, spec);
    const auto x = vec1(0.5);
    const double var_before = gp_predict(post, x).variance;
    REQUIRE(var_before > 0.0);
    const GpPosterior hallucinated = gp_condition_hallucinated(post, x);
    const double var_after = gp_predict(hallucinated, x).variance;
    CHECK(var_after < var_before);
    // Mean is unchanged at the believed point.
    CHECK(gp_predict(hallucinated, x).mean ==
          Catch::Approx(gp_predict(post, x).mean).margin(1e-10));
}

TEST_CASE("hallucination equals refitting the augmented dataset") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        KernelSpec spec{trial % 2 == 0 ? KernelKind::Matern32 : KernelKind::SquaredExponential,
                        rng.uniform(0.3, 1.5), rng.uniform(0.5, 1.5)};
        GpDataset data;
        data.noise_std = rng.uniform(0.01, 0.3);
        const std::size_t n = 1 + rng.uniform_int(10);
        for (std::size_t i = 0; i < n; ++i) {
            data.points.push_back(random_point(rng, 2, 0.0, 1.0));
            data.observations.push_back(rng.normal(0.0, 1.0));
        }
        const GpPosterior post = gp_fit(data, spec);
        const auto x_new = random_point(rng, 2, 0.0, 1.0);
        const GpPosterior incremental = gp_condition_hallucinated(post, x_new);

        GpDataset augmented = data;
        augmented.points.push_back(x_new);
        augmented.observations.push_back(gp_predict(post, x_new).mean);
        const GpPosterior refit = gp_fit(augmented, spec);

        for (int q = 0; q < 8; ++q) {
            const auto x = random_point(rng, 2, 0.0, 1.0);
            const auto a = gp_predict(incremental, x);
            const auto b = gp_predict(refit, x);
            CHECK(a.mean == Catch::Approx(b.mean).margin(1e-8));
            CHECK(a.variance == Catch::Approx(b.variance).margin(1e-8));
        }
    }
}

TEST_CASE("Cholesky factor reconstructs the regularized Gram matrix") {
    Rng rng(51);
    KernelSpec spec{KernelKind::Matern32, 0.35, 1.0};
    GpDataset data;
    data.noise_std = 0.2;
    for (int i = 0; i < 12; ++i) {
        data.points.push_back(random_point(rng, 2, 0.0, 1.0));
        data.observations.push_back(rng.normal(0.0, 1.0));
    }
    const GpPosterior post = gp_fit(data, spec);
    Eigen::MatrixXd expected = gram_matrix(spec, data.points);
    expected.diagonal().array() += data.noise_std * data.noise_std + post.effective_jitter;
    const Eigen::MatrixXd rebuilt = post.chol_factor * post.chol_factor.transpose();
    CHECK((rebuilt - expected).norm() / expected.norm() < 1e-8);
    for (Eigen::Index i = 0; i < post.chol_factor.rows(); ++i)
        CHECK(post.chol_factor(i, i) > 0.0);
}

TEST_CASE("integrated posterior variance: prior level and monotonicity") {
    KernelSpec spec{KernelKind::Matern32, 0.35, 1.0};
    std::vector<Eigen::VectorXd> grid;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            Eigen::VectorXd s(2);
            s << i / 7.0, j / 7.0;
            grid.push_back(s);
        }
    GpDataset data;
    data.noise_std = 0.2;
    const GpPosterior prior = gp_fit(data, spec);
    CHECK(integrated_posterior_variance(prior, grid) == Catch::Approx(1.0));
    CHECK_THROWS_AS(integrated_posterior_variance(prior, {}), InputError);

    Rng rng(61);
    GpPosterior post = prior;
    double last = 1.0;
    for (int step = 0; step < 5; ++step) {
        GpDataset d = post.dataset;
        d.points.push_back(grid[rng.uniform_int(grid.size())]);
        d.observations.push_back(rng.normal(0.0, 1.0));
        post = gp_fit(d, spec);
        const double ipv = integrated_posterior_variance(post, grid);
        CHECK(ipv <= last + 1e-12);
        last = ipv;
    }
}

TEST_CASE("CandidateGp tracks batch refits exactly") {
    Rng rng(71);
    KernelSpec spec{KernelKind::Matern32, 0.4, 1.2};
    std::vector<Eigen::VectorXd> candidates;
    for (int i = 0; i < 40; ++i) candidates.push_back(random_point(rng, 2, 0.0, 1.0));

    CandidateGp tracker(spec, 0.15, 0.3, candidates);
    GpDataset data;
    data.noise_std = 0.15;

    for (int step = 0; step < 25; ++step) {
        const auto x = random_point(rng, 2, 0.0, 1.0);
        const double y = rng.normal(0.0, 1.0);
        tracker.add_observation(x, y);
        data.points.push_back(x);
        data.observations.push_back(y);
        if (step % 5 != 4) continue;
        const GpPosterior refit = gp_fit(data, spec, 0.3);
        for (std::size_t c = 0; c < candidates.size(); c += 7) {
            const auto want = gp_predict(refit, candidates[c]);
            CHECK(tracker.mean_at(c) == Catch::Approx(want.mean).margin(1e-8));
            CHECK(tracker.variance_at(c) == Catch::Approx(want.variance).margin(1e-8));
        }
        const auto x_query = random_point(rng, 2, 0.0, 1.0);
        const auto got = tracker.predict(x_query);
        const auto want = gp_predict(refit, x_query);
        CHECK(got.mean == Catch::Approx(want.mean).margin(1e-8));
        CHECK(got.variance == Catch::Approx(want.variance).margin(1e-8));
    }
}

TEST_CASE("gp_fit input validation") {
    KernelSpec spec{KernelKind::Matern32, 0.35, 1.0};
    GpDataset bad;
    bad.points.push_back(vec1(0.0));
    CHECK_THROWS_AS(gp_fit(bad, spec), InputError);

    GpDataset nonfinite;
    nonfinite.points.push_back(vec1(std::numeric_limits<double>::quiet_NaN()));
    nonfinite.observations.push_back(0.0);
    CHECK_THROWS_AS(gp_fit(nonfinite, spec), InputError);
}
