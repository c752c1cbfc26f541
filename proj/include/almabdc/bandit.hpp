#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "almabdc/errors.hpp"
#include "almabdc/rng.hpp"

namespace almabdc {

enum class RewardModel { Bernoulli, Gaussian };

/// Per-arm pull counts, running means, and Thompson posterior parameters.
struct BanditState {
    struct Arm {
        long pulls = 0;
        double mean = 0.0;     // sentinel 0 while pulls == 0, never compared
        double beta_a = 1.0;   // Beta posterior (Bernoulli rewards), uniform prior
        double beta_b = 1.0;
    };

    std::vector<Arm> arms;
    long total_pulls = 0;
    RewardModel model = RewardModel::Gaussian;
    double ts_obs_variance = 0.1;  // known observation variance for Gaussian TS

    explicit BanditState(std::size_t n_arms = 0, RewardModel m = RewardModel::Gaussian)
        : arms(n_arms), model(m) {}

    std::size_t n_arms() const { return arms.size(); }
};

namespace detail {
template <typename SubsetFn>
std::size_t ucb1_over(const BanditState& state, double c, SubsetFn&& in_subset) {
    if (state.arms.empty()) throw InputError("ucb1_select: no arms");
    // Forced initialization: lowest-index unpulled arm first.
    for (std::size_t i = 0; i < state.arms.size(); ++i)
        if (in_subset(i) && state.arms[i].pulls == 0) return i;
    const double log_t = std::log(static_cast<double>(std::max<long>(state.total_pulls, 1)));
    std::size_t best = state.arms.size();
    double best_index = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state.arms.size(); ++i) {
        if (!in_subset(i)) continue;
        const auto& a = state.arms[i];
        const double idx = a.mean + c * std::sqrt(log_t / static_cast<double>(a.pulls));
        if (idx > best_index) {
            best_index = idx;
            best = i;
        }
    }
    if (best == state.arms.size()) throw InputError("ucb1_select: empty arm subset");
    return best;
}
}  // namespace detail

/// UCB1 index policy: argmax of mean + c * sqrt(ln t / n_i).
inline std::size_t ucb1_select(const BanditState& state, double c) {
    return detail::ucb1_over(state, c, [](std::size_t) { return true; });
}

/// UCB1 restricted to an arm subset (the active-learning shortlist).
inline std::size_t ucb1_select_subset(const BanditState& state, double c,
                                      const std::vector<std::size_t>& subset) {
    if (subset.empty()) throw InputError("ucb1_select_subset: empty subset");
    std::vector<bool> mask(state.arms.size(), false);
    for (std::size_t i : subset) mask.at(i) = true;
    return detail::ucb1_over(state, c, [&](std::size_t i) { return mask[i]; });
}

namespace detail {
template <typename SubsetFn>
std::size_t thompson_over(const BanditState& state, Rng& rng, SubsetFn&& in_subset) {
    if (state.arms.empty()) throw InputError("thompson_select: no arms");
    if (state.model == RewardModel::Gaussian) {
        // Flat prior: the posterior is improper until a pull exists, so
        // unpulled arms are forced first (lowest index).
        for (std::size_t i = 0; i < state.arms.size(); ++i)
            if (in_subset(i) && state.arms[i].pulls == 0) return i;
    }
    std::size_t best = state.arms.size();
    double best_draw = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state.arms.size(); ++i) {
        if (!in_subset(i)) continue;
        const auto& a = state.arms[i];
        double draw;
        if (state.model == RewardModel::Bernoulli) {
            draw = rng.beta(a.beta_a, a.beta_b);
        } else {
            draw = rng.normal(a.mean, std::sqrt(state.ts_obs_variance /
                                                static_cast<double>(a.pulls)));
        }
        if (draw > best_draw) {
            best_draw = draw;
            best = i;
        }
    }
    if (best == state.arms.size()) throw InputError("thompson_select: empty arm subset");
    return best;
}
}  // namespace detail

/// Thompson sampling: one posterior draw per arm, argmax draw.
inline std::size_t thompson_select(const BanditState& state, Rng& rng) {
    return detail::thompson_over(state, rng, [](std::size_t) { return true; });
}

inline std::size_t thompson_select_subset(const BanditState& state, Rng& rng,
                                          const std::vector<std::size_t>& subset) {
    if (subset.empty()) throw InputError("thompson_select_subset: empty subset");
    std::vector<bool> mask(state.arms.size(), false);
    for (std::size_t i : subset) mask.at(i) = true;
    return detail::thompson_over(state, rng, [&](std::size_t i) { return mask[i]; });
}

/// Incremental-mean update: mean += (r - mean) / (n + 1).
inline void update_arm(BanditState& state, std::size_t arm, double reward) {
    if (arm >= state.arms.size()) throw InputError("update_arm: arm index out of range");
    auto& a = state.arms[arm];
    if (state.model == RewardModel::Bernoulli) {
        if (reward != 0.0 && reward != 1.0)
            throw InputError("update_arm: Bernoulli mode requires 0/1 rewards");
        if (reward == 1.0)
            a.beta_a += 1.0;
        else
            a.beta_b += 1.0;
    }
    a.mean += (reward - a.mean) / static_cast<double>(a.pulls + 1);
    a.pulls += 1;
    state.total_pulls += 1;
}

/// Running regret accounting against known true means (Eqs. for instantaneous
/// and cumulative distributed regret).
struct RegretLedger {
    std::vector<double> true_means;
    double optimal_mean = 0.0;
    std::vector<std::vector<std::size_t>> rounds;  // chosen arm per agent, per round
    double cumulative_regret = 0.0;                // == distributed_regret (kept for K=1 reads)
    double distributed_regret = 0.0;
    std::vector<double> comm_costs;
    double comm_weight = 0.0;

    explicit RegretLedger(std::vector<double> means, double w_c = 0.0)
        : true_means(std::move(means)), comm_weight(w_c) {
        if (true_means.empty()) throw InputError("RegretLedger: no arms");
        optimal_mean = *std::max_element(true_means.begin(), true_means.end());
    }
};

/// Add one round: regret increment mu* - (1/K) sum_j mu_{a_j}.
inline void distributed_regret_step(RegretLedger& ledger,
                                    const std::vector<std::size_t>& arms_chosen,
                                    double comm_cost = 0.0) {
    if (arms_chosen.empty()) throw InputError("distributed_regret_step: no agents");
    double mean_sum = 0.0;
    for (std::size_t a : arms_chosen) {
        if (a >= ledger.true_means.size())
            throw InputError("distributed_regret_step: invalid arm index");
        mean_sum += ledger.true_means[a];
    }
    const double increment =
        ledger.optimal_mean - mean_sum / static_cast<double>(arms_chosen.size());
    ledger.distributed_regret += increment;
    ledger.cumulative_regret += increment;
    ledger.rounds.push_back(arms_chosen);
    ledger.comm_costs.push_back(comm_cost);
}

/// Recompute the distributed regret from the round records (audit path).
inline double recompute_distributed_regret(const RegretLedger& ledger) {
    double total = 0.0;
    for (const auto& round : ledger.rounds) {
        double mean_sum = 0.0;
        for (std::size_t a : round) mean_sum += ledger.true_means[a];
        total += ledger.optimal_mean - mean_sum / static_cast<double>(round.size());
    }
    return total;
}

/// R_eff = R_dist + w_c * sum_t C_comm(t).
inline double effective_regret(const RegretLedger& ledger) {
    double comm = 0.0;
    for (double c : ledger.comm_costs) comm += c;
    return ledger.distributed_regret + ledger.comm_weight * comm;
}

/// Finite-time UCB bound: sum_i [ 8 ln T / Delta_i + (1 + pi^2/3) Delta_i ].
inline double ucb_regret_bound(const std::vector<double>& gaps, long t_rounds) {
    if (t_rounds < 2) throw InputError("ucb_regret_bound: T must be >= 2");
    const double log_t = std::log(static_cast<double>(t_rounds));
    const double tail = 1.0 + std::numbers::pi * std::numbers::pi / 3.0;
    double bound = 0.0;
    for (double gap : gaps) {
        if (!(gap > 0.0)) throw InputError("ucb_regret_bound: gaps must be positive");
        bound += 8.0 * log_t / gap + tail * gap;
    }
    return bound;
}

enum class DelayKind { Zero, UniformInteger, Constant };

/// Bounded feedback delay: realized delays never exceed tau_max.
struct DelaySpec {
    DelayKind kind = DelayKind::Zero;
    long tau_max = 0;

    void validate() const {
        if (tau_max < 0) throw InputError("DelaySpec: tau_max must be non-negative");
    }

    long sample(Rng& rng) const {
        switch (kind) {
            case DelayKind::Zero: return 0;
            case DelayKind::Constant: return tau_max;
            case DelayKind::UniformInteger:
                return static_cast<long>(rng.uniform_int(static_cast<std::uint64_t>(tau_max) + 1));
        }
        throw InputError("DelaySpec: unknown kind");
    }
};

struct FeedbackEvent {
    long issue_round = 0;
    std::size_t agent = 0;
    std::size_t arm = 0;
    double reward = 0.0;
};

struct Delivery {
    long delivery_round = 0;
    FeedbackEvent event;
};

/// Assign each event a delivery round issue + delta, delta <= tau_max; the
/// schedule is sorted by (delivery_round, agent) so same-round deliveries are
/// applied in ascending agent order.
inline std::vector<Delivery> delayed_feedback_buffer(const std::vector<FeedbackEvent>& events,
                                                     const DelaySpec& delay, Rng& rng) {
    delay.validate();
    std::vector<Delivery> schedule;
    schedule.reserve(events.size());
    for (const auto& ev : events)
        schedule.push_back({ev.issue_round + delay.sample(rng), ev});
    std::stable_sort(schedule.begin(), schedule.end(), [](const Delivery& a, const Delivery& b) {
        if (a.delivery_round != b.delivery_round) return a.delivery_round < b.delivery_round;
        return a.event.agent < b.event.agent;
    });
    return schedule;
}

}  // namespace almabdc
