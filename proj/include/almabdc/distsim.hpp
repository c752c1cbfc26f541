#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "almabdc/bandit.hpp"
#include "almabdc/errors.hpp"
#include "almabdc/rng.hpp"

namespace almabdc {

struct TaskDurationModel {
    enum class Kind { Constant, LogNormal };
    Kind kind = Kind::Constant;
    double constant = 1.0;
    double mu_log = 0.0;
    double sigma_log = 0.3;

    double sample(Rng& rng) const {
        switch (kind) {
            case Kind::Constant:
                if (!(constant > 0.0)) throw InputError("TaskDurationModel: duration must be > 0");
                return constant;
            case Kind::LogNormal:
                return rng.lognormal(mu_log, sigma_log);
        }
        throw InputError("TaskDurationModel: unknown kind");
    }

    double mean() const {
        if (kind == Kind::Constant) return constant;
        return std::exp(mu_log + 0.5 * sigma_log * sigma_log);
    }
};

// Sort rank doubles as the within-tie order: a completion precedes the
// posterior update and re-dispatch that share its timestamp.
enum class SimEventKind { Complete = 0, PosteriorUpdate = 1, Dispatch = 2 };

struct SimEvent {
    double virtual_time = 0.0;
    std::size_t agent = 0;
    SimEventKind kind = SimEventKind::Dispatch;
    long task_id = 0;
    std::ptrdiff_t arm = -1;
    double reward = 0.0;
};

struct SimTrace {
    std::vector<SimEvent> events;   // sorted by (virtual_time, agent, kind)
    double wall_clock = 0.0;        // max Complete time
    std::vector<double> busy_time;  // per-agent evaluation time

    void sort_events() {
        std::stable_sort(events.begin(), events.end(), [](const SimEvent& a, const SimEvent& b) {
            if (a.virtual_time != b.virtual_time) return a.virtual_time < b.virtual_time;
            if (a.agent != b.agent) return a.agent < b.agent;
            return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        });
    }
};

/// One completed evaluation, in completion order.
struct CompletionRecord {
    long ordinal = 0;  // 0-based completion index
    std::size_t agent = 0;
    std::size_t arm = 0;
    double reward = 0.0;
    double dispatch_time = 0.0;
    double complete_time = 0.0;
};

struct SimResult {
    SimTrace trace;
    std::vector<CompletionRecord> completions;
};

enum class DispatchMode { BatchDiverse, ReplicateAveraging };

struct SimOptions {
    DispatchMode mode = DispatchMode::BatchDiverse;
    TaskDurationModel durations;
    DelaySpec delay;
    /// Virtual-time cost of applying one posterior update on the single
    /// logical model resource. While an update runs, evaluation progress is
    /// frozen, which is what makes this cost a serial fraction.
    double serial_update_cost = 0.0;
};

/// Line-delimited JSON export of a trace (debugging / plotting).
inline void write_trace_jsonl(const SimTrace& trace, std::ostream& os) {
    auto kind_name = [](SimEventKind k) {
        switch (k) {
            case SimEventKind::Dispatch: return "dispatch";
            case SimEventKind::Complete: return "complete";
            case SimEventKind::PosteriorUpdate: return "posterior_update";
        }
        return "?";
    };
    char buf[64];
    for (const auto& ev : trace.events) {
        std::snprintf(buf, sizeof(buf), "%.17g", ev.virtual_time);
        os << "{\"time\":" << buf << ",\"agent\":" << ev.agent << ",\"kind\":\""
           << kind_name(ev.kind) << "\",\"task\":" << ev.task_id << ",\"arm\":" << ev.arm;
        std::snprintf(buf, sizeof(buf), "%.17g", ev.reward);
        os << ",\"reward\":" << buf << "}\n";
    }
}

inline void write_trace_jsonl(const SimTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("write_trace_jsonl: cannot open " + path);
    write_trace_jsonl(trace, os);
}

/// Deterministic discrete-event simulation of K asynchronous agents.
///
/// Oracle: double(std::size_t arm, long ordinal, Rng&) — called once per task
///         at dispatch (the draw is banked and revealed at completion).
/// Policy (duck-typed):
///   std::size_t next_query(std::size_t agent) — choose the next arm;
///   void on_dispatch(std::size_t arm)         — in-flight bookkeeping;
///   void deliver(std::size_t arm, double r)   — feedback visible to learner.
///
/// BatchDiverse: each idle agent requests its own query; feedback becomes
/// visible delay * mean-duration after the posterior update completes.
/// ReplicateAveraging: all K agents evaluate one shared arm per round and the
/// averaged reward is delivered, delayed by whole rounds.
template <typename Oracle, typename Policy>
SimResult simulate_async_run(Oracle&& oracle, Policy& policy, int k_agents, long budget,
                             const SimOptions& options, Rng& rng) {
    if (k_agents < 1) throw InputError("simulate_async_run: K must be >= 1");
    if (budget < k_agents) throw InputError("simulate_async_run: budget must be >= K");
    options.delay.validate();

    const std::size_t k = static_cast<std::size_t>(k_agents);
    Rng duration_rng = rng.derive("durations");
    Rng delay_rng = rng.derive("delays");
    Rng oracle_rng = rng.derive("oracle");
    Rng policy_rng = rng.derive("policy");
    (void)policy_rng;

    SimResult result;
    result.trace.busy_time.assign(k, 0.0);

    if (options.mode == DispatchMode::ReplicateAveraging) {
        if (budget % k_agents != 0)
            throw InputError("simulate_async_run: averaging mode needs budget divisible by K");
        const long rounds = budget / k_agents;
        struct PendingDelivery {
            long round;
            std::size_t arm;
            double reward;
        };
        std::vector<PendingDelivery> pending;
        double now = 0.0;
        long ordinal = 0;
        for (long r = 0; r < rounds; ++r) {
            // Apply feedback scheduled for this round before deciding.
            for (auto it = pending.begin(); it != pending.end();) {
                if (it->round <= r) {
                    policy.deliver(it->arm, it->reward);
                    it = pending.erase(it);
                } else {
                    ++it;
                }
            }
            const std::size_t arm = policy.next_query(0);
            policy.on_dispatch(arm);
            double round_end = now;
            double reward_sum = 0.0;
            for (std::size_t agent = 0; agent < k; ++agent) {
                const double duration = options.durations.sample(duration_rng);
                const double reward =
                    oracle(arm, ordinal, oracle_rng);
                result.trace.events.push_back(
                    {now, agent, SimEventKind::Dispatch, ordinal, static_cast<std::ptrdiff_t>(arm), 0.0});
                result.trace.events.push_back({now + duration, agent, SimEventKind::Complete,
                                               ordinal, static_cast<std::ptrdiff_t>(arm), reward});
                result.trace.busy_time[agent] += duration;
                result.completions.push_back({ordinal, agent, arm, reward, now, now + duration});
                reward_sum += reward;
                round_end = std::max(round_end, now + duration);
                ++ordinal;
            }
            const double averaged = reward_sum / static_cast<double>(k);
            round_end += options.serial_update_cost;
            result.trace.events.push_back({round_end, 0, SimEventKind::PosteriorUpdate,
                                           ordinal - 1, static_cast<std::ptrdiff_t>(arm), averaged});
            pending.push_back({r + 1 + options.delay.sample(delay_rng), arm, averaged});
            now = round_end;
        }
        // Wall clock per the trace contract: last Complete event.
        double wall = 0.0;
        for (const auto& ev : result.trace.events)
            if (ev.kind == SimEventKind::Complete) wall = std::max(wall, ev.virtual_time);
        result.trace.wall_clock = wall;
        result.trace.sort_events();
        return result;
    }

    // Batch-diverse asynchronous mode.
    struct InFlight {
        bool busy = false;
        double complete_at = 0.0;
        double dispatched_at = 0.0;
        std::size_t arm = 0;
        double reward = 0.0;
        long task_id = 0;
    };
    struct Visible {
        double time;
        std::size_t agent;
        std::size_t arm;
        double reward;
    };
    std::vector<InFlight> agents(k);
    std::vector<Visible> inbox;  // feedback not yet visible to the policy
    const double delay_scale = options.durations.mean();

    long dispatched = 0;
    long completed = 0;
    double now = 0.0;

    auto flush_inbox = [&](double time) {
        std::stable_sort(inbox.begin(), inbox.end(), [](const Visible& a, const Visible& b) {
            if (a.time != b.time) return a.time < b.time;
            return a.agent < b.agent;
        });
        std::size_t applied = 0;
        while (applied < inbox.size() && inbox[applied].time <= time) {
            policy.deliver(inbox[applied].arm, inbox[applied].reward);
            ++applied;
        }
        inbox.erase(inbox.begin(), inbox.begin() + static_cast<std::ptrdiff_t>(applied));
    };

    auto dispatch = [&](std::size_t agent) {
        flush_inbox(now);
        const std::size_t arm = policy.next_query(agent);
        policy.on_dispatch(arm);
        auto& slot = agents[agent];
        slot.busy = true;
        slot.dispatched_at = now;
        slot.complete_at = now + options.durations.sample(duration_rng);
        slot.arm = arm;
        slot.reward = oracle(arm, dispatched, oracle_rng);
        slot.task_id = dispatched;
        result.trace.events.push_back(
            {now, agent, SimEventKind::Dispatch, slot.task_id, static_cast<std::ptrdiff_t>(arm), 0.0});
        ++dispatched;
    };

    for (std::size_t agent = 0; agent < k && dispatched < budget; ++agent) dispatch(agent);

    while (completed < budget) {
        // Earliest completion; ties resolved by agent index.
        std::size_t next_agent = k;
        double next_time = std::numeric_limits<double>::infinity();
        for (std::size_t agent = 0; agent < k; ++agent) {
            if (agents[agent].busy && agents[agent].complete_at < next_time) {
                next_time = agents[agent].complete_at;
                next_agent = agent;
            }
        }
        if (next_agent == k) throw NumericalError("simulate_async_run: deadlock (no busy agent)");

        now = next_time;
        auto& slot = agents[next_agent];
        slot.busy = false;
        result.trace.events.push_back({now, next_agent, SimEventKind::Complete, slot.task_id,
                                       static_cast<std::ptrdiff_t>(slot.arm), slot.reward});
        result.trace.busy_time[next_agent] += now - slot.dispatched_at;
        result.completions.push_back(
            {completed, next_agent, slot.arm, slot.reward, slot.dispatched_at, now});
        ++completed;

        // The posterior update freezes evaluation progress on all agents.
        if (options.serial_update_cost > 0.0) {
            for (auto& other : agents)
                if (other.busy) other.complete_at += options.serial_update_cost;
            now += options.serial_update_cost;
        }
        result.trace.events.push_back({now, next_agent, SimEventKind::PosteriorUpdate, slot.task_id,
                                       static_cast<std::ptrdiff_t>(slot.arm), slot.reward});

        const double visible_at =
            now + static_cast<double>(options.delay.sample(delay_rng)) * delay_scale;
        inbox.push_back({visible_at, next_agent, slot.arm, slot.reward});

        if (dispatched < budget) dispatch(next_agent);
    }

    double wall = 0.0;
    for (const auto& ev : result.trace.events)
        if (ev.kind == SimEventKind::Complete) wall = std::max(wall, ev.virtual_time);
    result.trace.wall_clock = wall;
    result.trace.sort_events();
    return result;
}

}  // namespace almabdc
