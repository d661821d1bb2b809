#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

#include "dsac/errors.hpp"
#include "dsac/mdp.hpp"
#include "dsac/policy.hpp"
#include "dsac/rng.hpp"

namespace dsac {

/// s' ~ P(. | s, a), walking the nonzeros of the kernel row.
inline std::size_t sample_next_state(const FactoredMdp& mdp, std::size_t s, std::size_t a, RngStream& rng) {
    const SparseKernel& k = mdp.kernel();
    const Eigen::Index row = mdp.kernel_row(s, a);
    const double u = rng.uniform();
    double acc = 0.0;
    Eigen::Index last = 0;
    for (SparseKernel::InnerIterator it(k, row); it; ++it) {
        acc += it.value();
        if (u < acc) return static_cast<std::size_t>(it.col());
        if (it.value() > 0.0) last = it.col();
    }
    return static_cast<std::size_t>(last);
}

/// One episode of H+1 steps: s^0 ~ xi, a^t ~ pi(.|s^t), s^{t+1} ~ P(.|s^t, a^t).
inline Trajectory rollout(const FactoredMdp& mdp, const JointPolicy& policy,
                          std::size_t horizon, RngStream& rng) {
    check_policy_matches(mdp, policy);
    Trajectory tau;
    tau.steps.reserve(horizon + 1);
    std::size_t s = sample_categorical(mdp.initial_dist(), rng);
    for (std::size_t t = 0; t <= horizon; ++t) {
        const std::size_t a = sample_joint_action(mdp, policy, s, rng);
        tau.steps.push_back({s, a});
        if (t < horizon) s = sample_next_state(mdp, s, a, rng);
    }
    return tau;
}

/// Worker count from DSAC_THREADS; 1 (sequential) when unset or invalid.
inline std::size_t rollout_threads() {
    const char* env = std::getenv("DSAC_THREADS");
    if (env == nullptr) return 1;
    const long n = std::strtol(env, nullptr, 10);
    return n > 1 ? static_cast<std::size_t>(n) : 1;
}

/// B trajectories; trajectory b uses the stream `root.split(b)`, so the result
/// does not depend on how many threads produced it.
inline std::vector<Trajectory> rollout_batch(const FactoredMdp& mdp, const JointPolicy& policy,
                                             std::size_t batch, std::size_t horizon,
                                             const RngStream& root,
                                             std::size_t threads = rollout_threads()) {
    check_policy_matches(mdp, policy);
    std::vector<Trajectory> out(batch);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            RngStream rng = root.split(b);
            out[b] = rollout(mdp, policy, horizon, rng);
        }
    };
    threads = std::min(threads, std::max<std::size_t>(batch, 1));
    if (threads <= 1) {
        work(0, batch);
        return out;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (batch + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(batch, begin + chunk);
        if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& t : pool) t.join();
    return out;
}

/// Batch average of sum_t gamma^t e(s^t_(i), a^t_(i)). Not renormalized: the
/// total mass is (1 - gamma^(H+1)) / (1 - gamma).
inline OccupancyMeasure empirical_local_occupancy(const FactoredMdp& mdp,
                                                  const std::vector<Trajectory>& batch,
                                                  std::size_t agent) {
    if (batch.empty()) throw EstimatorError("empirical_local_occupancy: empty batch");
    if (agent >= mdp.n_agents()) throw ScopeError("empirical_local_occupancy: agent out of range");
    const std::size_t horizon = batch.front().horizon();
    const double gamma = mdp.discount();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mdp.local_states(agent)),
                                                static_cast<Eigen::Index>(mdp.local_actions(agent)));
    for (const auto& tau : batch) {
        if (tau.horizon() != horizon || tau.steps.empty())
            throw EstimatorError("empirical_local_occupancy: trajectories must share one horizon");
        double weight = 1.0;
        for (const auto& step : tau.steps) {
            sum(static_cast<Eigen::Index>(mdp.local_state(agent, step.state)),
                static_cast<Eigen::Index>(mdp.local_action(agent, step.action))) += weight;
            weight *= gamma;
        }
    }
    sum /= static_cast<double>(batch.size());
    return OccupancyMeasure::local(agent, std::move(sum), gamma);
}

/// Global-scope counterpart of empirical_local_occupancy (used by tests and
/// oracle checks).
inline OccupancyMeasure empirical_global_occupancy(const FactoredMdp& mdp,
                                                   const std::vector<Trajectory>& batch) {
    if (batch.empty()) throw EstimatorError("empirical_global_occupancy: empty batch");
    const double gamma = mdp.discount();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mdp.num_states()),
                                                static_cast<Eigen::Index>(mdp.num_actions()));
    for (const auto& tau : batch) {
        double weight = 1.0;
        for (const auto& step : tau.steps) {
            sum(static_cast<Eigen::Index>(step.state), static_cast<Eigen::Index>(step.action)) += weight;
            weight *= gamma;
        }
    }
    sum /= static_cast<double>(batch.size());
    return OccupancyMeasure::global(std::move(sum), gamma);
}

} // namespace dsac
