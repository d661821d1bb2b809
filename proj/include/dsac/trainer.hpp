#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsac/critic.hpp"
#include "dsac/errors.hpp"
#include "dsac/graph.hpp"
#include "dsac/mdp.hpp"
#include "dsac/policy.hpp"
#include "dsac/rng.hpp"
#include "dsac/sampling.hpp"
#include "dsac/schedule.hpp"
#include "dsac/utility.hpp"

namespace dsac {

/// G_theta_i = sum_t gamma^t Q_w(s^t, a^t) grad log pi_i(a^t_(i) | s^t), as an
/// S x A_i table.
inline RowMatrix actor_gradient(const FactoredMdp& mdp, const Trajectory& tau, const CriticWeights& w,
                                const SoftmaxPolicyParams& theta, const FeatureMap& phi) {
    RowMatrix g = RowMatrix::Zero(theta.logits.rows(), theta.logits.cols());
    double discount = 1.0;
    for (const auto& step : tau.steps) {
        const double q = phi.dot(step.state, step.action, w.w);
        if (q != 0.0) {
            const auto row = static_cast<Eigen::Index>(step.state);
            const Eigen::VectorXd probs = action_probs(theta, step.state);
            g.row(row) -= (discount * q) * probs.transpose();
            g(row, static_cast<Eigen::Index>(mdp.local_action(theta.agent, step.action))) += discount * q;
        }
        discount *= mdp.discount();
    }
    return g;
}

/// Batch mean of actor_gradient, summed in trajectory order.
inline RowMatrix actor_batch_direction(const FactoredMdp& mdp, const std::vector<Trajectory>& batch,
                                       const CriticWeights& w, const SoftmaxPolicyParams& theta,
                                       const FeatureMap& phi) {
    if (batch.empty()) throw EstimatorError("actor_batch_direction: empty batch");
    RowMatrix sum = RowMatrix::Zero(theta.logits.rows(), theta.logits.cols());
    for (const auto& tau : batch) sum += actor_gradient(mdp, tau, w, theta, phi);
    return sum / static_cast<double>(batch.size());
}

/// theta^k, stacked critics W^k (d x N, column i is agent i), and k.
struct TrainerState {
    JointPolicy policy;
    Eigen::MatrixXd critics;
    std::size_t iteration = 0;
    std::uint64_t seed = 0;

    CriticWeights critic(std::size_t agent) const {
        return {agent, critics.col(static_cast<Eigen::Index>(agent))};
    }
};

struct IterationMetrics {
    std::size_t k = 0;
    double global_utility = 0.0;  // mean of F_i at the empirical measures
    std::vector<double> utility;
    double consensus_error = 0.0;          // after mixing
    double consensus_error_pre_mix = 0.0;  // after the critic step
    double grad_norm_sq = 0.0;             // sum_i ||actor direction_i||^2
    std::vector<double> constraint_gap;
    std::vector<double> entropy;  // Shannon entropy of the normalized state marginal
    std::size_t shadow_cap_violations = 0;
    double eta_theta = 0.0;
    double eta_w = 0.0;
    std::size_t batch = 0;
    std::size_t horizon = 0;
    double wall_ms = 0.0;
};

/// How critics are combined after the local step.
enum class CriticSync {
    gossip,         // W <- W M^m
    exact_average,  // W <- W J / N (centralized reference)
};

/// Instrumentation. Every callback is optional.
struct TrainerHooks {
    std::function<void(std::size_t k, std::size_t agent, const Eigen::VectorXd& w_used,
                       const Eigen::MatrixXd& shadow)> on_critic_step;
    std::function<void(std::size_t k, const Eigen::MatrixXd& before, const Eigen::MatrixXd& after)> on_mix;
    std::function<void(std::size_t k, std::size_t agent, const Eigen::VectorXd& w_used)> on_actor_step;
    std::function<void(const std::vector<Trajectory>& batch)> on_batch;
};

struct TrainerOptions {
    CriticSync sync = CriticSync::gossip;
    bool record_wall_time = false;
    /// Throw BoundError when a shadow reward exceeds its cap instead of counting it.
    bool strict_shadow_cap = false;
};

struct TrainResult {
    std::vector<IterationMetrics> metrics;
    TrainerState final_state;
};

/// Decentralized shadow-reward actor-critic.
///
/// One iteration: B_k rollouts of length H_k under the current joint policy;
/// per agent, the empirical local occupancy and its shadow reward; one critic
/// gradient step per agent; m gossip rounds over the critics; one actor step
/// per agent using its post-mixing critic.
class DsacTrainer {
public:
    DsacTrainer(FactoredMdp mdp, std::vector<UtilitySpec> utilities, FeatureMap features,
                MixingMatrix mixing, Schedule schedule, std::uint64_t seed, TrainerOptions options = {})
        : mdp_(std::move(mdp)), utilities_(std::move(utilities)), phi_(std::move(features)),
          mixing_(std::move(mixing)), schedule_(std::move(schedule)), seed_(seed), options_(options) {
        if (utilities_.size() != mdp_.n_agents())
            throw ConfigError("trainer: " + std::to_string(utilities_.size()) + " utilities for " +
                              std::to_string(mdp_.n_agents()) + " agents");
        for (std::size_t i = 0; i < utilities_.size(); ++i)
            validate_utility(utilities_[i], mdp_.local_states(i), mdp_.local_actions(i));
        if (mixing_.size() != mdp_.n_agents())
            throw ConfigError("trainer: mixing matrix size does not match the number of agents");
        if (phi_.num_states() != mdp_.num_states() || phi_.num_actions() != mdp_.num_actions())
            throw ConfigError("trainer: feature map does not match the MDP");
    }

    const FactoredMdp& mdp() const noexcept { return mdp_; }
    const std::vector<UtilitySpec>& utilities() const noexcept { return utilities_; }
    const FeatureMap& features() const noexcept { return phi_; }
    const MixingMatrix& mixing() const noexcept { return mixing_; }
    const Schedule& schedule() const noexcept { return schedule_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform policies and identical all-zero critics.
    TrainerState initial_state() const {
        return {JointPolicy::uniform(mdp_), Eigen::MatrixXd::Zero(phi_.dim(), static_cast<Eigen::Index>(mdp_.n_agents())),
                0, seed_};
    }

    void check_state(const TrainerState& state) const {
        check_policy_matches(mdp_, state.policy);
        if (state.critics.rows() != phi_.dim() ||
            static_cast<std::size_t>(state.critics.cols()) != mdp_.n_agents())
            throw ConfigError("trainer state: critic matrix must be d x N");
        if (!state.critics.allFinite()) throw ConfigError("trainer state: non-finite critic weights");
    }

    /// Runs iteration k from `state`; returns the new state and its metrics.
    std::pair<TrainerState, IterationMetrics> iteration(const TrainerState& state, std::size_t k,
                                                        const TrainerHooks& hooks = {}) const {
        const auto started = std::chrono::steady_clock::now();
        check_state(state);
        const IterationParams params = schedule_.at(k);
        const std::size_t n = mdp_.n_agents();

        IterationMetrics metrics;
        metrics.k = k;
        metrics.eta_theta = params.eta_theta;
        metrics.eta_w = params.eta_w;
        metrics.batch = params.batch;
        metrics.horizon = params.horizon;

        // (1) rollouts
        const RngStream root = RngStream::derive(seed_, k);
        std::vector<Trajectory> batch;
        try {
            batch = rollout_batch(mdp_, state.policy, params.batch, params.horizon, root);
        } catch (const Error& e) {
            throw IterationError(static_cast<long>(k), "rollout", e.what());
        }
        if (hooks.on_batch) hooks.on_batch(batch);

        // (2) occupancy estimates and shadow rewards
        std::vector<Eigen::MatrixXd> shadows(n);
        try {
            for (std::size_t i = 0; i < n; ++i) {
                const OccupancyMeasure lambda = empirical_local_occupancy(mdp_, batch, i);
                ShadowRewardTable table = shadow_reward(utilities_[i], lambda);
                if (!table.within_cap()) {
                    ++metrics.shadow_cap_violations;
                    if (options_.strict_shadow_cap) table.check_bounded();
                }
                shadows[i] = std::move(table.values);
                metrics.utility.push_back(utility_value(utilities_[i], lambda));
                metrics.constraint_gap.push_back(constraint_gap(utilities_[i], lambda));
                metrics.entropy.push_back(state_entropy(lambda));
            }
            metrics.global_utility = aggregate_global(metrics.utility);
        } catch (const Error& e) {
            throw IterationError(static_cast<long>(k), "shadow_reward", e.what());
        }

        // (3) local critic steps from w^k
        TrainerState next = state;
        next.iteration = k + 1;
        try {
            for (std::size_t i = 0; i < n; ++i) {
                const CriticWeights w = state.critic(i);
                if (hooks.on_critic_step) hooks.on_critic_step(k, i, w.w, shadows[i]);
                const Eigen::VectorXd dir = critic_batch_direction(mdp_, batch, shadows[i], i, w, phi_);
                next.critics.col(static_cast<Eigen::Index>(i)) = w.w - params.eta_w * dir;
            }
        } catch (const Error& e) {
            throw IterationError(static_cast<long>(k), "critic", e.what());
        }

        // (4) information mixing
        metrics.consensus_error_pre_mix = consensus_error(next.critics);
        const Eigen::MatrixXd before = next.critics;
        if (options_.sync == CriticSync::gossip) {
            next.critics = mix(next.critics, mixing_, schedule_.mixing_rounds());
        } else {
            next.critics = mix(next.critics, averaging_matrix(n), 1);
        }
        metrics.consensus_error = consensus_error(next.critics);
        if (hooks.on_mix) hooks.on_mix(k, before, next.critics);

        // (5) actor steps with the post-mixing critics w^{k+1}
        try {
            for (std::size_t i = 0; i < n; ++i) {
                const CriticWeights w = next.critic(i);
                if (hooks.on_actor_step) hooks.on_actor_step(k, i, w.w);
                const RowMatrix dir = actor_batch_direction(mdp_, batch, w, state.policy.per_agent[i], phi_);
                metrics.grad_norm_sq += dir.squaredNorm();
                next.policy.per_agent[i].logits += params.eta_theta * dir;
            }
        } catch (const Error& e) {
            throw IterationError(static_cast<long>(k), "actor", e.what());
        }
        if (!next.critics.allFinite())
            throw IterationError(static_cast<long>(k), "critic", "critic weights diverged");
        for (const auto& p : next.policy.per_agent)
            if (!p.logits.allFinite()) throw IterationError(static_cast<long>(k), "actor", "logits diverged");

        if (options_.record_wall_time)
            metrics.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        return {std::move(next), std::move(metrics)};
    }

    /// Runs iterations state.iteration .. T-1. `on_iteration` sees every new
    /// state, e.g. for checkpointing.
    TrainResult train(TrainerState state, const TrainerHooks& hooks = {},
                      const std::function<void(const TrainerState&, const IterationMetrics&)>& on_iteration = {}) const {
        TrainResult result;
        for (std::size_t k = state.iteration; k < schedule_.iterations(); ++k) {
            auto [next, metrics] = iteration(state, k, hooks);
            state = std::move(next);
            if (on_iteration) on_iteration(state, metrics);
            result.metrics.push_back(std::move(metrics));
        }
        result.final_state = std::move(state);
        return result;
    }

    TrainResult train(const TrainerHooks& hooks = {}) const { return train(initial_state(), hooks); }

private:
    FactoredMdp mdp_;
    std::vector<UtilitySpec> utilities_;
    FeatureMap phi_;
    MixingMatrix mixing_;
    Schedule schedule_;
    std::uint64_t seed_;
    TrainerOptions options_;
};

/// Running weighted average sum_k eta_k x_k / sum_k eta_k.
inline std::vector<double> step_weighted_average(const std::vector<double>& values, const std::vector<double>& weights) {
    std::vector<double> out;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < values.size() && k < weights.size(); ++k) {
        num += weights[k] * values[k];
        den += weights[k];
        out.push_back(den > 0.0 ? num / den : 0.0);
    }
    return out;
}

} // namespace dsac
