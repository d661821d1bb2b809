#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsac/errors.hpp"
#include "dsac/mdp.hpp"
#include "dsac/rng.hpp"

namespace dsac {

/// Agent i's tabular softmax policy over the global state:
/// pi_i(b | s) proportional to exp(logits(s, b)).
struct SoftmaxPolicyParams {
    std::size_t agent = 0;
    RowMatrix logits;  // S x A_i

    std::size_t num_states() const noexcept { return static_cast<std::size_t>(logits.rows()); }
    std::size_t num_actions() const noexcept { return static_cast<std::size_t>(logits.cols()); }
};

/// Product of per-agent policies.
struct JointPolicy {
    std::vector<SoftmaxPolicyParams> per_agent;

    std::size_t n_agents() const noexcept { return per_agent.size(); }

    /// All-zero logits, i.e. uniform local policies.
    static JointPolicy uniform(const FactoredMdp& mdp) {
        JointPolicy p;
        for (std::size_t i = 0; i < mdp.n_agents(); ++i)
            p.per_agent.push_back({i, RowMatrix::Zero(static_cast<Eigen::Index>(mdp.num_states()),
                                                      static_cast<Eigen::Index>(mdp.local_actions(i)))});
        return p;
    }
};

inline void check_policy_matches(const FactoredMdp& mdp, const JointPolicy& policy) {
    if (policy.n_agents() != mdp.n_agents())
        throw ConfigError("policy has " + std::to_string(policy.n_agents()) + " agents, MDP has " +
                          std::to_string(mdp.n_agents()));
    for (std::size_t i = 0; i < policy.n_agents(); ++i) {
        const auto& p = policy.per_agent[i];
        if (p.num_states() != mdp.num_states() || p.num_actions() != mdp.local_actions(i))
            throw ConfigError("policy table of agent " + std::to_string(i) + " does not match the MDP");
        if (!p.logits.allFinite())
            throw ConfigError("policy table of agent " + std::to_string(i) + " has non-finite logits");
    }
}

inline Eigen::VectorXd action_probs(const SoftmaxPolicyParams& params, std::size_t s) {
    if (s >= params.num_states())
        throw IndexError("action_probs: state " + std::to_string(s) + " out of range");
    const auto row = params.logits.row(static_cast<Eigen::Index>(s));
    Eigen::VectorXd p = (row.array() - row.maxCoeff()).exp().transpose();
    p /= p.sum();
    return p;
}

/// pi(a | s) for a global action, as the product of local probabilities.
inline double joint_action_prob(const FactoredMdp& mdp, const JointPolicy& policy,
                                std::size_t s, std::size_t a) {
    double prob = 1.0;
    for (std::size_t i = 0; i < policy.n_agents(); ++i)
        prob *= action_probs(policy.per_agent[i], s)(static_cast<Eigen::Index>(mdp.local_action(i, a)));
    return prob;
}

/// S x A table of pi(a | s).
inline RowMatrix joint_policy_table(const FactoredMdp& mdp, const JointPolicy& policy) {
    check_policy_matches(mdp, policy);
    const std::size_t n = mdp.n_agents();
    RowMatrix table(static_cast<Eigen::Index>(mdp.num_states()), static_cast<Eigen::Index>(mdp.num_actions()));
    std::vector<Eigen::VectorXd> local(n);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t i = 0; i < n; ++i) local[i] = action_probs(policy.per_agent[i], s);
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            double prob = 1.0;
            for (std::size_t i = 0; i < n; ++i)
                prob *= local[i](static_cast<Eigen::Index>(mdp.local_action(i, a)));
            table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = prob;
        }
    }
    return table;
}

/// Inverse-CDF draw from a probability vector.
inline std::size_t sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    const auto n = probs.size();
    for (Eigen::Index j = 0; j < n; ++j) {
        acc += probs(j);
        if (u < acc) return static_cast<std::size_t>(j);
    }
    // u landed in the rounding gap above the last partial sum
    for (Eigen::Index j = n; j-- > 0;)
        if (probs(j) > 0.0) return static_cast<std::size_t>(j);
    return static_cast<std::size_t>(n - 1);
}

/// Draws each agent's local action independently and encodes the joint action.
inline std::size_t sample_joint_action(const FactoredMdp& mdp, const JointPolicy& policy,
                                       std::size_t s, RngStream& rng) {
    std::size_t a = 0;
    for (std::size_t i = 0; i < policy.n_agents(); ++i) {
        const std::size_t ai = sample_categorical(action_probs(policy.per_agent[i], s), rng);
        a = a * mdp.local_actions(i) + ai;
    }
    return a;
}

/// Gradient of log pi_i(a_i | s) w.r.t. the logits. Only row s is nonzero;
/// it is returned as a dense vector over A_i: e_{a_i} - pi(. | s).
inline Eigen::VectorXd score_row(const SoftmaxPolicyParams& params, std::size_t s, std::size_t a_i) {
    if (a_i >= params.num_actions())
        throw IndexError("score: action " + std::to_string(a_i) + " out of range");
    Eigen::VectorXd g = -action_probs(params, s);
    g(static_cast<Eigen::Index>(a_i)) += 1.0;
    return g;
}

/// Full S x A_i score table (mostly zeros). Convenient for tests and oracles.
inline RowMatrix score(const SoftmaxPolicyParams& params, std::size_t s, std::size_t a_i) {
    RowMatrix g = RowMatrix::Zero(params.logits.rows(), params.logits.cols());
    g.row(static_cast<Eigen::Index>(s)) = score_row(params, s, a_i).transpose();
    return g;
}

/// Bound on the score norm for tabular softmax.
inline constexpr double kSoftmaxScoreBound = 1.4142135623730951;

} // namespace dsac
