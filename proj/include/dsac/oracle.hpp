#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsac/errors.hpp"
#include "dsac/mdp.hpp"
#include "dsac/policy.hpp"
#include "dsac/utility.hpp"

// Exact dynamic-programming ground truth for small MDPs. Everything here is a
// dense linear solve; nothing samples.

namespace dsac::oracle {

inline constexpr std::size_t kDefaultStateCap = 5000;

struct ExactSolveReport {
    double residual_norm = 0.0;
    long matrix_dim = 0;
};

namespace detail {

inline void require_cap(const FactoredMdp& mdp, std::size_t cap) {
    if (mdp.num_states() > cap)
        throw OracleError("exact oracle: " + std::to_string(mdp.num_states()) +
                          " global states exceed the cap of " + std::to_string(cap));
}

/// P_pi(s, s') = sum_a pi(a|s) P(s'|s, a).
inline Eigen::MatrixXd state_transition(const FactoredMdp& mdp, const RowMatrix& pi) {
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    const auto A = static_cast<Eigen::Index>(mdp.num_actions());
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(S, S);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a) {
            const double w = pi(s, a);
            if (w == 0.0) continue;
            for (SparseKernel::InnerIterator it(mdp.kernel(), s * A + a); it; ++it) p(s, it.col()) += w * it.value();
        }
    return p;
}

inline Eigen::VectorXd solve_checked(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs,
                                     ExactSolveReport* report) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    Eigen::VectorXd x = lu.solve(rhs);
    const double residual = (m * x - rhs).norm();
    const double scale = std::max(1.0, rhs.norm());
    if (!x.allFinite() || residual > 1e-9 * scale)
        throw OracleError("exact oracle: linear solve failed (residual " + std::to_string(residual) + ")");
    if (report) *report = {residual, static_cast<long>(m.rows())};
    return x;
}

} // namespace detail

/// lambda(s, a) = nu(s) pi(a|s) with (I - gamma P_pi^T) nu = xi.
inline OccupancyMeasure exact_occupancy(const FactoredMdp& mdp, const JointPolicy& policy,
                                        std::size_t cap = kDefaultStateCap,
                                        ExactSolveReport* report = nullptr) {
    detail::require_cap(mdp, cap);
    const RowMatrix pi = joint_policy_table(mdp, policy);
    const Eigen::MatrixXd p = detail::state_transition(mdp, pi);
    const auto S = p.rows();
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - mdp.discount() * p.transpose();
    const Eigen::VectorXd nu = detail::solve_checked(system, mdp.initial_dist(), report);
    Eigen::MatrixXd mass = nu.asDiagonal() * pi;
    return OccupancyMeasure::global(std::move(mass), mdp.discount());
}

/// Q(s, a) = r(s, a) + gamma sum_s' P(s'|s,a) sum_a' pi(a'|s') Q(s', a'),
/// for a reward table over global pairs.
inline Eigen::MatrixXd exact_shadow_q(const FactoredMdp& mdp, const JointPolicy& policy,
                                      const Eigen::MatrixXd& reward,
                                      std::size_t cap = kDefaultStateCap,
                                      ExactSolveReport* report = nullptr) {
    detail::require_cap(mdp, cap);
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    const auto A = static_cast<Eigen::Index>(mdp.num_actions());
    if (reward.rows() != S || reward.cols() != A)
        throw ShapeError("exact_shadow_q: reward must be S x A");
    if (!reward.allFinite()) throw OracleError("exact_shadow_q: non-finite reward");
    // Solve for V first: (I - gamma P_pi) V = r_pi, then Q = r + gamma P V.
    const RowMatrix pi = joint_policy_table(mdp, policy);
    const Eigen::MatrixXd p = detail::state_transition(mdp, pi);
    const Eigen::VectorXd r_pi = (pi.array() * reward.array()).rowwise().sum();
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - mdp.discount() * p;
    const Eigen::VectorXd v = detail::solve_checked(system, r_pi, report);
    const Eigen::VectorXd pv = mdp.kernel() * v;  // (S*A) entries, row s*A + a
    Eigen::MatrixXd q(S, A);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a) q(s, a) = reward(s, a) + mdp.discount() * pv(s * A + a);
    return q;
}

/// Lifts agent i's local table onto global pairs: out(s, a) = local(s_(i), a_(i)).
inline Eigen::MatrixXd lift_local(const FactoredMdp& mdp, std::size_t agent, const Eigen::MatrixXd& local) {
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    const auto A = static_cast<Eigen::Index>(mdp.num_actions());
    Eigen::MatrixXd out(S, A);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a)
            out(s, a) = local(static_cast<Eigen::Index>(mdp.local_state(agent, static_cast<std::size_t>(s))),
                              static_cast<Eigen::Index>(mdp.local_action(agent, static_cast<std::size_t>(a))));
    return out;
}

inline std::vector<OccupancyMeasure> exact_local_occupancies(const FactoredMdp& mdp, const JointPolicy& policy,
                                                             std::size_t cap = kDefaultStateCap) {
    const OccupancyMeasure global = exact_occupancy(mdp, policy, cap);
    std::vector<OccupancyMeasure> out;
    for (std::size_t i = 0; i < mdp.n_agents(); ++i) out.push_back(marginalize(mdp, global, i));
    return out;
}

/// R(pi) = (1/N) sum_i F_i(lambda_(i)).
inline double exact_global_utility(const FactoredMdp& mdp, const JointPolicy& policy,
                                   const std::vector<UtilitySpec>& utilities,
                                   std::size_t cap = kDefaultStateCap) {
    if (utilities.size() != mdp.n_agents())
        throw ConfigError("exact_global_utility: need one utility per agent");
    const auto locals = exact_local_occupancies(mdp, policy, cap);
    std::vector<double> values;
    for (std::size_t i = 0; i < locals.size(); ++i) values.push_back(utility_value(utilities[i], locals[i]));
    return aggregate_global(values);
}

/// Global shadow reward r(s, a) = (1/N) sum_i r_i(s_(i), a_(i)) at the exact measure.
inline Eigen::MatrixXd exact_global_shadow_reward(const FactoredMdp& mdp, const JointPolicy& policy,
                                                  const std::vector<UtilitySpec>& utilities,
                                                  std::size_t cap = kDefaultStateCap) {
    const auto locals = exact_local_occupancies(mdp, policy, cap);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mdp.num_states()),
                                              static_cast<Eigen::Index>(mdp.num_actions()));
    for (std::size_t i = 0; i < locals.size(); ++i)
        r += lift_local(mdp, i, shadow_reward(utilities[i], locals[i]).values);
    return r / static_cast<double>(mdp.n_agents());
}

/// Flattens per-agent logit tables into one vector (agent-major, row-major).
inline Eigen::VectorXd flatten(const JointPolicy& policy) {
    Eigen::Index n = 0;
    for (const auto& p : policy.per_agent) n += p.logits.size();
    Eigen::VectorXd v(n);
    Eigen::Index k = 0;
    for (const auto& p : policy.per_agent) {
        v.segment(k, p.logits.size()) = Eigen::Map<const Eigen::VectorXd>(p.logits.data(), p.logits.size());
        k += p.logits.size();
    }
    return v;
}

/// Per-agent score expectation sum_{s,a} lambda(s,a) Q(s,a) grad log pi_i(a_(i)|s),
/// the exact policy gradient when Q is the shadow Q of the global utility.
inline JointPolicy exact_policy_gradient_from(const FactoredMdp& mdp, const JointPolicy& policy,
                                              const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& q) {
    JointPolicy grad = policy;
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    const auto A = static_cast<Eigen::Index>(mdp.num_actions());
    for (std::size_t i = 0; i < mdp.n_agents(); ++i) {
        auto& g = grad.per_agent[i].logits;
        g.setZero();
        for (Eigen::Index s = 0; s < S; ++s) {
            const Eigen::VectorXd probs = action_probs(policy.per_agent[i], static_cast<std::size_t>(s));
            for (Eigen::Index a = 0; a < A; ++a) {
                const double w = lambda(s, a) * q(s, a);
                if (w == 0.0) continue;
                const auto ai = static_cast<Eigen::Index>(mdp.local_action(i, static_cast<std::size_t>(a)));
                g.row(s) -= w * probs.transpose();
                g(s, ai) += w;
            }
        }
    }
    return grad;
}

/// Exact gradient of R(pi_theta): exact lambda, exact shadow reward, exact
/// shadow Q, combined through the score-function identity.
inline JointPolicy exact_policy_gradient(const FactoredMdp& mdp, const JointPolicy& policy,
                                         const std::vector<UtilitySpec>& utilities,
                                         std::size_t cap = kDefaultStateCap,
                                         double shadow_sign = 1.0) {
    const OccupancyMeasure lambda = exact_occupancy(mdp, policy, cap);
    const Eigen::MatrixXd r = shadow_sign * exact_global_shadow_reward(mdp, policy, utilities, cap);
    const Eigen::MatrixXd q = exact_shadow_q(mdp, policy, r, cap);
    return exact_policy_gradient_from(mdp, policy, lambda.mass, q);
}

/// Central differences of exact_global_utility over every logit.
inline Eigen::VectorXd finite_diff_gradient(const FactoredMdp& mdp, const JointPolicy& policy,
                                            const std::vector<UtilitySpec>& utilities,
                                            double h = 1e-5, std::size_t cap = kDefaultStateCap) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_gradient: step must be > 0");
    std::vector<double> out;
    JointPolicy probe = policy;
    for (auto& p : probe.per_agent) {
        for (Eigen::Index j = 0; j < p.logits.size(); ++j) {
            double& x = p.logits.data()[j];
            const double x0 = x;
            x = x0 + h;
            const double up = exact_global_utility(mdp, probe, utilities, cap);
            x = x0 - h;
            const double down = exact_global_utility(mdp, probe, utilities, cap);
            x = x0;
            out.push_back((up - down) / (2.0 * h));
        }
    }
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

/// sum_{s,a} lambda(s,a) phi phi^T restricted to one-hot features is
/// diagonal; this general form is used for projected features.
inline Eigen::MatrixXd feature_covariance(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& features) {
    // features: d x (S*A), column s*A + a
    const Eigen::Index A = lambda.cols();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(features.rows(), features.rows());
    for (Eigen::Index s = 0; s < lambda.rows(); ++s)
        for (Eigen::Index a = 0; a < A; ++a) {
            const double w = lambda(s, a);
            if (w != 0.0) cov.noalias() += w * features.col(s * A + a) * features.col(s * A + a).transpose();
        }
    return cov;
}

} // namespace dsac::oracle
