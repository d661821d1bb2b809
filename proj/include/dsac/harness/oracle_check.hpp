#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsac/graph.hpp"
#include "dsac/harness/config.hpp"
#include "dsac/harness/experiment.hpp"
#include "dsac/oracle.hpp"
#include "dsac/rng.hpp"
#include "dsac/sampling.hpp"

namespace dsac::harness {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want, double floor = 1e-10) {
    const double diff = (got - want).norm();
    const double scale = std::max(want.norm(), got.norm());
    if (scale < floor) return 0.0;
    return diff / scale;
}

/// Random logits with entries N(0, scale^2).
inline JointPolicy random_policy(const FactoredMdp& mdp, RngStream rng, double scale = 1.0) {
    JointPolicy p = JointPolicy::uniform(mdp);
    for (auto& a : p.per_agent)
        for (Eigen::Index j = 0; j < a.logits.size(); ++j) a.logits.data()[j] = scale * rng.normal();
    return p;
}

/// Logit coordinates to probe: all of them, or `limit` distinct ones at random.
inline std::vector<std::size_t> probe_coordinates(std::size_t total, std::size_t limit, RngStream rng) {
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (limit == 0 || total <= limit) return idx;
    for (std::size_t i = 0; i < limit; ++i) std::swap(idx[i], idx[i + rng.below(total - i)]);
    idx.resize(limit);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline double& logit_at(JointPolicy& policy, std::size_t flat) {
    for (auto& p : policy.per_agent) {
        const auto n = static_cast<std::size_t>(p.logits.size());
        if (flat < n) return p.logits.data()[flat];
        flat -= n;
    }
    throw IndexError("logit index out of range");
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

} // namespace detail

/// Exact score-function gradient against central differences of R(theta),
/// at the uniform policy and one random policy.
inline CheckResult check_gradient_identity(const Experiment& ex) {
    const auto& mdp = ex.mdp;
    const double sign = ex.oracle.flip_shadow_sign ? -1.0 : 1.0;
    double worst = 0.0;
    for (int which = 0; which < 2; ++which) {
        const JointPolicy policy = which == 0 ? JointPolicy::uniform(mdp)
                                              : detail::random_policy(mdp, RngStream::derive(ex.run.seed, 0x67726164ULL));
        const Eigen::VectorXd exact =
            oracle::flatten(oracle::exact_policy_gradient(mdp, policy, ex.utilities, ex.oracle.cap, sign));
        const auto coords = detail::probe_coordinates(static_cast<std::size_t>(exact.size()), ex.oracle.fd_coords,
                                                      RngStream::derive(ex.run.seed, 0x636f6f72ULL, which));
        Eigen::VectorXd fd(static_cast<Eigen::Index>(coords.size())), sub(static_cast<Eigen::Index>(coords.size()));
        JointPolicy probe = policy;
        const double h = ex.oracle.fd_step;
        for (std::size_t c = 0; c < coords.size(); ++c) {
            double& x = detail::logit_at(probe, coords[c]);
            const double x0 = x;
            x = x0 + h;
            const double up = oracle::exact_global_utility(mdp, probe, ex.utilities, ex.oracle.cap);
            x = x0 - h;
            const double down = oracle::exact_global_utility(mdp, probe, ex.utilities, ex.oracle.cap);
            x = x0;
            fd(static_cast<Eigen::Index>(c)) = (up - down) / (2.0 * h);
            sub(static_cast<Eigen::Index>(c)) = exact(static_cast<Eigen::Index>(coords[c]));
        }
        worst = std::max(worst, detail::relative_error(sub, fd));
    }
    return {"gradient_identity", worst <= ex.oracle.gradient_tol,
            "max relative error " + detail::fmt(worst) + " (tol " + detail::fmt(ex.oracle.gradient_tol) + ")"};
}

/// Analytic shadow reward against central differences of F_i in each entry of
/// the exact local measure.
inline CheckResult check_shadow_reward(const Experiment& ex) {
    const JointPolicy policy = detail::random_policy(ex.mdp, RngStream::derive(ex.run.seed, 0x73686164ULL));
    const auto locals = oracle::exact_local_occupancies(ex.mdp, policy, ex.oracle.cap);
    double worst = 0.0;
    for (std::size_t i = 0; i < locals.size(); ++i) {
        const Eigen::MatrixXd analytic = shadow_reward(ex.utilities[i], locals[i]).values;
        Eigen::MatrixXd fd = analytic;
        OccupancyMeasure probe = locals[i];
        for (Eigen::Index j = 0; j < probe.mass.size(); ++j) {
            double& x = probe.mass.data()[j];
            const double x0 = x;
            if (x0 <= 0.0) continue;  // unreachable pair: no two-sided difference
            const double h = std::min(std::max(1e-5 * x0, 1e-7), 0.5 * x0);
            x = x0 + h;
            const double up = utility_value(ex.utilities[i], probe);
            x = x0 - h;
            const double down = utility_value(ex.utilities[i], probe);
            x = x0;
            fd.data()[j] = (up - down) / (2.0 * h);
        }
        worst = std::max(worst, detail::relative_error(analytic.reshaped(), fd.reshaped()));
    }
    return {"shadow_reward", worst <= 1e-5, "max relative error " + detail::fmt(worst) + " (tol 1e-05)"};
}

/// ||W M^m - mean|| <= rho^m ||W - mean|| + 1e-10 for m = 1..10 on random W.
inline CheckResult check_mixing_contraction(const Experiment& ex) {
    const auto& M = ex.mixing;
    const auto n = static_cast<Eigen::Index>(M.size());
    bool ok = (M.m - M.m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 &&
              (M.m.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12 && (M.m.array() >= 0.0).all();
    double worst = -INFINITY;
    RngStream rng = RngStream::derive(ex.run.seed, 0x6d6978ULL);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::MatrixXd w(5, n);
        for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = rng.normal();
        const Eigen::MatrixXd mean = w.rowwise().mean().replicate(1, n);
        const double base = (w - mean).norm();
        for (std::size_t m = 1; m <= 10; ++m) {
            const double lhs = (mix(w, M, m) - mean).norm();
            const double rhs = std::pow(M.rho, static_cast<double>(m)) * base + 1e-10;
            worst = std::max(worst, lhs - rhs);
            ok = ok && lhs <= rhs;
        }
    }
    return {"mixing_contraction", ok, "rho " + detail::fmt(M.rho) + ", max slack violation " + detail::fmt(worst)};
}

/// Empirical local occupancy against the exact marginal, with gamma^H <= 1e-4.
inline CheckResult check_estimator_consistency(const Experiment& ex) {
    const auto& mdp = ex.mdp;
    const JointPolicy policy = detail::random_policy(mdp, RngStream::derive(ex.run.seed, 0x65737469ULL), 0.5);
    const auto H = static_cast<std::size_t>(std::ceil(std::log(1e-4) / std::log(mdp.discount())));
    const auto batch = rollout_batch(mdp, policy, ex.oracle.estimator_batch, H,
                                     RngStream::derive(ex.run.seed, 0x62617463ULL));
    const auto locals = oracle::exact_local_occupancies(mdp, policy, ex.oracle.cap);
    double worst = 0.0;
    for (std::size_t i = 0; i < mdp.n_agents(); ++i) {
        const OccupancyMeasure est = empirical_local_occupancy(mdp, batch, i);
        worst = std::max(worst, (est.mass - locals[i].mass).norm() / locals[i].mass.norm());
    }
    return {"estimator_consistency", worst <= ex.oracle.estimator_tol,
            "B=" + std::to_string(ex.oracle.estimator_batch) + " H=" + std::to_string(H) + ", max relative L2 error " +
                detail::fmt(worst) + " (tol " + detail::fmt(ex.oracle.estimator_tol) + ")"};
}

/// With linear utilities the shadow Q is the classical Q: it satisfies the
/// Bellman evaluation equation, and the objective equals xi^T V.
inline CheckResult check_linear_reduction(const Experiment& ex) {
    const auto& mdp = ex.mdp;
    const JointPolicy policy = detail::random_policy(mdp, RngStream::derive(ex.run.seed, 0x6c696e65ULL));
    std::vector<UtilitySpec> linear;
    for (std::size_t i = 0; i < mdp.n_agents(); ++i)
        linear.push_back(utility::Linear{
            envs::random_table(mdp.local_states(i), mdp.local_actions(i), RngStream::derive(ex.run.seed, 0x72ULL, i))});
    const Eigen::MatrixXd r = oracle::exact_global_shadow_reward(mdp, policy, linear, ex.oracle.cap);
    const Eigen::MatrixXd q = oracle::exact_shadow_q(mdp, policy, r, ex.oracle.cap);
    const RowMatrix pi = joint_policy_table(mdp, policy);
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    const auto A = static_cast<Eigen::Index>(mdp.num_actions());
    const Eigen::VectorXd v = (pi.array() * q.array()).rowwise().sum();
    const Eigen::VectorXd pv = mdp.kernel() * v;
    double bellman = 0.0;
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a)
            bellman = std::max(bellman, std::abs(q(s, a) - r(s, a) - mdp.discount() * pv(s * A + a)));
    const double value_gap =
        std::abs(oracle::exact_global_utility(mdp, policy, linear, ex.oracle.cap) - mdp.initial_dist().dot(v));
    const double worst = std::max(bellman, value_gap);
    return {"linear_reduction", worst <= 1e-9, "Bellman residual " + detail::fmt(bellman) + ", return gap " +
                                                   detail::fmt(value_gap) + " (tol 1e-09)"};
}

/// Runs every check. Throws OracleError when the MDP exceeds the oracle cap.
inline std::vector<CheckResult> run_oracle_checks(const Experiment& ex) {
    oracle::detail::require_cap(ex.mdp, ex.oracle.cap);
    return {check_gradient_identity(ex), check_shadow_reward(ex), check_mixing_contraction(ex),
            check_estimator_consistency(ex), check_linear_reduction(ex)};
}

} // namespace dsac::harness
