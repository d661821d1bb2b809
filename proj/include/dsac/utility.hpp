#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <variant>

#include <Eigen/Dense>

#include "dsac/errors.hpp"
#include "dsac/mdp.hpp"

namespace dsac {

/// Which marginal of a local measure a utility looks at.
enum class Support { state, state_action };

namespace utility {

/// F(lambda) = <lambda, r>.
struct Linear {
    Eigen::MatrixXd reward;  // S_i x A_i
};

/// F(lambda) = -sum x log(x + eps), with x the state marginal or the raw
/// state-action mass. With `normalized`, x is scaled by (1 - gamma) first.
struct Entropy {
    Support support = Support::state;
    double smoothing = 1e-8;
    bool normalized = false;
};

/// Negated KL divergence between (1 - gamma) lambda and a prior distribution.
/// `prior` is S_i x 1 for state support, S_i x A_i for state-action support.
struct KLPrior {
    Eigen::MatrixXd prior;
    Support support = Support::state;
    double discount = 0.9;
    double smoothing = 1e-8;
};

/// F(lambda) = <lambda, r> - z (<lambda, c> - C)^2.
struct QuadPenalty {
    Eigen::MatrixXd reward;
    Eigen::MatrixXd cost;
    double threshold = 0.0;
    double penalty = 0.0;
};

} // namespace utility

using UtilitySpec = std::variant<utility::Linear, utility::Entropy, utility::KLPrior, utility::QuadPenalty>;

inline const char* variant_name(const UtilitySpec& spec) {
    constexpr const char* names[] = {"linear", "entropy", "kl_prior", "quad_penalty"};
    return names[spec.index()];
}

/// Gradient of a local utility w.r.t. the local measure.
struct ShadowRewardTable {
    Eigen::MatrixXd values;  // S_i x A_i
    double cap = std::numeric_limits<double>::infinity();

    double sup_norm() const { return values.cwiseAbs().maxCoeff(); }
    bool within_cap() const { return values.allFinite() && sup_norm() <= cap; }

    void check_bounded() const {
        if (!within_cap())
            throw BoundError("shadow reward sup-norm " + std::to_string(sup_norm()) +
                             " exceeds cap " + std::to_string(cap));
    }
};

namespace detail {

inline void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols)
        throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

/// The quantity the entropy/KL terms act on: state marginal or raw mass.
inline Eigen::MatrixXd reduce(const Eigen::MatrixXd& mass, Support support) {
    if (support == Support::state) return mass.rowwise().sum();
    return mass;
}

/// Spreads a gradient w.r.t. the reduced quantity back onto S_i x A_i.
inline Eigen::MatrixXd broadcast(const Eigen::MatrixXd& grad, Support support, Eigen::Index actions) {
    if (support == Support::state_action) return grad;
    return grad.col(0).replicate(1, actions);
}

} // namespace detail

/// Throws ShapeError/DomainError/ConfigError unless `spec` fits an
/// S_i x A_i local measure.
inline void validate_utility(const UtilitySpec& spec, std::size_t local_states, std::size_t local_actions) {
    const auto S = static_cast<Eigen::Index>(local_states);
    const auto A = static_cast<Eigen::Index>(local_actions);
    std::visit([&](const auto& u) {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, utility::Linear>) {
            detail::require_shape(u.reward, S, A, "linear reward");
        } else if constexpr (std::is_same_v<T, utility::Entropy>) {
            if (!(u.smoothing > 0.0)) throw ConfigError("entropy smoothing must be > 0");
        } else if constexpr (std::is_same_v<T, utility::KLPrior>) {
            if (!(u.smoothing > 0.0)) throw ConfigError("kl smoothing must be > 0");
            if (!(u.discount > 0.0 && u.discount < 1.0)) throw ConfigError("kl discount must lie in (0, 1)");
            detail::require_shape(u.prior, S, u.support == Support::state ? 1 : A, "kl prior");
            if ((u.prior.array() < 0.0).any()) throw DomainError("kl prior has negative entries");
            if (std::abs(u.prior.sum() - 1.0) > 1e-9) throw DomainError("kl prior does not sum to 1");
        } else {
            detail::require_shape(u.reward, S, A, "penalty reward");
            detail::require_shape(u.cost, S, A, "penalty cost");
            if (u.penalty < 0.0) throw ConfigError("penalty z must be >= 0");
        }
    }, spec);
}

inline void check_measure(const UtilitySpec& spec, const OccupancyMeasure& lambda) {
    validate_utility(spec, static_cast<std::size_t>(lambda.mass.rows()),
                     static_cast<std::size_t>(lambda.mass.cols()));
    if ((lambda.mass.array() < 0.0).any()) throw DomainError("occupancy measure has negative mass");
}

/// F_i(lambda_i). Every variant is maximized.
inline double utility_value(const UtilitySpec& spec, const OccupancyMeasure& lambda) {
    check_measure(spec, lambda);
    const Eigen::MatrixXd& m = lambda.mass;
    return std::visit([&](const auto& u) -> double {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, utility::Linear>) {
            return (m.array() * u.reward.array()).sum();
        } else if constexpr (std::is_same_v<T, utility::Entropy>) {
            Eigen::ArrayXXd x = detail::reduce(m, u.support).array();
            if (u.normalized) x *= (1.0 - lambda.discount);
            return -(x * (x + u.smoothing).log()).sum();
        } else if constexpr (std::is_same_v<T, utility::KLPrior>) {
            const Eigen::ArrayXXd x = (1.0 - u.discount) * detail::reduce(m, u.support).array();
            return -(x * ((x + u.smoothing) / (u.prior.array() + u.smoothing)).log()).sum();
        } else {
            const double gap = (m.array() * u.cost.array()).sum() - u.threshold;
            return (m.array() * u.reward.array()).sum() - u.penalty * gap * gap;
        }
    }, spec);
}

/// Default sup-norm cap on the shadow reward for a utility variant.
///
/// The smoothed log terms give |log(x + eps) + x / (x + eps)| <= |log eps| + 2
/// for any entry x <= e / eps, which every desk-scale measure satisfies.
/// Linear utilities are capped by max |r|; penalty utilities are uncapped.
inline double default_shadow_cap(const UtilitySpec& spec) {
    return std::visit([](const auto& u) -> double {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, utility::Linear>) {
            return u.reward.size() ? u.reward.cwiseAbs().maxCoeff() : 0.0;
        } else if constexpr (std::is_same_v<T, utility::Entropy> || std::is_same_v<T, utility::KLPrior>) {
            return std::abs(std::log(u.smoothing)) + 2.0;
        } else {
            return std::numeric_limits<double>::infinity();
        }
    }, spec);
}

/// Analytic gradient of utility_value() w.r.t. every entry of lambda_i.
inline ShadowRewardTable shadow_reward(const UtilitySpec& spec, const OccupancyMeasure& lambda) {
    check_measure(spec, lambda);
    const Eigen::MatrixXd& m = lambda.mass;
    const Eigen::Index actions = m.cols();
    Eigen::MatrixXd g = std::visit([&](const auto& u) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, utility::Linear>) {
            return u.reward;
        } else if constexpr (std::is_same_v<T, utility::Entropy>) {
            const double scale = u.normalized ? (1.0 - lambda.discount) : 1.0;
            const Eigen::ArrayXXd x = scale * detail::reduce(m, u.support).array();
            const Eigen::ArrayXXd xe = x + u.smoothing;
            Eigen::MatrixXd d = (-scale * (xe.log() + x / xe)).matrix();
            return detail::broadcast(d, u.support, actions);
        } else if constexpr (std::is_same_v<T, utility::KLPrior>) {
            const double scale = 1.0 - u.discount;
            const Eigen::ArrayXXd x = scale * detail::reduce(m, u.support).array();
            const Eigen::ArrayXXd xe = x + u.smoothing;
            Eigen::MatrixXd d =
                (-scale * ((xe / (u.prior.array() + u.smoothing)).log() + x / xe)).matrix();
            return detail::broadcast(d, u.support, actions);
        } else {
            const double gap = (m.array() * u.cost.array()).sum() - u.threshold;
            return u.reward - 2.0 * u.penalty * gap * u.cost;
        }
    }, spec);
    return {std::move(g), default_shadow_cap(spec)};
}

/// <lambda_i, c> - C for penalty utilities; 0 otherwise.
inline double constraint_gap(const UtilitySpec& spec, const OccupancyMeasure& lambda) {
    if (const auto* q = std::get_if<utility::QuadPenalty>(&spec))
        return (lambda.mass.array() * q->cost.array()).sum() - q->threshold;
    return 0.0;
}

/// Shannon entropy (nats) of the normalized state marginal. Always >= 0.
inline double state_entropy(const OccupancyMeasure& lambda) {
    const Eigen::VectorXd v = lambda.state_marginal();
    const double total = v.sum();
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (Eigen::Index s = 0; s < v.size(); ++s) {
        const double p = v(s) / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

/// Global utility: arithmetic mean of the local values.
inline double aggregate_global(std::span<const double> values) {
    if (values.empty()) throw AggregateError("aggregate_global: no local values");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

} // namespace dsac
