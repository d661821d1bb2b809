#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsac/errors.hpp"
#include "dsac/mdp.hpp"
#include "dsac/rng.hpp"

namespace dsac {

/// Critic features phi(s, a) over global pairs.
///
/// Two kinds: one-hot over (s, a), with d = S * A and C_phi = 1, evaluated
/// sparsely; and a dense random projection with configurable d, scaled so the
/// largest feature norm is exactly 1.
class FeatureMap {
public:
    enum class Kind { one_hot, random_projection };

    static FeatureMap one_hot(std::size_t num_states, std::size_t num_actions) {
        FeatureMap f;
        f.kind_ = Kind::one_hot;
        f.num_states_ = num_states;
        f.num_actions_ = num_actions;
        f.dim_ = static_cast<Eigen::Index>(num_states * num_actions);
        f.bound_ = 1.0;
        return f;
    }

    static FeatureMap random_projection(std::size_t num_states, std::size_t num_actions,
                                        std::size_t dim, RngStream rng) {
        if (dim == 0) throw ConfigError("random_projection: dimension must be > 0");
        FeatureMap f;
        f.kind_ = Kind::random_projection;
        f.num_states_ = num_states;
        f.num_actions_ = num_actions;
        f.dim_ = static_cast<Eigen::Index>(dim);
        f.matrix_.resize(f.dim_, static_cast<Eigen::Index>(num_states * num_actions));
        for (Eigen::Index c = 0; c < f.matrix_.cols(); ++c)
            for (Eigen::Index r = 0; r < f.dim_; ++r) f.matrix_(r, c) = rng.normal();
        f.matrix_ /= f.matrix_.colwise().norm().maxCoeff();
        f.bound_ = f.matrix_.colwise().norm().maxCoeff();
        return f;
    }

    Kind kind() const noexcept { return kind_; }
    Eigen::Index dim() const noexcept { return dim_; }
    /// C_phi: max over pairs of ||phi(s, a)||.
    double bound() const noexcept { return bound_; }
    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }

    Eigen::Index column(std::size_t s, std::size_t a) const {
        if (s >= num_states_ || a >= num_actions_)
            throw IndexError("FeatureMap: pair (" + std::to_string(s) + ", " + std::to_string(a) + ") out of range");
        return static_cast<Eigen::Index>(s * num_actions_ + a);
    }

    Eigen::VectorXd evaluate(std::size_t s, std::size_t a) const {
        const Eigen::Index c = column(s, a);
        if (kind_ == Kind::random_projection) return matrix_.col(c);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
        v(c) = 1.0;
        return v;
    }

    /// <phi(s, a), w>
    double dot(std::size_t s, std::size_t a, const Eigen::VectorXd& w) const {
        check_dim(w);
        const Eigen::Index c = column(s, a);
        if (kind_ == Kind::one_hot) return w(c);
        return matrix_.col(c).dot(w);
    }

    /// out += alpha * phi(s, a)
    void add_scaled(std::size_t s, std::size_t a, double alpha, Eigen::VectorXd& out) const {
        check_dim(out);
        const Eigen::Index c = column(s, a);
        if (kind_ == Kind::one_hot) out(c) += alpha;
        else out.noalias() += alpha * matrix_.col(c);
    }

    /// d x (S*A) feature matrix.
    Eigen::MatrixXd matrix() const {
        if (kind_ == Kind::random_projection) return matrix_;
        return Eigen::MatrixXd::Identity(dim_, dim_);
    }

    void check_dim(const Eigen::VectorXd& w) const {
        if (w.size() != dim_)
            throw ShapeError("critic weights have length " + std::to_string(w.size()) + ", features have " +
                             std::to_string(dim_));
    }

private:
    Kind kind_ = Kind::one_hot;
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    Eigen::Index dim_ = 0;
    double bound_ = 1.0;
    Eigen::MatrixXd matrix_;
};

struct CriticWeights {
    std::size_t agent = 0;
    Eigen::VectorXd w;
};

/// Q_w(s, a) = <phi(s, a), w>.
inline double q_value(const CriticWeights& w, const FeatureMap& phi, std::size_t s, std::size_t a) {
    return phi.dot(s, a, w.w);
}

/// Tail sums Q^t = sum_{t' >= t} gamma^(t'-t) r_i(s^t'_(i), a^t'_(i)), using
/// agent i's local coordinates to index the shadow reward.
inline Eigen::VectorXd mc_q_targets(const FactoredMdp& mdp, const Trajectory& tau,
                                    const Eigen::MatrixXd& shadow, std::size_t agent) {
    const double gamma = mdp.discount();
    const auto n = static_cast<Eigen::Index>(tau.steps.size());
    Eigen::VectorXd q(n);
    double next = 0.0;
    for (Eigen::Index t = n; t-- > 0;) {
        const auto& step = tau.steps[static_cast<std::size_t>(t)];
        const double r = shadow(static_cast<Eigen::Index>(mdp.local_state(agent, step.state)),
                                static_cast<Eigen::Index>(mdp.local_action(agent, step.action)));
        next = r + gamma * next;
        q(t) = next;
    }
    return q;
}

/// G_w = sum_t gamma^t (Q_w(s^t, a^t) - Q^t) phi(s^t, a^t).
inline Eigen::VectorXd critic_gradient(const FactoredMdp& mdp, const Trajectory& tau,
                                       const Eigen::MatrixXd& shadow, std::size_t agent,
                                       const CriticWeights& w, const FeatureMap& phi) {
    phi.check_dim(w.w);
    const Eigen::VectorXd targets = mc_q_targets(mdp, tau, shadow, agent);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(phi.dim());
    double discount = 1.0;
    for (std::size_t t = 0; t < tau.steps.size(); ++t) {
        const auto& step = tau.steps[t];
        const double err = phi.dot(step.state, step.action, w.w) - targets(static_cast<Eigen::Index>(t));
        phi.add_scaled(step.state, step.action, discount * err, g);
        discount *= mdp.discount();
    }
    return g;
}

/// Batch mean of critic_gradient, summed in trajectory order.
inline Eigen::VectorXd critic_batch_direction(const FactoredMdp& mdp, const std::vector<Trajectory>& batch,
                                              const Eigen::MatrixXd& shadow, std::size_t agent,
                                              const CriticWeights& w, const FeatureMap& phi) {
    if (batch.empty()) throw EstimatorError("critic_batch_direction: empty batch");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(phi.dim());
    for (const auto& tau : batch) sum += critic_gradient(mdp, tau, shadow, agent, w, phi);
    return sum / static_cast<double>(batch.size());
}

/// Smoothness constant of the critic loss: C_phi^2 / (1 - gamma).
inline double lipschitz_lw(const FeatureMap& phi, double gamma) {
    return phi.bound() * phi.bound() / (1.0 - gamma);
}

/// Smallest eigenvalue of sum_{s,a} lambda(s, a) phi phi^T (the critic loss
/// Hessian). With `positive_only`, the smallest strictly positive one.
inline double critic_hessian_min_eigenvalue(const Eigen::MatrixXd& lambda, const FeatureMap& phi,
                                            bool positive_only = false, double zero_tol = 1e-14) {
    if (phi.kind() == FeatureMap::Kind::one_hot) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index s = 0; s < lambda.rows(); ++s)
            for (Eigen::Index a = 0; a < lambda.cols(); ++a) {
                const double v = lambda(s, a);
                if (positive_only && v <= zero_tol) continue;
                best = std::min(best, v);
            }
        return std::isfinite(best) ? best : 0.0;
    }
    const Eigen::MatrixXd features = phi.matrix();
    const Eigen::Index A = lambda.cols();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(phi.dim(), phi.dim());
    for (Eigen::Index s = 0; s < lambda.rows(); ++s)
        for (Eigen::Index a = 0; a < A; ++a)
            if (lambda(s, a) != 0.0)
                h.noalias() += lambda(s, a) * features.col(s * A + a) * features.col(s * A + a).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double v = es.eigenvalues()(k);
        if (!positive_only || v > zero_tol) return v;
    }
    return 0.0;
}

} // namespace dsac
