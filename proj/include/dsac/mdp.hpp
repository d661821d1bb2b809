#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dsac/errors.hpp"
#include "dsac/indexing.hpp"

namespace dsac {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseKernel = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Finite MDP over a product state space S = S_1 x ... x S_N and product
/// action space A = A_1 x ... x A_N.
///
/// The transition kernel is a row-major sparse (S*A) x S matrix: row
/// `s * A + a` holds P(. | s, a) over the S global next states. Global indices
/// follow encode_global().
class FactoredMdp {
public:
    FactoredMdp(std::vector<std::size_t> local_state_sizes,
                std::vector<std::size_t> local_action_sizes,
                SparseKernel kernel,
                Eigen::VectorXd initial_dist,
                double discount)
        : state_sizes_(std::move(local_state_sizes)),
          action_sizes_(std::move(local_action_sizes)),
          kernel_(std::move(kernel)),
          initial_(std::move(initial_dist)),
          discount_(discount) {
        kernel_.makeCompressed();
        validate();
        build_local_tables();
    }

    /// Dense kernel; exact zeros are dropped.
    FactoredMdp(std::vector<std::size_t> local_state_sizes,
                std::vector<std::size_t> local_action_sizes,
                const RowMatrix& kernel,
                Eigen::VectorXd initial_dist,
                double discount)
        : FactoredMdp(std::move(local_state_sizes), std::move(local_action_sizes), SparseKernel(kernel.sparseView()),
                      std::move(initial_dist), discount) {}

    std::size_t n_agents() const noexcept { return state_sizes_.size(); }
    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    std::size_t local_states(std::size_t agent) const { return state_sizes_.at(agent); }
    std::size_t local_actions(std::size_t agent) const { return action_sizes_.at(agent); }
    const std::vector<std::size_t>& local_state_sizes() const noexcept { return state_sizes_; }
    const std::vector<std::size_t>& local_action_sizes() const noexcept { return action_sizes_; }

    double discount() const noexcept { return discount_; }
    const Eigen::VectorXd& initial_dist() const noexcept { return initial_; }
    const SparseKernel& kernel() const noexcept { return kernel_; }

    /// P(. | s, a) as a dense row.
    Eigen::RowVectorXd transition(std::size_t s, std::size_t a) const {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(num_states_));
        for (SparseKernel::InnerIterator it(kernel_, kernel_row(s, a)); it; ++it) row(it.col()) = it.value();
        return row;
    }

    Eigen::Index kernel_row(std::size_t s, std::size_t a) const {
        return static_cast<Eigen::Index>(s * num_actions_ + a);
    }

    /// Agent i's coordinate of global state s.
    std::size_t local_state(std::size_t agent, std::size_t s) const {
        return local_state_of_[agent][s];
    }
    std::size_t local_action(std::size_t agent, std::size_t a) const {
        return local_action_of_[agent][a];
    }

    std::size_t encode_state(std::span<const std::size_t> tuple) const {
        return encode_global(tuple, state_sizes_);
    }
    std::size_t encode_action(std::span<const std::size_t> tuple) const {
        return encode_global(tuple, action_sizes_);
    }
    std::vector<std::size_t> decode_state(std::size_t s) const { return decode_global(s, state_sizes_); }
    std::vector<std::size_t> decode_action(std::size_t a) const { return decode_global(a, action_sizes_); }

private:
    void validate() {
        if (state_sizes_.empty()) throw ConfigError("FactoredMdp: need at least one agent");
        if (state_sizes_.size() != action_sizes_.size())
            throw ConfigError("FactoredMdp: state and action factor lists differ in length");
        for (std::size_t i = 0; i < state_sizes_.size(); ++i)
            if (state_sizes_[i] == 0 || action_sizes_[i] == 0)
                throw ConfigError("FactoredMdp: agent " + std::to_string(i) + " has an empty factor");
        if (!(discount_ > 0.0 && discount_ < 1.0))
            throw ConfigError("FactoredMdp: discount must lie in (0, 1)");
        num_states_ = product(state_sizes_);
        num_actions_ = product(action_sizes_);
        if (static_cast<std::size_t>(kernel_.rows()) != num_states_ * num_actions_ ||
            static_cast<std::size_t>(kernel_.cols()) != num_states_)
            throw ConfigError("FactoredMdp: kernel must be (S*A) x S");
        if (static_cast<std::size_t>(initial_.size()) != num_states_)
            throw ConfigError("FactoredMdp: initial distribution must have S entries");
        if (initial_.hasNaN() || (initial_.array() < 0.0).any())
            throw ConfigError("FactoredMdp: negative probability");
        for (Eigen::Index r = 0; r < kernel_.outerSize(); ++r) {
            double sum = 0.0;
            for (SparseKernel::InnerIterator it(kernel_, r); it; ++it) {
                if (!(it.value() >= 0.0)) throw ConfigError("FactoredMdp: negative probability");
                sum += it.value();
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw ConfigError("FactoredMdp: kernel row " + std::to_string(r) + " does not sum to 1");
        }
        if (std::abs(initial_.sum() - 1.0) > 1e-12)
            throw ConfigError("FactoredMdp: initial distribution does not sum to 1");
    }

    void build_local_tables() {
        const std::size_t n = state_sizes_.size();
        local_state_of_.assign(n, std::vector<std::size_t>(num_states_));
        local_action_of_.assign(n, std::vector<std::size_t>(num_actions_));
        for (std::size_t s = 0; s < num_states_; ++s) {
            auto t = decode_global(s, state_sizes_);
            for (std::size_t i = 0; i < n; ++i) local_state_of_[i][s] = t[i];
        }
        for (std::size_t a = 0; a < num_actions_; ++a) {
            auto t = decode_global(a, action_sizes_);
            for (std::size_t i = 0; i < n; ++i) local_action_of_[i][a] = t[i];
        }
    }

    std::vector<std::size_t> state_sizes_;
    std::vector<std::size_t> action_sizes_;
    SparseKernel kernel_;
    Eigen::VectorXd initial_;
    double discount_;
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::vector<std::size_t>> local_state_of_;
    std::vector<std::vector<std::size_t>> local_action_of_;
};

struct Step {
    std::size_t state;
    std::size_t action;
    bool operator==(const Step&) const = default;
};

/// (s^0, a^0), ..., (s^H, a^H).
struct Trajectory {
    std::vector<Step> steps;
    std::size_t horizon() const noexcept { return steps.empty() ? 0 : steps.size() - 1; }
};

/// Discounted state-action visitation mass, either over global pairs or over
/// one agent's local pairs. Rows are states, columns are actions.
struct OccupancyMeasure {
    std::optional<std::size_t> agent;  // empty: global scope
    Eigen::MatrixXd mass;
    double discount = 0.0;

    bool is_global() const noexcept { return !agent.has_value(); }
    double total() const { return mass.sum(); }

    /// Per-state mass, summed over actions.
    Eigen::VectorXd state_marginal() const { return mass.rowwise().sum(); }

    static OccupancyMeasure global(Eigen::MatrixXd mass, double discount) {
        return {std::nullopt, std::move(mass), discount};
    }
    static OccupancyMeasure local(std::size_t agent, Eigen::MatrixXd mass, double discount) {
        return {agent, std::move(mass), discount};
    }
};

/// Total mass of an exact occupancy measure: 1 / (1 - gamma).
inline double exact_total_mass(double gamma) { return 1.0 / (1.0 - gamma); }

/// Total mass of an H-truncated measure: (1 - gamma^(H+1)) / (1 - gamma).
inline double truncated_total_mass(double gamma, std::size_t horizon) {
    return (1.0 - std::pow(gamma, static_cast<double>(horizon + 1))) / (1.0 - gamma);
}

/// Sums a global measure over every coordinate except agent i's.
inline OccupancyMeasure marginalize(const FactoredMdp& mdp, const OccupancyMeasure& global,
                                    std::size_t agent) {
    if (!global.is_global()) throw ScopeError("marginalize: input measure is already local");
    if (agent >= mdp.n_agents()) throw ScopeError("marginalize: agent out of range");
    if (static_cast<std::size_t>(global.mass.rows()) != mdp.num_states() ||
        static_cast<std::size_t>(global.mass.cols()) != mdp.num_actions())
        throw ScopeError("marginalize: measure does not match the MDP factorization");

    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(mdp.local_states(agent)),
        static_cast<Eigen::Index>(mdp.local_actions(agent)));
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        const auto si = static_cast<Eigen::Index>(mdp.local_state(agent, s));
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            local(si, static_cast<Eigen::Index>(mdp.local_action(agent, a))) +=
                global.mass(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    }
    return OccupancyMeasure::local(agent, std::move(local), global.discount);
}

} // namespace dsac
