#pragma once

#include <cstddef>
#include <cstdlib>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsac/errors.hpp"
#include "dsac/mdp.hpp"
#include "dsac/rng.hpp"

namespace dsac::envs {

struct Cell {
    std::size_t x = 0;
    std::size_t y = 0;
    auto operator<=>(const Cell&) const = default;
};

/// Local actions of every grid agent.
enum Move : std::size_t { left = 0, right = 1, up = 2, down = 3, stay = 4 };
inline constexpr std::size_t kNumMoves = 5;

inline std::size_t manhattan_distance(Cell a, Cell b) {
    const auto dx = a.x > b.x ? a.x - b.x : b.x - a.x;
    const auto dy = a.y > b.y ? a.y - b.y : b.y - a.y;
    return dx + dy;
}

struct GridNavConfig {
    std::size_t width = 5;
    std::size_t height = 5;
    std::size_t n_agents = 2;
    std::vector<Cell> starts;
    std::vector<Cell> goals;
    std::set<Cell> unsafe_cells;
    double collision_penalty = -1.0;
    double distance_reward_scale = 1.0;
    double cost_value = 1.0;
    double cost_threshold = 0.001;
    double slip_prob = 0.0;
    bool absorbing_goals = true;
    double discount = 0.9;
};

struct ExploreGridConfig {
    std::size_t width = 10;
    std::size_t height = 10;
    std::size_t n_agents = 2;
    std::vector<Cell> starts;
    double slip_prob = 0.0;
    double discount = 0.9;
};

/// A grid MDP plus the per-agent tables the utilities consume.
struct NavProblem {
    FactoredMdp mdp;
    std::vector<Eigen::MatrixXd> reward;  // local S_i x A_i: -scale * dist(cell_i, goal_i)
    std::vector<Eigen::MatrixXd> cost;    // local S_i x A_i: cost_value on unsafe cells
    /// Global S x A reward of agent i including the collision term.
    std::vector<Eigen::MatrixXd> global_reward;
};

class Grid {
public:
    Grid(std::size_t width, std::size_t height) : width_(width), height_(height) {
        if (width == 0 || height == 0) throw ConfigError("grid: width and height must be positive");
    }

    std::size_t cells() const noexcept { return width_ * height_; }
    std::size_t index(Cell c) const { check(c); return c.y * width_ + c.x; }
    Cell cell(std::size_t index) const { return {index % width_, index / width_}; }

    void check(Cell c) const {
        if (c.x >= width_ || c.y >= height_)
            throw ConfigError("grid: cell (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                              ") outside the " + std::to_string(width_) + "x" + std::to_string(height_) + " grid");
    }

    /// Deterministic move; walls clamp.
    Cell step(Cell c, std::size_t move) const {
        switch (move) {
            case left: if (c.x > 0) --c.x; break;
            case right: if (c.x + 1 < width_) ++c.x; break;
            case up: if (c.y + 1 < height_) ++c.y; break;
            case down: if (c.y > 0) --c.y; break;
            default: break;
        }
        return c;
    }

    /// P(. | c, move) over cells. With probability `slip` the move is replaced
    /// by a uniformly random one (possibly the same).
    Eigen::VectorXd move_distribution(Cell c, std::size_t move, double slip) const {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells()));
        p(static_cast<Eigen::Index>(index(step(c, move)))) += 1.0 - slip;
        if (slip > 0.0)
            for (std::size_t m = 0; m < kNumMoves; ++m)
                p(static_cast<Eigen::Index>(index(step(c, m)))) += slip / static_cast<double>(kNumMoves);
        return p;
    }

private:
    std::size_t width_;
    std::size_t height_;
};

namespace detail {

/// Global kernel from independent per-agent local kernels. local[i] is
/// (S_i * A_i) x S_i with row c * A_i + a_i. Only nonzero products are stored.
inline SparseKernel product_kernel(const std::vector<std::size_t>& states, const std::vector<std::size_t>& actions,
                                   const std::vector<RowMatrix>& local) {
    const std::size_t n = states.size();
    if (local.size() != n) throw ConfigError("product_kernel: need one local kernel per agent");
    for (std::size_t i = 0; i < n; ++i)
        if (static_cast<std::size_t>(local[i].rows()) != states[i] * actions[i] ||
            static_cast<std::size_t>(local[i].cols()) != states[i])
            throw ConfigError("product_kernel: local kernel " + std::to_string(i) + " must be (S_i*A_i) x S_i");

    // sparse rows of every local kernel
    using Entry = std::pair<std::size_t, double>;
    std::vector<std::vector<std::vector<Entry>>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i].resize(static_cast<std::size_t>(local[i].rows()));
        for (Eigen::Index r = 0; r < local[i].rows(); ++r)
            for (Eigen::Index c = 0; c < local[i].cols(); ++c)
                if (local[i](r, c) != 0.0) rows[i][static_cast<std::size_t>(r)].push_back({static_cast<std::size_t>(c), local[i](r, c)});
    }

    const std::size_t S = product(states);
    const std::size_t A = product(actions);
    SparseKernel kernel(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(S));
    std::vector<Entry> row, next;
    std::size_t reserved = 0;
    for (std::size_t s = 0; s < S; ++s) {
        const auto st = decode_global(s, states);
        for (std::size_t a = 0; a < A; ++a) {
            const auto at = decode_global(a, actions);
            // agent 0 is the most significant digit, so columns come out sorted
            row.assign(1, {0, 1.0});
            for (std::size_t i = 0; i < n; ++i) {
                next.clear();
                for (const auto& [col, p] : row)
                    for (const auto& [c, q] : rows[i][st[i] * actions[i] + at[i]]) next.push_back({col * states[i] + c, p * q});
                row.swap(next);
            }
            if (reserved == 0) {
                reserved = row.size() * S * A;
                kernel.reserve(static_cast<Eigen::Index>(reserved));
            }
            const auto r = static_cast<Eigen::Index>(s * A + a);
            kernel.startVec(r);
            for (const auto& [col, p] : row) kernel.insertBack(r, static_cast<Eigen::Index>(col)) = p;
        }
    }
    kernel.finalize();
    return kernel;
}

inline Eigen::VectorXd start_distribution(const Grid& grid, const std::vector<Cell>& starts) {
    std::vector<std::size_t> sizes(starts.size(), grid.cells());
    std::vector<std::size_t> tuple;
    for (auto c : starts) tuple.push_back(grid.index(c));
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(product(sizes)));
    xi(static_cast<Eigen::Index>(encode_global(tuple, sizes))) = 1.0;
    return xi;
}

inline void check_slip(double slip) {
    if (!(slip >= 0.0 && slip < 1.0)) throw ConfigError("grid: slip_prob must lie in [0, 1)");
}

} // namespace detail

inline FactoredMdp build_explore_mdp(const ExploreGridConfig& cfg) {
    const Grid grid(cfg.width, cfg.height);
    detail::check_slip(cfg.slip_prob);
    if (cfg.n_agents == 0) throw ConfigError("explore grid: need at least one agent");
    std::vector<Cell> starts = cfg.starts;
    if (starts.empty()) starts.assign(cfg.n_agents, Cell{0, 0});
    if (starts.size() != cfg.n_agents) throw ConfigError("explore grid: need one start per agent");
    for (auto c : starts) grid.check(c);

    const std::size_t C = grid.cells();
    RowMatrix local(static_cast<Eigen::Index>(C * kNumMoves), static_cast<Eigen::Index>(C));
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t m = 0; m < kNumMoves; ++m)
            local.row(static_cast<Eigen::Index>(c * kNumMoves + m)) =
                grid.move_distribution(grid.cell(c), m, cfg.slip_prob).transpose();

    std::vector<std::size_t> states(cfg.n_agents, C), actions(cfg.n_agents, kNumMoves);
    std::vector<RowMatrix> locals(cfg.n_agents, local);
    return FactoredMdp(states, actions, detail::product_kernel(states, actions, locals),
                       detail::start_distribution(grid, starts), cfg.discount);
}

inline NavProblem build_nav_mdp(const GridNavConfig& cfg) {
    const Grid grid(cfg.width, cfg.height);
    detail::check_slip(cfg.slip_prob);
    const std::size_t n = cfg.n_agents;
    if (n == 0) throw ConfigError("nav grid: need at least one agent");
    if (cfg.starts.size() != n || cfg.goals.size() != n)
        throw ConfigError("nav grid: need one start and one goal per agent");
    for (auto c : cfg.starts) grid.check(c);
    for (auto c : cfg.goals) grid.check(c);
    for (auto c : cfg.unsafe_cells) grid.check(c);

    const std::size_t C = grid.cells();
    std::vector<RowMatrix> locals;
    std::vector<Eigen::MatrixXd> reward, cost;
    for (std::size_t i = 0; i < n; ++i) {
        RowMatrix local(static_cast<Eigen::Index>(C * kNumMoves), static_cast<Eigen::Index>(C));
        Eigen::MatrixXd r(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(kNumMoves));
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(kNumMoves));
        for (std::size_t ci = 0; ci < C; ++ci) {
            const Cell here = grid.cell(ci);
            const bool absorbed = cfg.absorbing_goals && here == cfg.goals[i];
            for (std::size_t m = 0; m < kNumMoves; ++m) {
                Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(C));
                if (absorbed) p(static_cast<Eigen::Index>(ci)) = 1.0;
                else p = grid.move_distribution(here, m, cfg.slip_prob);
                local.row(static_cast<Eigen::Index>(ci * kNumMoves + m)) = p.transpose();
            }
            r.row(static_cast<Eigen::Index>(ci)).setConstant(
                -cfg.distance_reward_scale * static_cast<double>(manhattan_distance(here, cfg.goals[i])));
            if (cfg.unsafe_cells.count(here)) c.row(static_cast<Eigen::Index>(ci)).setConstant(cfg.cost_value);
        }
        locals.push_back(std::move(local));
        reward.push_back(std::move(r));
        cost.push_back(std::move(c));
    }

    std::vector<std::size_t> states(n, C), actions(n, kNumMoves);
    FactoredMdp mdp(states, actions, detail::product_kernel(states, actions, locals),
                    detail::start_distribution(grid, cfg.starts), cfg.discount);

    std::vector<Eigen::MatrixXd> global_reward;
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    const auto A = static_cast<Eigen::Index>(mdp.num_actions());
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::MatrixXd g(S, A);
        for (Eigen::Index s = 0; s < S; ++s) {
            const auto tuple = mdp.decode_state(static_cast<std::size_t>(s));
            bool collision = false;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && tuple[j] == tuple[i]) collision = true;
            const double base = reward[i](static_cast<Eigen::Index>(tuple[i]), 0);
            g.row(s).setConstant(base + (collision ? cfg.collision_penalty : 0.0));
        }
        global_reward.push_back(std::move(g));
    }
    return {std::move(mdp), std::move(reward), std::move(cost), std::move(global_reward)};
}

/// Random factored MDP with strictly positive kernel rows, for tests and
/// oracle checks.
inline FactoredMdp random_mdp(const std::vector<std::size_t>& local_states, const std::vector<std::size_t>& local_actions,
                              double discount, RngStream rng) {
    const std::size_t S = product(local_states);
    const std::size_t A = product(local_actions);
    RowMatrix kernel(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(S));
    for (Eigen::Index r = 0; r < kernel.rows(); ++r) {
        for (Eigen::Index c = 0; c < kernel.cols(); ++c) kernel(r, c) = 0.05 + rng.uniform();
        kernel.row(r) /= kernel.row(r).sum();
    }
    Eigen::VectorXd xi(static_cast<Eigen::Index>(S));
    for (Eigen::Index s = 0; s < xi.size(); ++s) xi(s) = 0.05 + rng.uniform();
    xi /= xi.sum();
    return FactoredMdp(local_states, local_actions, std::move(kernel), std::move(xi), discount);
}

/// Uniform(-1, 1) table, e.g. a random local reward.
inline Eigen::MatrixXd random_table(std::size_t rows, std::size_t cols, RngStream rng) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = 2.0 * rng.uniform() - 1.0;
    return m;
}

} // namespace dsac::envs
