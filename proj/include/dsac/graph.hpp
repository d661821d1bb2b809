#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsac/errors.hpp"
#include "dsac/rng.hpp"

namespace dsac {

/// Undirected communication graph on agents 0..n-1. Edges are stored as
/// (i, j) with i < j; self-loops are not stored.
struct CommGraph {
    std::size_t n = 0;
    std::set<std::pair<std::size_t, std::size_t>> edges;

    void add_edge(std::size_t i, std::size_t j) {
        if (i == j) throw TopologyError("self-loops are not allowed");
        if (i >= n || j >= n) throw TopologyError("edge endpoint out of range");
        edges.insert({std::min(i, j), std::max(i, j)});
    }

    bool has_edge(std::size_t i, std::size_t j) const {
        return edges.count({std::min(i, j), std::max(i, j)}) > 0;
    }

    std::vector<std::size_t> degrees() const {
        std::vector<std::size_t> d(n, 0);
        for (const auto& [i, j] : edges) { ++d[i]; ++d[j]; }
        return d;
    }

    bool connected() const {
        if (n == 0) return false;
        std::vector<std::vector<std::size_t>> adj(n);
        for (const auto& [i, j] : edges) { adj[i].push_back(j); adj[j].push_back(i); }
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        std::size_t count = 1;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            for (auto u : adj[v])
                if (!seen[u]) { seen[u] = true; ++count; stack.push_back(u); }
        }
        return count == n;
    }
};

struct TopologySpec {
    enum class Kind { complete, ring, erdos_renyi, watts_strogatz };
    Kind kind = Kind::complete;
    /// Edge probability (Erdos-Renyi) or rewiring probability (Watts-Strogatz).
    /// A negative value for Erdos-Renyi draws p uniformly from (0, 1) per attempt.
    double p = 0.5;
    /// Each node links to k nearest ring neighbours (Watts-Strogatz); odd k rounds down to even.
    std::size_t k = 2;
    std::size_t max_retries = 1000;
};

inline const char* topology_name(TopologySpec::Kind kind) {
    switch (kind) {
        case TopologySpec::Kind::complete: return "complete";
        case TopologySpec::Kind::ring: return "ring";
        case TopologySpec::Kind::erdos_renyi: return "erdos_renyi";
        case TopologySpec::Kind::watts_strogatz: return "watts_strogatz";
    }
    return "?";
}

namespace detail {

inline CommGraph complete_graph(std::size_t n) {
    CommGraph g{n, {}};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g.add_edge(i, j);
    return g;
}

inline CommGraph ring_graph(std::size_t n) {
    CommGraph g{n, {}};
    if (n == 2) g.add_edge(0, 1);
    if (n > 2)
        for (std::size_t i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
    return g;
}

inline CommGraph erdos_renyi_once(std::size_t n, double p, RngStream& rng) {
    CommGraph g{n, {}};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.uniform() < p) g.add_edge(i, j);
    return g;
}

/// Ring lattice with k/2 neighbours on each side, each lattice edge rewired
/// with probability p to a uniformly chosen non-neighbour.
inline CommGraph watts_strogatz_once(std::size_t n, std::size_t k, double p, RngStream& rng) {
    CommGraph g{n, {}};
    const std::size_t half = std::min(k / 2, (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t off = 1; off <= half; ++off) g.add_edge(i, (i + off) % n);
    for (std::size_t off = 1; off <= half; ++off)
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + off) % n;
            if (!g.has_edge(i, j) || rng.uniform() >= p) continue;
            std::vector<std::size_t> candidates;
            for (std::size_t u = 0; u < n; ++u)
                if (u != i && !g.has_edge(i, u)) candidates.push_back(u);
            if (candidates.empty()) continue;
            const std::size_t u = candidates[rng.below(candidates.size())];
            g.edges.erase({std::min(i, j), std::max(i, j)});
            g.add_edge(i, u);
        }
    return g;
}

} // namespace detail

/// Connected graph of the requested family. Random families are resampled
/// until connected, up to spec.max_retries attempts.
inline CommGraph build_topology(const TopologySpec& spec, std::size_t n, RngStream rng) {
    if (n == 0) throw TopologyError("build_topology: need at least one agent");
    switch (spec.kind) {
        case TopologySpec::Kind::complete: return detail::complete_graph(n);
        case TopologySpec::Kind::ring: return detail::ring_graph(n);
        case TopologySpec::Kind::erdos_renyi:
        case TopologySpec::Kind::watts_strogatz: {
            if (spec.kind == TopologySpec::Kind::erdos_renyi && spec.p > 1.0)
                throw TopologyError("erdos_renyi: p must be <= 1");
            if (spec.kind == TopologySpec::Kind::watts_strogatz && (spec.p < 0.0 || spec.p > 1.0))
                throw TopologyError("watts_strogatz: p must lie in [0, 1]");
            for (std::size_t attempt = 0; attempt < spec.max_retries; ++attempt) {
                RngStream r = rng.split(attempt);
                CommGraph g;
                if (spec.kind == TopologySpec::Kind::erdos_renyi) {
                    const double p = spec.p < 0.0 ? r.uniform() : spec.p;
                    g = detail::erdos_renyi_once(n, p, r);
                } else {
                    g = detail::watts_strogatz_once(n, spec.k, spec.p, r);
                }
                if (g.connected()) return g;
            }
            throw TopologyError(std::string(topology_name(spec.kind)) + ": no connected sample after " +
                                std::to_string(spec.max_retries) + " attempts");
        }
    }
    throw TopologyError("unknown topology kind");
}

/// Symmetric doubly stochastic gossip matrix with its contraction factor
/// rho = max(|sigma_2|, |sigma_N|).
struct MixingMatrix {
    Eigen::MatrixXd m;
    double rho = 0.0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(m.rows()); }
};

/// Eigenvalues in descending order.
inline Eigen::VectorXd mixing_eigenvalues(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().reverse();
}

inline double spectral_rho(const Eigen::MatrixXd& m) {
    if (m.rows() <= 1) return 0.0;
    const Eigen::VectorXd ev = mixing_eigenvalues(m);
    const double rho = std::max(std::abs(ev(1)), std::abs(ev(ev.size() - 1)));
    // eigen-solver round-off on exactly averaging matrices
    return rho < 64.0 * std::numeric_limits<double>::epsilon() ? 0.0 : rho;
}

/// Metropolis-Hastings weights: M(i, j) = 1 / (1 + max(deg_i, deg_j)) on
/// edges, the remainder on the diagonal.
inline MixingMatrix metropolis_weights(const CommGraph& g) {
    if (!g.connected()) throw TopologyError("metropolis_weights: graph is not connected");
    const auto n = static_cast<Eigen::Index>(g.n);
    const auto deg = g.degrees();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : g.edges) {
        const double w = 1.0 / (1.0 + static_cast<double>(std::max(deg[i], deg[j])));
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
        m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
    }
    // extended precision so the complete graph gives exactly fl(1/N) on the diagonal
    std::vector<long double> off(g.n, 0.0L);
    for (const auto& [i, j] : g.edges) {
        const long double w = 1.0L / (1.0L + static_cast<long double>(std::max(deg[i], deg[j])));
        off[i] += w;
        off[j] += w;
    }
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) = static_cast<double>(1.0L - off[static_cast<std::size_t>(i)]);
    return {m, spectral_rho(m)};
}

/// J / N: one round of exact averaging.
inline MixingMatrix averaging_matrix(std::size_t n) {
    const auto k = static_cast<Eigen::Index>(n);
    return {Eigen::MatrixXd::Constant(k, k, 1.0 / static_cast<double>(n)), 0.0};
}

/// W M^m: column i of W is agent i's parameter vector.
inline Eigen::MatrixXd mix(const Eigen::MatrixXd& w, const MixingMatrix& mixing, std::size_t rounds) {
    if (static_cast<std::size_t>(w.cols()) != mixing.size())
        throw ShapeError("mix: W has " + std::to_string(w.cols()) + " columns, M is " +
                         std::to_string(mixing.size()) + "x" + std::to_string(mixing.size()));
    if (rounds == 0) throw ShapeError("mix: need at least one round");
    Eigen::MatrixXd out = w;
    for (std::size_t r = 0; r < rounds; ++r) out = out * mixing.m;
    return out;
}

/// sum_i ||w_i - w_bar||^2.
inline double consensus_error(const Eigen::MatrixXd& w) {
    if (w.cols() == 0) return 0.0;
    const Eigen::VectorXd mean = w.rowwise().mean();
    return (w.colwise() - mean).squaredNorm();
}

/// Rounds m = ceil(log(1/eps) / (1 - rho)) for the multi-round regime.
inline std::size_t multi_round_count(double rho, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("multi_round_count: eps must lie in (0, 1)");
    if (rho >= 1.0) throw ConfigError("multi_round_count: rho must be < 1");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log(1.0 / eps) / (1.0 - rho))));
}

} // namespace dsac
