#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dsac/graph.hpp"
#include "test_support.hpp"

using namespace dsac;
using dsac::testing::random_matrix;

namespace {

using Edges = std::set<std::pair<std::size_t, std::size_t>>;

std::vector<MixingMatrix> generated_mixings() {
    std::vector<MixingMatrix> out;
    for (std::size_t n : {1u, 2u, 3u, 5u, 8u})
        out.push_back(metropolis_weights(build_topology({TopologySpec::Kind::complete}, n, RngStream(1))));
    for (std::size_t n = 4; n <= 16; ++n)
        out.push_back(metropolis_weights(build_topology({TopologySpec::Kind::ring}, n, RngStream(1))));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        out.push_back(metropolis_weights(build_topology({TopologySpec::Kind::erdos_renyi, 0.4}, 10, RngStream(seed))));
        out.push_back(
            metropolis_weights(build_topology({TopologySpec::Kind::watts_strogatz, 0.2, 4}, 12, RngStream(seed))));
    }
    return out;
}

} // namespace

TEST(BuildTopology, Examples) {
    EXPECT_EQ(build_topology({TopologySpec::Kind::complete}, 3, RngStream(0)).edges, (Edges{{0, 1}, {0, 2}, {1, 2}}));
    EXPECT_EQ(build_topology({TopologySpec::Kind::ring}, 4, RngStream(0)).edges, (Edges{{0, 1}, {1, 2}, {2, 3}, {0, 3}}));
    EXPECT_EQ(build_topology({TopologySpec::Kind::erdos_renyi, 1.0}, 5, RngStream(0)).edges,
              build_topology({TopologySpec::Kind::complete}, 5, RngStream(0)).edges);
}

TEST(BuildTopology, RandomFamiliesAreConnectedAndSeeded) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (const TopologySpec spec : {TopologySpec{TopologySpec::Kind::erdos_renyi, 0.3},
                                        TopologySpec{TopologySpec::Kind::erdos_renyi, -1.0},
                                        TopologySpec{TopologySpec::Kind::watts_strogatz, 0.5, 4}}) {
            const auto g = build_topology(spec, 9, RngStream(seed));
            EXPECT_TRUE(g.connected());
            EXPECT_EQ(g.edges, build_topology(spec, 9, RngStream(seed)).edges);
        }
    }
}

TEST(BuildTopology, WattsStrogatzWithoutRewiringIsLattice) {
    const auto g = build_topology({TopologySpec::Kind::watts_strogatz, 0.0, 4}, 8, RngStream(3));
    EXPECT_EQ(g.edges.size(), 16u);
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_TRUE(g.has_edge(i, (i + 1) % 8));
        EXPECT_TRUE(g.has_edge(i, (i + 2) % 8));
    }
}

TEST(BuildTopology, Errors) {
    EXPECT_THROW(build_topology({TopologySpec::Kind::complete}, 0, RngStream(0)), TopologyError);
    EXPECT_THROW(build_topology({TopologySpec::Kind::erdos_renyi, 0.0, 2, 5}, 4, RngStream(0)), TopologyError);
    EXPECT_THROW(build_topology({TopologySpec::Kind::watts_strogatz, 1.5}, 4, RngStream(0)), TopologyError);
    CommGraph g{3, {}};
    EXPECT_THROW(g.add_edge(1, 1), TopologyError);
    EXPECT_THROW(g.add_edge(0, 3), TopologyError);
}

TEST(MetropolisWeights, CompleteGraphAverages) {
    for (std::size_t n : {2u, 3u, 5u, 6u, 7u, 10u}) {
        const auto m = metropolis_weights(build_topology({TopologySpec::Kind::complete}, n, RngStream(0)));
        EXPECT_EQ(m.m, averaging_matrix(n).m);
        EXPECT_EQ(m.rho, 0.0);
    }
}

TEST(MetropolisWeights, RingOfFour) {
    const auto m = metropolis_weights(build_topology({TopologySpec::Kind::ring}, 4, RngStream(0)));
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(m.m(i, i), 1.0 / 3.0);
        EXPECT_DOUBLE_EQ(m.m(i, (i + 1) % 4), 1.0 / 3.0);
        EXPECT_DOUBLE_EQ(m.m(i, (i + 2) % 4), 0.0);
    }
    EXPECT_NEAR(m.rho, 1.0 / 3.0, 1e-12);
}

TEST(MetropolisWeights, SingleNode) {
    const auto m = metropolis_weights(CommGraph{1, {}});
    EXPECT_EQ(m.m, Eigen::MatrixXd::Ones(1, 1));
    EXPECT_EQ(m.rho, 0.0);
}

TEST(MetropolisWeights, DisconnectedThrows) {
    CommGraph g{4, {}};
    g.add_edge(0, 1);
    g.add_edge(2, 3);
    EXPECT_THROW(metropolis_weights(g), TopologyError);
}

TEST(MetropolisWeights, DoublyStochasticSymmetricAndSupportedOnEdges) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto g = build_topology({TopologySpec::Kind::erdos_renyi, 0.35}, 9, RngStream(seed));
        const auto m = metropolis_weights(g);
        EXPECT_LE((m.m - m.m.transpose()).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_LE((m.m.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
        EXPECT_LE((m.m.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
        for (std::size_t i = 0; i < 9; ++i)
            for (std::size_t j = 0; j < 9; ++j) {
                const double v = m.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (i == j) EXPECT_GT(v, 0.0);
                else EXPECT_EQ(v > 0.0, g.has_edge(i, j));
            }
        EXPECT_LT(m.rho, 1.0);
    }
}

TEST(MetropolisWeights, EigenStructure) {
    for (const auto& m : generated_mixings()) {
        const Eigen::VectorXd ev = mixing_eigenvalues(m.m);
        EXPECT_NEAR(ev(0), 1.0, 1e-10);
        for (Eigen::Index k = 1; k < ev.size(); ++k) EXPECT_LE(std::abs(ev(k)), m.rho + 1e-12);
    }
}

TEST(Mix, Examples) {
    const auto ring = metropolis_weights(build_topology({TopologySpec::Kind::ring}, 5, RngStream(0)));
    Eigen::MatrixXd same(3, 5);
    for (Eigen::Index j = 0; j < 5; ++j) same.col(j) << 1.0, -2.0, 0.5;
    for (std::size_t m = 1; m <= 4; ++m) EXPECT_LE((mix(same, ring, m) - same).cwiseAbs().maxCoeff(), 1e-15);

    const auto full = metropolis_weights(build_topology({TopologySpec::Kind::complete}, 5, RngStream(0)));
    const Eigen::MatrixXd w = random_matrix(3, 5, 1);
    const Eigen::MatrixXd once = mix(w, full, 1);
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_LE((once.col(j) - w.rowwise().mean()).norm(), 1e-15);

    EXPECT_LE((mix(w, ring, 3) - w * ring.m * ring.m * ring.m).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(mix(random_matrix(3, 4, 2), ring, 1), ShapeError);
    EXPECT_THROW(mix(w, ring, 0), ShapeError);
}

TEST(Mix, PreservesColumnMean) {
    for (const auto& m : generated_mixings()) {
        const auto n = static_cast<Eigen::Index>(m.size());
        const Eigen::MatrixXd w = random_matrix(4, n, 7 + static_cast<std::uint64_t>(n));
        EXPECT_LE((mix(w, m, 5).rowwise().mean() - w.rowwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Mix, ContractsAtRateRhoToTheM) {
    std::uint64_t seed = 0;
    for (const auto& m : generated_mixings()) {
        const auto n = static_cast<Eigen::Index>(m.size());
        for (int rep = 0; rep < 100; ++rep) {
            const Eigen::MatrixXd w = random_matrix(5, n, ++seed);
            const Eigen::MatrixXd avg = w.rowwise().mean().replicate(1, n);
            const double before = (w - avg).norm();
            Eigen::MatrixXd cur = w;
            for (int r = 1; r <= 10; ++r) {
                cur = cur * m.m;
                EXPECT_LE((cur - avg).norm(), std::pow(m.rho, r) * before + 1e-10);
            }
        }
    }
}

TEST(ConsensusError, Examples) {
    Eigen::MatrixXd same(2, 3);
    same << 1, 1, 1, 4, 4, 4;
    EXPECT_EQ(consensus_error(same), 0.0);
    Eigen::VectorXd v(3);
    v << 1.0, -2.0, 0.5;
    Eigen::MatrixXd pm(3, 2);
    pm << v, -v;
    EXPECT_DOUBLE_EQ(consensus_error(pm), 2.0 * v.squaredNorm());
    const Eigen::MatrixXd w = random_matrix(4, 6, 3);
    EXPECT_NEAR(consensus_error(w), (w - w.rowwise().mean().replicate(1, 6)).squaredNorm(), 1e-12);
}

TEST(MultiRoundCount, Formula) {
    EXPECT_EQ(multi_round_count(0.0, 1e-6), static_cast<std::size_t>(std::ceil(std::log(1e6))));
    EXPECT_EQ(multi_round_count(0.5, 0.1), static_cast<std::size_t>(std::ceil(std::log(10.0) / 0.5)));
    EXPECT_THROW(multi_round_count(1.0, 0.1), ConfigError);
    EXPECT_THROW(multi_round_count(0.5, 1.0), ConfigError);
}
