#include <gtest/gtest.h>

#include "dsac/mdp.hpp"
#include "test_support.hpp"

using namespace dsac;
using dsac::testing::random_matrix;
using dsac::testing::random_mdp;

TEST(FactoredMdp, SizesFollowFactors) {
    const auto mdp = random_mdp({2, 3}, {2, 2}, 0.9, 1);
    EXPECT_EQ(mdp.n_agents(), 2u);
    EXPECT_EQ(mdp.num_states(), 6u);
    EXPECT_EQ(mdp.num_actions(), 4u);
    EXPECT_EQ(mdp.kernel().rows(), 24);
    for (std::size_t s = 0; s < 6; ++s) {
        const auto t = mdp.decode_state(s);
        EXPECT_EQ(mdp.local_state(0, s), t[0]);
        EXPECT_EQ(mdp.local_state(1, s), t[1]);
        EXPECT_EQ(mdp.encode_state(t), s);
    }
    for (std::size_t a = 0; a < 4; ++a) EXPECT_EQ(mdp.local_action(0, a), a / 2);
}

TEST(FactoredMdp, RejectsBadInput) {
    RowMatrix k(1, 1);
    k << 1.0;
    const Eigen::VectorXd xi = Eigen::VectorXd::Ones(1);
    EXPECT_THROW(FactoredMdp({1}, {1}, k, xi, 1.0), ConfigError);
    EXPECT_THROW(FactoredMdp({1}, {1}, k, xi, 0.0), ConfigError);
    EXPECT_THROW(FactoredMdp({}, {}, k, xi, 0.9), ConfigError);
    EXPECT_THROW(FactoredMdp({1}, {1, 1}, k, xi, 0.9), ConfigError);
    RowMatrix bad(1, 1);
    bad << 0.9;
    EXPECT_THROW(FactoredMdp({1}, {1}, bad, xi, 0.9), ConfigError);
    EXPECT_THROW(FactoredMdp({1}, {1}, k, Eigen::VectorXd::Constant(1, 0.5), 0.9), ConfigError);
    EXPECT_THROW(FactoredMdp({2}, {1}, k, xi, 0.9), ConfigError);
    RowMatrix neg(2, 2);
    neg << 1.5, -0.5, 0.5, 0.5;
    Eigen::VectorXd xi2(2);
    xi2 << 0.5, 0.5;
    EXPECT_THROW(FactoredMdp({2}, {1}, neg, xi2, 0.9), ConfigError);
}

TEST(OccupancyMass, ExactAndTruncatedTotals) {
    EXPECT_DOUBLE_EQ(exact_total_mass(0.9), 10.0);
    EXPECT_DOUBLE_EQ(truncated_total_mass(0.5, 2), 1.75);
    EXPECT_NEAR(truncated_total_mass(0.9, 2000), 10.0, 1e-12);
}

TEST(Marginalize, SingleAgentIsIdentity) {
    const auto mdp = random_mdp({4}, {3}, 0.9, 2);
    const auto g = OccupancyMeasure::global(random_matrix(4, 3, 5, 0.0, 1.0), 0.9);
    const auto l = marginalize(mdp, g, 0);
    EXPECT_EQ(l.agent, std::optional<std::size_t>(0));
    EXPECT_EQ(l.mass, g.mass);
}

TEST(Marginalize, UniformMassSplitsEvenly) {
    const auto mdp = random_mdp({2, 2}, {2, 2}, 0.9, 3);
    const double total = exact_total_mass(0.9);
    const auto g = OccupancyMeasure::global(Eigen::MatrixXd::Constant(4, 4, total / 16.0), 0.9);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto l = marginalize(mdp, g, i);
        for (Eigen::Index j = 0; j < l.mass.size(); ++j) EXPECT_NEAR(l.mass.data()[j], total / 4.0, 1e-12);
    }
}

TEST(Marginalize, BruteForceSums) {
    const auto mdp = random_mdp({2, 3}, {2, 2}, 0.8, 4);
    const auto g = OccupancyMeasure::global(random_matrix(6, 4, 9, 0.0, 1.0), 0.8);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto l = marginalize(mdp, g, i);
        EXPECT_NEAR(l.total(), g.total(), 1e-12);
        Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(l.mass.rows(), l.mass.cols());
        for (std::size_t s = 0; s < 6; ++s)
            for (std::size_t a = 0; a < 4; ++a)
                ref(static_cast<Eigen::Index>(mdp.decode_state(s)[i]), static_cast<Eigen::Index>(mdp.decode_action(a)[i])) +=
                    g.mass(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
        EXPECT_LE((ref - l.mass).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Marginalize, IsLinear) {
    const auto mdp = random_mdp({3, 2}, {2, 3}, 0.9, 6);
    const Eigen::MatrixXd l1 = random_matrix(6, 6, 10, 0.0, 1.0), l2 = random_matrix(6, 6, 11, 0.0, 1.0);
    const double a = 0.7, b = 2.3;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto lhs = marginalize(mdp, OccupancyMeasure::global(a * l1 + b * l2, 0.9), i);
        const auto r1 = marginalize(mdp, OccupancyMeasure::global(l1, 0.9), i);
        const auto r2 = marginalize(mdp, OccupancyMeasure::global(l2, 0.9), i);
        EXPECT_LE((lhs.mass - (a * r1.mass + b * r2.mass)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Marginalize, ScopeErrors) {
    const auto mdp = random_mdp({2, 2}, {2, 2}, 0.9, 7);
    const auto g = OccupancyMeasure::global(Eigen::MatrixXd::Ones(4, 4), 0.9);
    const auto l = marginalize(mdp, g, 0);
    EXPECT_THROW(marginalize(mdp, l, 0), ScopeError);
    EXPECT_THROW(marginalize(mdp, g, 2), ScopeError);
    EXPECT_THROW(marginalize(mdp, OccupancyMeasure::global(Eigen::MatrixXd::Ones(3, 4), 0.9), 0), ScopeError);
}
