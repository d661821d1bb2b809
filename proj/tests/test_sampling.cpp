#include <cmath>
#include <cstdlib>
#include <vector>

#include <gtest/gtest.h>

#include "dsac/oracle.hpp"
#include "dsac/sampling.hpp"
#include "test_support.hpp"

using namespace dsac;
using dsac::testing::random_mdp;
using dsac::testing::random_policy;

namespace {

/// sum_{t <= H} gamma^t P(s^t = s) pi(a | s) by forward propagation.
Eigen::MatrixXd truncated_occupancy(const FactoredMdp& mdp, const JointPolicy& pol, std::size_t H) {
    const RowMatrix pi = joint_policy_table(mdp, pol);
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    const auto A = static_cast<Eigen::Index>(mdp.num_actions());
    Eigen::VectorXd d = mdp.initial_dist();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(S, A);
    double g = 1.0;
    for (std::size_t t = 0; t <= H; ++t) {
        out += g * (d.asDiagonal() * pi);
        Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
        for (Eigen::Index s = 0; s < S; ++s)
            for (Eigen::Index a = 0; a < A; ++a)
                next += d(s) * pi(s, a) * mdp.transition(static_cast<std::size_t>(s), static_cast<std::size_t>(a)).transpose();
        d = next;
        g *= mdp.discount();
    }
    return out;
}

} // namespace

TEST(Rollout, DegenerateMdp) {
    const auto mdp = dsac::testing::single_state(0.9);
    RngStream rng(1);
    const auto tau = rollout(mdp, JointPolicy::uniform(mdp), 3, rng);
    ASSERT_EQ(tau.steps.size(), 4u);
    EXPECT_EQ(tau.horizon(), 3u);
    for (const auto& st : tau.steps) EXPECT_EQ(st, (Step{0, 0}));
}

TEST(Rollout, DeterministicCycle) {
    const auto mdp = dsac::testing::swap_mdp(0.9, 2);
    auto pol = JointPolicy::uniform(mdp);
    pol.per_agent[0].logits.col(1).setConstant(60.0);
    RngStream rng(2);
    const auto tau = rollout(mdp, pol, 2, rng);
    ASSERT_EQ(tau.steps.size(), 3u);
    EXPECT_EQ(tau.steps[0].state, 0u);
    EXPECT_EQ(tau.steps[1].state, 1u);
    EXPECT_EQ(tau.steps[2].state, 0u);
    for (const auto& st : tau.steps) EXPECT_EQ(st.action, 1u);
}

TEST(Rollout, NextStateFrequenciesMatchKernel) {
    const auto mdp = random_mdp({3}, {1}, 0.9, 3);
    const auto pol = JointPolicy::uniform(mdp);
    RngStream rng(4);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(3, 3);
    std::size_t steps = 0;
    while (steps < 100000) {
        const auto tau = rollout(mdp, pol, 99, rng);
        for (std::size_t t = 0; t + 1 < tau.steps.size(); ++t)
            counts(static_cast<Eigen::Index>(tau.steps[t].state), static_cast<Eigen::Index>(tau.steps[t + 1].state)) += 1;
        steps += 99;
    }
    for (Eigen::Index s = 0; s < 3; ++s) {
        const double n = counts.row(s).sum();
        for (Eigen::Index s2 = 0; s2 < 3; ++s2) {
            const double p = mdp.kernel().coeff(s, s2);
            EXPECT_NEAR(counts(s, s2), n * p, 4.0 * std::sqrt(n * p * (1 - p)) + 1.0);
        }
    }
}

TEST(Rollout, DimensionMismatchThrows) {
    const auto mdp = random_mdp({3}, {2}, 0.9, 5);
    const auto other = random_mdp({4}, {2}, 0.9, 5);
    RngStream rng(1);
    EXPECT_THROW(rollout(mdp, JointPolicy::uniform(other), 3, rng), ConfigError);
}

TEST(RolloutBatch, DeterministicAndThreadIndependent) {
    const auto mdp = random_mdp({3, 2}, {2, 2}, 0.9, 6);
    const auto pol = random_policy(mdp, 7);
    const RngStream root = RngStream::derive(9, 4);
    const auto a = rollout_batch(mdp, pol, 37, 12, root, 1);
    const auto b = rollout_batch(mdp, pol, 37, 12, root, 4);
    const auto c = rollout_batch(mdp, pol, 37, 12, root, 1);
    ASSERT_EQ(a.size(), 37u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].steps, b[i].steps);
        EXPECT_EQ(a[i].steps, c[i].steps);
    }
}

TEST(EmpiricalOccupancy, GeometricSum) {
    const auto mdp = dsac::testing::single_state(0.5);
    Trajectory tau{{{0, 0}, {0, 0}, {0, 0}}};
    const auto l = empirical_local_occupancy(mdp, {tau}, 0);
    EXPECT_DOUBLE_EQ(l.mass(0, 0), 1.75);
}

TEST(EmpiricalOccupancy, AveragingIdempotent) {
    const auto mdp = random_mdp({3, 2}, {2, 2}, 0.9, 8);
    RngStream rng(3);
    const auto tau = rollout(mdp, JointPolicy::uniform(mdp), 7, rng);
    for (std::size_t i = 0; i < 2; ++i)
        EXPECT_TRUE(empirical_local_occupancy(mdp, {tau}, i).mass.isApprox(empirical_local_occupancy(mdp, {tau, tau}, i).mass,
                                                                           1e-15));
}

TEST(EmpiricalOccupancy, TruncatedTotalMass) {
    const auto mdp = random_mdp({3, 2}, {2, 2}, 0.8, 9);
    const auto batch = rollout_batch(mdp, JointPolicy::uniform(mdp), 10, 15, RngStream(1));
    for (std::size_t i = 0; i < 2; ++i)
        EXPECT_NEAR(empirical_local_occupancy(mdp, batch, i).total(), truncated_total_mass(0.8, 15), 1e-9);
    EXPECT_NEAR(empirical_global_occupancy(mdp, batch).total(), truncated_total_mass(0.8, 15), 1e-9);
}

TEST(EmpiricalOccupancy, Errors) {
    const auto mdp = random_mdp({3}, {2}, 0.9, 10);
    EXPECT_THROW(empirical_local_occupancy(mdp, {}, 0), EstimatorError);
    Trajectory a{{{0, 0}, {1, 0}}}, b{{{0, 0}}};
    EXPECT_THROW(empirical_local_occupancy(mdp, {a, b}, 0), EstimatorError);
    EXPECT_THROW(empirical_local_occupancy(mdp, {a}, 1), ScopeError);
}

TEST(EmpiricalOccupancy, LocalEqualsMarginalOfGlobal) {
    const auto mdp = random_mdp({3, 2}, {2, 3}, 0.9, 11);
    const auto batch = rollout_batch(mdp, random_policy(mdp, 2), 20, 9, RngStream(5));
    const auto g = empirical_global_occupancy(mdp, batch);
    for (std::size_t i = 0; i < 2; ++i)
        EXPECT_LE((marginalize(mdp, g, i).mass - empirical_local_occupancy(mdp, batch, i).mass).cwiseAbs().maxCoeff(),
                  1e-12);
}

TEST(EmpiricalOccupancy, UnbiasedForTruncatedMeasure) {
    const auto mdp = random_mdp({2}, {2}, 0.8, 12);
    const auto pol = random_policy(mdp, 13);
    const std::size_t H = 10;
    const Eigen::MatrixXd exact = truncated_occupancy(mdp, pol, H);
    const int seeds = 10000;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2), sum2 = Eigen::MatrixXd::Zero(2, 2);
    for (int k = 0; k < seeds; ++k) {
        RngStream rng = RngStream::derive(77, k);
        const auto l = empirical_local_occupancy(mdp, {rollout(mdp, pol, H, rng)}, 0).mass;
        sum += l;
        sum2 += l.cwiseProduct(l);
    }
    const Eigen::MatrixXd mean = sum / seeds;
    const Eigen::MatrixXd var = sum2 / seeds - mean.cwiseProduct(mean);
    for (Eigen::Index j = 0; j < 4; ++j)
        EXPECT_LE(std::abs(mean.data()[j] - exact.data()[j]), 4.0 * std::sqrt(var.data()[j] / seeds));
}

TEST(EmpiricalOccupancy, ConvergesToExactMarginal) {
    const auto mdp = random_mdp({3}, {2}, 0.9, 14);
    const auto pol = random_policy(mdp, 15);
    const auto H = static_cast<std::size_t>(std::ceil(std::log(1e-4) / std::log(0.9)));
    const auto batch = rollout_batch(mdp, pol, 20000, H, RngStream(16));
    const auto exact = oracle::exact_occupancy(mdp, pol);
    EXPECT_LE((empirical_local_occupancy(mdp, batch, 0).mass - marginalize(mdp, exact, 0).mass).norm(), 0.02);
}
