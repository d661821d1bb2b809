#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dsac/schedule.hpp"

using namespace dsac;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

ScheduleContext ctx(double gamma = 0.9, std::size_t n = 2) {
    ScheduleContext c;
    c.gamma = gamma;
    c.n_agents = n;
    return c;
}

} // namespace

TEST(CeilCount, ToleratesRoundOff) {
    EXPECT_EQ(ceil_count(10.0 * std::pow(8.0, 2.0 / 3.0)), 40u);
    EXPECT_EQ(ceil_count(std::pow(0.01, -1.5)), 1000u);
    EXPECT_EQ(ceil_count(40.01), 41u);
    EXPECT_EQ(ceil_count(-3.0), 0u);
}

TEST(ActorStepBound, Formula) {
    const auto c = ctx(0.9, 2);
    const AnalysisConstants k{0.5, 2.0, 1.0};
    const double spread = std::max(4.0 * std::sqrt(6.0), 6.0 * std::sqrt(10.0));
    EXPECT_DOUBLE_EQ(actor_step_bound(c, k, 0.1), 0.1 * 0.5 * 0.1 / (2.0 * 1.0 * std::sqrt(2.0)) / spread);
    // large eta_w hits the smoothness cap
    EXPECT_DOUBLE_EQ(actor_step_bound(c, {1.0, 1e-9, 2.0}, 1.0), 1.0 / 8.0);
    // many agents: the 4 sqrt(3N) term dominates
    const auto wide = ctx(0.9, 100);
    EXPECT_DOUBLE_EQ(actor_step_bound(wide, {}, 0.1), 0.1 * 0.1 / std::sqrt(2.0) / (4.0 * std::sqrt(300.0)));
}

TEST(AdaptiveSchedule, ExactValuesAtFrozenIterations) {
    const auto c = ctx(0.9, 2);
    const AnalysisConstants k{0.5, 1.0, 1.0};
    const auto s = Schedule::adaptive(100, 0.1, c, k);
    for (std::size_t it : {0u, 7u, 63u}) {
        const double kk = static_cast<double>(it) + 1.0;
        const double delta_k = 2.0 * 0.1 / (2.0 * kPi2 * kk * kk);
        const auto p = s.at(it);
        EXPECT_DOUBLE_EQ(p.delta, delta_k) << it;
        EXPECT_EQ(p.horizon, static_cast<std::size_t>(std::ceil(2.0 * std::log(kk + 1.0) / 0.1))) << it;
        EXPECT_EQ(p.batch, static_cast<std::size_t>(std::ceil(std::log(1.0 / delta_k) * std::pow(kk, 2.0 / 3.0)))) << it;
        EXPECT_DOUBLE_EQ(p.eta_w, std::min(std::pow(kk, -1.0 / 3.0), 0.1)) << it;
        EXPECT_DOUBLE_EQ(p.eta_theta, actor_step_bound(c, k, std::min(std::pow(kk + 1.0, -1.0 / 3.0), 0.1))) << it;
    }
    // hand-evaluated: k = 0 -> delta = 0.1 / pi^2, H = ceil(20 log 2) = 14, B = ceil(log(10 pi^2)) = 5
    EXPECT_EQ(s.at(0).horizon, 14u);
    EXPECT_EQ(s.at(0).batch, 5u);
    EXPECT_DOUBLE_EQ(s.at(0).eta_w, 0.1);
    // k = 7: H = ceil(20 log 9) = 44; k = 63: H = ceil(20 log 65) = 84
    EXPECT_EQ(s.at(7).horizon, 44u);
    EXPECT_EQ(s.at(63).horizon, 84u);
}

TEST(AdaptiveSchedule, BatchAtSevenIsForty) {
    // choose delta so that log(1 / delta_7) = 10: delta_7 = 2 delta / (N pi^2 64)
    const std::size_t n = 1;
    const double delta = std::exp(-10.0) * static_cast<double>(n) * kPi2 * 64.0 / 2.0;
    const auto s = Schedule::adaptive(10, delta, ctx(0.9, n), {});
    EXPECT_NEAR(std::log(1.0 / s.adaptive_delta(7)), 10.0, 1e-12);
    EXPECT_EQ(s.at(7).batch, 40u);
}

TEST(AdaptiveSchedule, EtaWAtZeroIsInverseLw) {
    for (double gamma : {0.5, 0.9, 0.99}) {
        const auto c = ctx(gamma, 3);
        ASSERT_GE(c.l_w(), 1.0);
        EXPECT_DOUBLE_EQ(Schedule::adaptive(5, 0.1, c, {}).at(0).eta_w, 1.0 / c.l_w());
    }
}

TEST(AdaptiveSchedule, UnionBoundBudget) {
    for (std::size_t n : {1u, 2u, 8u}) {
        const auto s = Schedule::adaptive(10000, 0.1, ctx(0.9, n), {});
        double sum = 0.0;
        for (std::size_t k = 0; k <= 10000; ++k) sum += s.adaptive_delta(k);
        EXPECT_LE(3.0 * static_cast<double>(n) * sum, 0.1);
    }
}

TEST(AdaptiveSchedule, ActorStepNonincreasing) {
    ScheduleContext c = ctx(0.5, 2);
    c.c_phi = 0.3;  // 1/L_w = 5.6, so the (k+1)^-1/3 branch is active
    const auto s = Schedule::adaptive(200, 0.1, c, {});
    for (std::size_t k = 0; k < 200; ++k) EXPECT_LE(s.at(k + 1).eta_theta, s.at(k).eta_theta);
}

TEST(ConstantSchedule, Examples) {
    const auto c = ctx(0.9, 2);
    const auto s = Schedule::constant(0.01, 0.1, c, {});
    EXPECT_EQ(s.iterations(), 1000u);
    const auto p = s.at(0);
    const double delta_k = 0.1 / (6.0 * 1001.0);
    EXPECT_DOUBLE_EQ(p.delta, delta_k);
    EXPECT_EQ(p.batch, static_cast<std::size_t>(std::ceil(std::log(1.0 / delta_k) * 100.0)));
    EXPECT_EQ(p.horizon, static_cast<std::size_t>(std::ceil(std::log(100.0) / 0.1)));
    EXPECT_DOUBLE_EQ(p.eta_w, std::min(0.1, 1.0 / c.l_w()));
    EXPECT_EQ(s.at(17).batch, p.batch);

    const auto half = Schedule::constant(0.005, 0.1, c, {});
    EXPECT_EQ(half.iterations(), static_cast<std::size_t>(std::ceil(std::pow(0.005, -1.5))));
    EXPECT_NEAR(static_cast<double>(half.iterations()) / 1000.0, std::pow(2.0, 1.5), 1e-3);
}

TEST(ConstantSchedule, ActorStepRespectsTrackingBound) {
    for (std::size_t n : {1u, 2u, 5u, 40u}) {
        const auto c = ctx(0.9, n);
        const AnalysisConstants k{0.7, 1.3, 0.01};
        const auto p = Schedule::constant(0.05, 0.1, c, k).at(0);
        EXPECT_LE(p.eta_theta,
                  p.eta_w * (0.1 * 0.7) / (1.3 * c.c_phi * c.c_pi * 4.0 * std::sqrt(3.0 * static_cast<double>(n))) *
                      (1 + 1e-12));
    }
}

TEST(MultiRoundSchedule, RoundsFromRho) {
    ScheduleContext c = ctx(0.9, 8);
    c.rho = 0.8;
    const auto s = Schedule::multi_round(1e-3, 0.1, c, {});
    EXPECT_EQ(s.mixing_rounds(), static_cast<std::size_t>(std::ceil(std::log(1e3) / 0.2)));
    EXPECT_EQ(s.iterations(), 1000u);
    EXPECT_DOUBLE_EQ(s.at(0).eta_w, 1.0 / c.l_w());
}

TEST(ManualSchedule, ValidatesInputs) {
    const auto c = ctx(0.9, 2);
    const IterationParams ok{8, 10, 0.1, 0.05, 0.0};
    const auto s = Schedule::manual(20, ok, 2, c);
    EXPECT_EQ(s.at(13).batch, 8u);
    EXPECT_EQ(s.mixing_rounds(), 2u);
    EXPECT_THROW(Schedule::manual(20, {0, 10, 0.1, 0.05, 0.0}, 1, c), ConfigError);
    EXPECT_THROW(Schedule::manual(20, {8, 10, 0.0, 0.05, 0.0}, 1, c), ConfigError);
    EXPECT_THROW(Schedule::manual(20, {8, 10, 0.1, 0.5, 0.0}, 1, c), ConfigError);
    EXPECT_THROW(Schedule::manual(20, ok, 0, c), ConfigError);
}

TEST(ScheduleErrors, OutOfRange) {
    EXPECT_THROW(Schedule::constant(0.0, 0.1, ctx(), {}), ConfigError);
    EXPECT_THROW(Schedule::constant(0.1, 1.0, ctx(), {}), ConfigError);
    EXPECT_THROW(Schedule::adaptive(10, 0.1, ctx(1.0), {}), ConfigError);
    EXPECT_THROW(Schedule::adaptive(10, 0.1, ctx(), {0.0, 1.0, 1.0}), ConfigError);
}
