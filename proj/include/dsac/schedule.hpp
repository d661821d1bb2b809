#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "dsac/errors.hpp"
#include "dsac/graph.hpp"

namespace dsac {

/// Constants that only enter the actor step-size formula. The analysis never
/// pins them down, so they are inputs.
struct AnalysisConstants {
    double mu_w = 1.0;     // strong convexity of the critic loss
    double c_w = 1.0;      // Lipschitz constant of the optimal critic in theta
    double l_theta = 1.0;  // smoothness of F o lambda
};

/// Multipliers hidden inside the O(.) of each schedule.
struct LeadingConstants {
    double iterations = 1.0;
    double horizon = 1.0;
    double batch = 1.0;
    double eta_w = 1.0;
    double adaptive_horizon = 2.0;
};

/// Problem quantities a schedule depends on.
struct ScheduleContext {
    double gamma = 0.9;
    std::size_t n_agents = 1;
    double c_phi = 1.0;
    double c_pi = 1.4142135623730951;
    double rho = 0.0;

    double l_w() const { return c_phi * c_phi / (1.0 - gamma); }
};

struct IterationParams {
    std::size_t batch = 1;
    std::size_t horizon = 1;
    double eta_theta = 0.0;
    double eta_w = 0.0;
    double delta = 0.0;  // failure budget delta_k (0 when unused)
};

/// ceil() that ignores relative round-off of order 1e-12, so that e.g.
/// 10 * 8^(2/3) evaluates to 40 and 0.01^-1.5 to 1000.
inline std::size_t ceil_count(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(std::max(r, 0.0));
    return static_cast<std::size_t>(std::max(std::ceil(x), 0.0));
}

/// min{ (1 - gamma) mu_w eta_w / (C_w C_phi C_pi) / max{4 sqrt(3N), 6 sqrt(10)}, 1 / (4 L_theta) }.
inline double actor_step_bound(const ScheduleContext& ctx, const AnalysisConstants& c, double eta_w) {
    const double spread = std::max(4.0 * std::sqrt(3.0 * static_cast<double>(ctx.n_agents)), 6.0 * std::sqrt(10.0));
    const double tracking = (1.0 - ctx.gamma) * c.mu_w * eta_w / (c.c_w * ctx.c_phi * ctx.c_pi) / spread;
    return std::min(tracking, 1.0 / (4.0 * c.l_theta));
}

/// Per-iteration batch sizes, horizons, and step sizes.
class Schedule {
public:
    enum class Mode { constant, adaptive, manual, multi_round };

    /// Fixed-epsilon schedule: T = ceil(c ε^-1.5), H = ceil(c log(1/ε) / (1 - γ)),
    /// δ_k = δ / (3N(T+1)), B = ceil(c log(1/δ_k) / ε), η_w = min(c sqrt(ε), 1/L_w).
    static Schedule constant(double eps, double delta, const ScheduleContext& ctx,
                             const AnalysisConstants& constants, const LeadingConstants& lead = {}) {
        check_eps_delta(eps, delta);
        Schedule s(Mode::constant, ctx, constants, lead);
        s.eps_ = eps;
        s.delta_ = delta;
        s.iterations_ = ceil_count(lead.iterations * std::pow(eps, -1.5));
        s.mixing_rounds_ = 1;
        s.fixed_ = fixed_params(s, lead.eta_w * std::sqrt(eps));
        return s;
    }

    /// Multi-round communication: T = ceil(c / ε), η_w = 1/L_w, and
    /// m = ceil(log(1/ε) / (1 - ρ)) gossip rounds per iteration.
    static Schedule multi_round(double eps, double delta, const ScheduleContext& ctx,
                                const AnalysisConstants& constants, const LeadingConstants& lead = {}) {
        check_eps_delta(eps, delta);
        Schedule s(Mode::multi_round, ctx, constants, lead);
        s.eps_ = eps;
        s.delta_ = delta;
        s.iterations_ = ceil_count(lead.iterations / eps);
        s.mixing_rounds_ = multi_round_count(ctx.rho, eps);
        s.fixed_ = fixed_params(s, ctx.l_w() > 0 ? 1.0 / ctx.l_w() : 1.0);
        return s;
    }

    /// Anytime schedule: δ_k = 2δ / (Nπ²(k+1)²), H_k = ceil(c log(k+2) / (1 - γ)),
    /// B_k = ceil(c log(1/δ_k) (k+1)^(2/3)), η_w^k = min((k+1)^(-1/3), 1/L_w),
    /// η_θ^k from η_w^(k+1).
    static Schedule adaptive(std::size_t iterations, double delta, const ScheduleContext& ctx,
                             const AnalysisConstants& constants, const LeadingConstants& lead = {},
                             std::size_t mixing_rounds = 1) {
        if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("schedule: delta must lie in (0, 1)");
        check_context(ctx, constants);
        Schedule s(Mode::adaptive, ctx, constants, lead);
        s.delta_ = delta;
        s.iterations_ = iterations;
        s.mixing_rounds_ = mixing_rounds;
        if (mixing_rounds == 0) throw ConfigError("schedule: mixing rounds must be >= 1");
        return s;
    }

    static Schedule manual(std::size_t iterations, const IterationParams& params, std::size_t mixing_rounds,
                           const ScheduleContext& ctx) {
        Schedule s(Mode::manual, ctx, {}, {});
        if (params.batch < 1 || params.horizon < 1) throw ConfigError("schedule: batch and horizon must be >= 1");
        if (!(params.eta_theta > 0.0) || !(params.eta_w > 0.0)) throw ConfigError("schedule: step sizes must be > 0");
        if (params.eta_w > 1.0 / ctx.l_w() * (1.0 + 1e-12))
            throw ConfigError("schedule: eta_w = " + std::to_string(params.eta_w) + " exceeds 1/L_w = " +
                              std::to_string(1.0 / ctx.l_w()));
        if (mixing_rounds == 0) throw ConfigError("schedule: mixing rounds must be >= 1");
        s.iterations_ = iterations;
        s.mixing_rounds_ = mixing_rounds;
        s.fixed_ = params;
        return s;
    }

    IterationParams at(std::size_t k) const {
        if (mode_ != Mode::adaptive) return fixed_;
        IterationParams p;
        p.delta = adaptive_delta(k);
        p.horizon = std::max<std::size_t>(
            1, ceil_count(lead_.adaptive_horizon * std::log(static_cast<double>(k) + 2.0) / (1.0 - ctx_.gamma)));
        p.batch = std::max<std::size_t>(
            1, ceil_count(lead_.batch * std::log(1.0 / p.delta) * std::pow(static_cast<double>(k) + 1.0, 2.0 / 3.0)));
        p.eta_w = adaptive_eta_w(k);
        p.eta_theta = actor_step_bound(ctx_, constants_, adaptive_eta_w(k + 1));
        return p;
    }

    double adaptive_delta(std::size_t k) const {
        const double kk = static_cast<double>(k) + 1.0;
        return 2.0 * delta_ / (static_cast<double>(ctx_.n_agents) * std::numbers::pi * std::numbers::pi * kk * kk);
    }

    double adaptive_eta_w(std::size_t k) const {
        return std::min(std::pow(static_cast<double>(k) + 1.0, -1.0 / 3.0), 1.0 / ctx_.l_w());
    }

    Mode mode() const noexcept { return mode_; }
    std::size_t iterations() const noexcept { return iterations_; }
    std::size_t mixing_rounds() const noexcept { return mixing_rounds_; }
    double delta() const noexcept { return delta_; }
    double eps() const noexcept { return eps_; }
    const ScheduleContext& context() const noexcept { return ctx_; }
    const AnalysisConstants& constants() const noexcept { return constants_; }

    void set_iterations(std::size_t t) { iterations_ = t; }
    void set_mixing_rounds(std::size_t m) {
        if (m == 0) throw ConfigError("schedule: mixing rounds must be >= 1");
        mixing_rounds_ = m;
    }

private:
    Schedule(Mode mode, const ScheduleContext& ctx, const AnalysisConstants& constants, const LeadingConstants& lead)
        : mode_(mode), ctx_(ctx), constants_(constants), lead_(lead) {}

    static void check_eps_delta(double eps, double delta) {
        if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("schedule: epsilon must lie in (0, 1)");
        if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("schedule: delta must lie in (0, 1)");
    }

    static void check_context(const ScheduleContext& ctx, const AnalysisConstants& c) {
        if (!(ctx.gamma > 0.0 && ctx.gamma < 1.0)) throw ConfigError("schedule: gamma must lie in (0, 1)");
        if (ctx.n_agents == 0) throw ConfigError("schedule: need at least one agent");
        if (!(c.mu_w > 0.0 && c.c_w > 0.0 && c.l_theta > 0.0))
            throw ConfigError("schedule: analysis constants must be positive");
    }

    static IterationParams fixed_params(const Schedule& s, double eta_w_raw) {
        check_context(s.ctx_, s.constants_);
        IterationParams p;
        p.delta = s.delta_ / (3.0 * static_cast<double>(s.ctx_.n_agents) * (static_cast<double>(s.iterations_) + 1.0));
        p.horizon = std::max<std::size_t>(
            1, ceil_count(s.lead_.horizon * std::log(1.0 / s.eps_) / (1.0 - s.ctx_.gamma)));
        p.batch = std::max<std::size_t>(1, ceil_count(s.lead_.batch * std::log(1.0 / p.delta) / s.eps_));
        p.eta_w = std::min(eta_w_raw, 1.0 / s.ctx_.l_w());
        p.eta_theta = actor_step_bound(s.ctx_, s.constants_, p.eta_w);
        return p;
    }

    Mode mode_;
    ScheduleContext ctx_;
    AnalysisConstants constants_;
    LeadingConstants lead_;
    IterationParams fixed_;
    std::size_t iterations_ = 0;
    std::size_t mixing_rounds_ = 1;
    double delta_ = 0.0;
    double eps_ = 0.0;
};

inline const char* schedule_mode_name(Schedule::Mode mode) {
    switch (mode) {
        case Schedule::Mode::constant: return "constant";
        case Schedule::Mode::adaptive: return "adaptive";
        case Schedule::Mode::manual: return "manual";
        case Schedule::Mode::multi_round: return "multi_round";
    }
    return "?";
}

} // namespace dsac
