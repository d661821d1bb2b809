#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsac/critic.hpp"
#include "dsac/envs.hpp"
#include "dsac/errors.hpp"
#include "dsac/graph.hpp"
#include "dsac/harness/config.hpp"
#include "dsac/oracle.hpp"
#include "dsac/schedule.hpp"
#include "dsac/trainer.hpp"
#include "dsac/utility.hpp"

namespace dsac::harness {

struct RunSettings {
    std::size_t iterations = 0;
    std::uint64_t seed = 0;
    std::size_t metrics_interval = 1;
    std::size_t checkpoint_interval = 0;  // 0: final checkpoint only
    std::string output_dir = "out";
    bool record_wall_time = false;
};

struct OracleSettings {
    std::size_t cap = oracle::kDefaultStateCap;
    double fd_step = 1e-5;
    std::size_t fd_coords = 64;  // logits probed by finite differences (all when fewer)
    double gradient_tol = 1e-4;
    std::size_t estimator_batch = 4000;
    double estimator_tol = 0.05;  // relative L2 error of the local occupancy estimate
    bool flip_shadow_sign = false;
};

/// Everything a run needs, built from a RunConfig. `resolved` is the input
/// with every default filled in.
struct Experiment {
    FactoredMdp mdp;
    std::vector<UtilitySpec> utilities;
    FeatureMap features;
    CommGraph graph;
    MixingMatrix mixing;
    Schedule schedule;
    RunSettings run;
    OracleSettings oracle;
    RunConfig resolved;

    DsacTrainer trainer() const {
        TrainerOptions opts;
        opts.record_wall_time = run.record_wall_time;
        return DsacTrainer(mdp, utilities, features, mixing, schedule, run.seed, opts);
    }
};

namespace detail {

/// Reads typed values and mirrors each one, default or not, into `out`.
class Resolver {
public:
    explicit Resolver(const RunConfig& in) : in_(in) {}

    std::string str(const std::string& sec, const std::string& key, const std::string& fallback) {
        const std::string v = in_.get(sec).get_string(key, fallback);
        record(sec, key, v);
        return v;
    }
    double num(const std::string& sec, const std::string& key, double fallback) {
        const double v = in_.get(sec).get_double(key, fallback);
        record(sec, key, format_double(v));
        return v;
    }
    std::size_t size(const std::string& sec, const std::string& key, std::size_t fallback) {
        const std::size_t v = in_.get(sec).get_size(key, fallback);
        record(sec, key, std::to_string(v));
        return v;
    }
    std::uint64_t u64(const std::string& sec, const std::string& key, std::uint64_t fallback) {
        const std::uint64_t v = in_.get(sec).get_u64(key, fallback);
        record(sec, key, std::to_string(v));
        return v;
    }
    bool flag(const std::string& sec, const std::string& key, bool fallback) {
        const bool v = in_.get(sec).get_bool(key, fallback);
        record(sec, key, v ? "true" : "false");
        return v;
    }
    bool has(const std::string& sec, const std::string& key) const { return in_.get(sec).has(key); }

    /// Marks a key as consumed without echoing it.
    void touch(const std::string& sec, const std::string& key) { seen_.insert({sec, key}); }
    void record(const std::string& sec, const std::string& key, const std::string& value) {
        seen_.insert({sec, key});
        out_.section(sec).set(key, value);
    }

    /// Rejects sections and keys nobody read, which catches typos.
    void check_unused() const {
        for (const auto& s : in_.sections())
            for (const auto& [k, v] : s.entries())
                if (!seen_.count({s.name(), k}))
                    throw ConfigError("unknown config key '" + k + "' in [" + s.name() + "]");
    }

    const RunConfig& input() const noexcept { return in_; }
    RunConfig& output() noexcept { return out_; }

private:
    const RunConfig& in_;
    RunConfig out_;
    std::set<std::pair<std::string, std::string>> seen_;
};

inline std::vector<envs::Cell> parse_cells(const std::string& text, const std::string& what) {
    std::vector<envs::Cell> cells;
    for (const auto& item : split_list(text, ';')) {
        const auto xy = split_list(item, ',');
        if (xy.size() != 2) throw ConfigError(what + ": cells are written 'x,y; x,y'");
        cells.push_back({static_cast<std::size_t>(parse_u64(xy[0], what)),
                         static_cast<std::size_t>(parse_u64(xy[1], what))});
    }
    return cells;
}

inline std::string format_cells(const std::vector<envs::Cell>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i)
        out += (i ? "; " : "") + std::to_string(cells[i].x) + "," + std::to_string(cells[i].y);
    return out;
}

inline std::vector<std::size_t> parse_sizes(const std::string& text, std::size_t n, const std::string& what) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text, ',')) out.push_back(static_cast<std::size_t>(parse_u64(item, what)));
    if (out.size() == 1 && n > 1) out.assign(n, out[0]);
    if (out.size() != n) throw ConfigError(what + ": need one value or one per agent");
    return out;
}

inline std::string format_sizes(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

struct EnvTables {
    std::optional<FactoredMdp> mdp;
    std::vector<Eigen::MatrixXd> reward;  // local, empty when the env has none
    std::vector<Eigen::MatrixXd> cost;
    double cost_threshold = 0.0;
};

inline EnvTables build_env(Resolver& r) {
    EnvTables t;
    const std::string kind = r.str("env", "kind", "explore_grid");
    const double gamma = r.num("env", "gamma", 0.9);
    const std::size_t n = r.size("env", "agents", 2);
    if (kind == "explore_grid") {
        envs::ExploreGridConfig c;
        c.width = r.size("env", "width", 10);
        c.height = r.size("env", "height", 10);
        c.n_agents = n;
        c.starts = parse_cells(r.str("env", "starts", ""), "[env] starts");
        if (c.starts.empty()) c.starts.assign(n, envs::Cell{0, 0});
        r.record("env", "starts", format_cells(c.starts));
        c.slip_prob = r.num("env", "slip", 0.0);
        c.discount = gamma;
        t.mdp = envs::build_explore_mdp(c);
    } else if (kind == "nav_grid") {
        envs::GridNavConfig c;
        c.width = r.size("env", "width", 5);
        c.height = r.size("env", "height", 5);
        c.n_agents = n;
        c.starts = parse_cells(r.str("env", "starts", ""), "[env] starts");
        c.goals = parse_cells(r.str("env", "goals", ""), "[env] goals");
        const auto unsafe = parse_cells(r.str("env", "unsafe", ""), "[env] unsafe");
        c.unsafe_cells.insert(unsafe.begin(), unsafe.end());
        c.collision_penalty = r.num("env", "collision_penalty", -1.0);
        c.distance_reward_scale = r.num("env", "distance_scale", 1.0);
        c.cost_value = r.num("env", "cost_value", 1.0);
        c.cost_threshold = r.num("env", "cost_threshold", 0.001);
        c.slip_prob = r.num("env", "slip", 0.0);
        c.absorbing_goals = r.flag("env", "absorbing_goals", true);
        c.discount = gamma;
        auto nav = envs::build_nav_mdp(c);
        t.mdp = std::move(nav.mdp);
        t.reward = std::move(nav.reward);
        t.cost = std::move(nav.cost);
        t.cost_threshold = c.cost_threshold;
    } else if (kind == "random") {
        const auto states = parse_sizes(r.str("env", "local_states", "3"), n, "[env] local_states");
        const auto actions = parse_sizes(r.str("env", "local_actions", "2"), n, "[env] local_actions");
        r.record("env", "local_states", format_sizes(states));
        r.record("env", "local_actions", format_sizes(actions));
        const std::uint64_t env_seed = r.u64("env", "env_seed", 1);
        t.mdp = envs::random_mdp(states, actions, gamma, RngStream::derive(env_seed, 0));
        for (std::size_t i = 0; i < n; ++i)
            t.reward.push_back(envs::random_table(states[i], actions[i], RngStream::derive(env_seed, 1, i)));
    } else {
        throw ConfigError("[env] kind: unknown environment '" + kind + "' (explore_grid, nav_grid, random)");
    }
    return t;
}

inline Support parse_support(const std::string& text, const std::string& what) {
    if (text == "state") return Support::state;
    if (text == "state_action") return Support::state_action;
    throw ConfigError(what + ": support must be state or state_action");
}

inline UtilitySpec build_utility(Resolver& r, const FactoredMdp& mdp, const EnvTables& env, std::size_t i,
                                 std::uint64_t seed) {
    const std::string own = "utility." + std::to_string(i);
    const std::size_t Si = mdp.local_states(i), Ai = mdp.local_actions(i);
    // agent section overrides the shared [utility] section
    auto pick = [&](const std::string& key, const std::string& fallback) {
        r.touch("utility", key);
        const std::string shared = r.input().get("utility").get_string(key, fallback);
        return r.str(own, key, shared);
    };
    auto pick_num = [&](const std::string& key, double fallback) {
        return parse_double(pick(key, format_double(fallback)), "[" + own + "] " + key);
    };
    auto table = [&](const std::string& key, const std::vector<Eigen::MatrixXd>& from, std::uint64_t salt) {
        const std::string src = pick(key, from.empty() ? "random" : "env");
        if (src == "env") {
            if (from.empty()) throw ConfigError("[" + own + "] " + key + " = env: the environment has no such table");
            return from[i];
        }
        if (src == "random") return envs::random_table(Si, Ai, RngStream::derive(seed, salt, i));
        if (src == "zero") return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(Si), static_cast<Eigen::Index>(Ai)).eval();
        throw ConfigError("[" + own + "] " + key + ": expected env, random, or zero");
    };

    const std::string variant = pick("variant", "entropy");
    if (variant == "linear") return utility::Linear{table("reward", env.reward, 11)};
    if (variant == "entropy") {
        utility::Entropy e;
        e.support = parse_support(pick("support", "state"), "[" + own + "] support");
        e.smoothing = pick_num("smoothing", 1e-8);
        e.normalized = parse_bool(pick("normalized", "false"), "[" + own + "] normalized");
        return e;
    }
    if (variant == "kl_prior") {
        utility::KLPrior k;
        k.support = parse_support(pick("support", "state"), "[" + own + "] support");
        k.smoothing = pick_num("smoothing", 1e-8);
        k.discount = mdp.discount();
        const auto cols = static_cast<Eigen::Index>(k.support == Support::state ? 1 : Ai);
        const std::string prior = pick("prior", "uniform");
        if (prior == "uniform") {
            k.prior = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(Si), cols,
                                                1.0 / static_cast<double>(Si * static_cast<std::size_t>(cols)));
        } else if (prior == "random") {
            Eigen::MatrixXd p = envs::random_table(Si, static_cast<std::size_t>(cols), RngStream::derive(seed, 13, i));
            p = (p.array() + 1.5).matrix();
            k.prior = p / p.sum();
        } else {
            throw ConfigError("[" + own + "] prior: expected uniform or random");
        }
        return k;
    }
    if (variant == "quad_penalty") {
        utility::QuadPenalty q;
        q.reward = table("reward", env.reward, 11);
        q.cost = table("cost", env.cost, 12);
        q.threshold = pick_num("threshold", env.cost_threshold);
        q.penalty = pick_num("penalty", 0.0);
        return q;
    }
    throw ConfigError("[" + own + "] variant: unknown utility '" + variant +
                      "' (linear, entropy, kl_prior, quad_penalty)");
}

inline TopologySpec parse_topology(Resolver& r) {
    TopologySpec spec;
    const std::string kind = r.str("topology", "kind", "complete");
    if (kind == "complete") spec.kind = TopologySpec::Kind::complete;
    else if (kind == "ring") spec.kind = TopologySpec::Kind::ring;
    else if (kind == "erdos_renyi" || kind == "random") spec.kind = TopologySpec::Kind::erdos_renyi;
    else if (kind == "watts_strogatz") spec.kind = TopologySpec::Kind::watts_strogatz;
    else throw ConfigError("[topology] kind: unknown topology '" + kind + "'");
    // "random": Erdos-Renyi with p drawn uniformly per attempt (p < 0)
    if (spec.kind == TopologySpec::Kind::erdos_renyi)
        spec.p = r.num("topology", "p", kind == "random" ? -1.0 : 0.5);
    if (spec.kind == TopologySpec::Kind::watts_strogatz) spec.p = r.num("topology", "p", 0.2);
    if (spec.kind == TopologySpec::Kind::watts_strogatz) spec.k = r.size("topology", "k", 2);
    return spec;
}

} // namespace detail

inline Experiment build_experiment(const RunConfig& cfg) {
    detail::Resolver r(cfg);

    RunSettings run;
    run.seed = r.u64("run", "seed", 1);
    run.metrics_interval = r.size("run", "metrics_interval", 1);
    run.checkpoint_interval = r.size("run", "checkpoint_interval", 0);
    run.output_dir = r.str("run", "output_dir", "out");
    run.record_wall_time = r.flag("run", "record_wall_time", false);
    if (run.metrics_interval == 0) throw ConfigError("[run] metrics_interval must be >= 1");

    OracleSettings oracle;
    oracle.cap = r.size("oracle", "cap", oracle::kDefaultStateCap);
    oracle.fd_step = r.num("oracle", "fd_step", oracle.fd_step);
    oracle.fd_coords = r.size("oracle", "fd_coords", oracle.fd_coords);
    oracle.gradient_tol = r.num("oracle", "gradient_tol", oracle.gradient_tol);
    oracle.estimator_batch = r.size("oracle", "estimator_batch", oracle.estimator_batch);
    oracle.estimator_tol = r.num("oracle", "estimator_tol", oracle.estimator_tol);
    oracle.flip_shadow_sign = r.flag("oracle", "flip_shadow_sign", false);

    detail::EnvTables env = detail::build_env(r);
    FactoredMdp mdp = std::move(*env.mdp);
    const std::size_t n = mdp.n_agents();

    std::vector<UtilitySpec> utilities;
    const std::uint64_t utility_seed = r.u64("utility", "seed", 7);
    for (std::size_t i = 0; i < n; ++i) utilities.push_back(detail::build_utility(r, mdp, env, i, utility_seed));
    for (const auto& s : cfg.sections()) {
        if (s.name().rfind("utility.", 0) != 0) continue;
        const std::string idx = s.name().substr(8);
        if (parse_u64(idx, "[" + s.name() + "]") >= n)
            throw ConfigError("[" + s.name() + "]: agent index out of range for N = " + std::to_string(n));
    }

    if (r.has("topology", "agents") && r.size("topology", "agents", n) != n)
        throw ConfigError("[topology] agents disagrees with [env] agents = " + std::to_string(n));
    const TopologySpec topo = detail::parse_topology(r);
    const std::uint64_t topo_seed = r.u64("topology", "seed", run.seed);
    CommGraph graph = build_topology(topo, n, RngStream::derive(topo_seed, 0x746f706fULL));
    MixingMatrix mixing = metropolis_weights(graph);

    const std::string feat = r.str("critic", "features", "one_hot");
    FeatureMap features = FeatureMap::one_hot(mdp.num_states(), mdp.num_actions());
    if (feat == "random_projection") {
        const std::size_t dim = r.size("critic", "dim", 32);
        features = FeatureMap::random_projection(mdp.num_states(), mdp.num_actions(), dim,
                                                 RngStream::derive(r.u64("critic", "seed", run.seed), 0x66656174ULL));
    } else if (feat != "one_hot") {
        throw ConfigError("[critic] features: expected one_hot or random_projection");
    }

    ScheduleContext ctx;
    ctx.gamma = mdp.discount();
    ctx.n_agents = n;
    ctx.c_phi = features.bound();
    ctx.rho = mixing.rho;

    const std::string mode = r.str("schedule", "mode", "manual");
    AnalysisConstants constants;
    LeadingConstants lead;
    if (mode != "manual") {
        const std::string mu = r.str("schedule", "mu_w", "auto");
        if (mu == "auto") {
            // smallest positive eigenvalue of the critic Hessian at the uniform policy
            constants.mu_w = 1.0;
            if (mdp.num_states() <= oracle.cap) {
                const auto lambda = oracle::exact_occupancy(mdp, JointPolicy::uniform(mdp), oracle.cap);
                const double v = critic_hessian_min_eigenvalue(lambda.mass, features, true);
                if (v > 0.0) constants.mu_w = v;
            }
            r.record("schedule", "mu_w", format_double(constants.mu_w));
        } else {
            constants.mu_w = parse_double(mu, "[schedule] mu_w");
            r.record("schedule", "mu_w", format_double(constants.mu_w));
        }
        constants.c_w = r.num("schedule", "c_w", 1.0);
        constants.l_theta = r.num("schedule", "l_theta", 1.0);
        lead.iterations = r.num("schedule", "lead_iterations", 1.0);
        lead.horizon = r.num("schedule", "lead_horizon", 1.0);
        lead.batch = r.num("schedule", "lead_batch", 1.0);
        lead.eta_w = r.num("schedule", "lead_eta_w", 1.0);
        lead.adaptive_horizon = r.num("schedule", "lead_adaptive_horizon", 2.0);
    }

    // rounds: a number, or "auto" for ceil(log(1/eps) / (1 - rho))
    auto rounds = [&](std::size_t fallback) -> std::size_t {
        const std::string m = r.str("topology", "rounds", std::to_string(fallback));
        if (m == "auto") {
            const double eps = r.num("topology", "rounds_eps", 1e-6);
            const std::size_t v = multi_round_count(mixing.rho, eps);
            r.record("topology", "rounds", std::to_string(v));
            return v;
        }
        if (r.has("topology", "rounds_eps")) r.num("topology", "rounds_eps", 1e-6);
        return static_cast<std::size_t>(parse_u64(m, "[topology] rounds"));
    };

    std::optional<Schedule> schedule;
    if (mode == "manual") {
        IterationParams p;
        p.batch = r.size("schedule", "batch", 16);
        p.horizon = r.size("schedule", "horizon", 20);
        p.eta_theta = r.num("schedule", "eta_theta", 0.1);
        p.eta_w = r.num("schedule", "eta_w", 1.0 / ctx.l_w());
        schedule = Schedule::manual(r.size("run", "iterations", 100), p, rounds(1), ctx);
    } else if (mode == "constant" || mode == "multi_round") {
        const double eps = r.num("schedule", "eps", 0.1);
        const double delta = r.num("schedule", "delta", 0.1);
        schedule = mode == "constant" ? Schedule::constant(eps, delta, ctx, constants, lead)
                                      : Schedule::multi_round(eps, delta, ctx, constants, lead);
        if (r.has("run", "iterations")) schedule->set_iterations(r.size("run", "iterations", 0));
        else r.record("run", "iterations", std::to_string(schedule->iterations()));
        if (mode == "constant" || r.has("topology", "rounds")) schedule->set_mixing_rounds(rounds(schedule->mixing_rounds()));
        else r.record("topology", "rounds", std::to_string(schedule->mixing_rounds()));
    } else if (mode == "adaptive") {
        const double delta = r.num("schedule", "delta", 0.1);
        const std::size_t T = r.size("run", "iterations", 100);
        schedule = Schedule::adaptive(T, delta, ctx, constants, lead, 1);
        schedule->set_mixing_rounds(rounds(1));
    } else {
        throw ConfigError("[schedule] mode: expected manual, constant, adaptive, or multi_round");
    }
    run.iterations = schedule->iterations();

    r.check_unused();
    return Experiment{std::move(mdp), std::move(utilities), std::move(features), std::move(graph),
                      std::move(mixing), std::move(*schedule), run, oracle, std::move(r.output())};
}

} // namespace dsac::harness
