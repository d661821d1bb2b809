#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <ios>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dsac/errors.hpp"
#include "dsac/trainer.hpp"

// Checkpoint layout (text, one token group per line, floats in hexfloat so
// the round trip is exact):
//
//   DSAC-CHECKPOINT
//   version 1
//   seed <u64>
//   iteration <k>
//   agents <N>
//   states <S>
//   actions <A_0> ... <A_{N-1}>
//   critic_dim <d>
//   logits <i>            then S lines of A_i values, for each agent i
//   critics               then d lines of N values
//   end

namespace dsac {

inline constexpr const char* kCheckpointMagic = "DSAC-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& out, const TrainerState& state) {
    out << kCheckpointMagic << '\n' << "version " << kCheckpointVersion << '\n';
    out << "seed " << state.seed << '\n' << "iteration " << state.iteration << '\n';
    out << "agents " << state.policy.n_agents() << '\n';
    const std::size_t S = state.policy.n_agents() ? state.policy.per_agent[0].num_states() : 0;
    out << "states " << S << '\n' << "actions";
    for (const auto& p : state.policy.per_agent) out << ' ' << p.num_actions();
    out << '\n' << "critic_dim " << state.critics.rows() << '\n';
    out << std::hexfloat;
    for (const auto& p : state.policy.per_agent) {
        out << "logits " << p.agent << '\n';
        for (Eigen::Index s = 0; s < p.logits.rows(); ++s) {
            for (Eigen::Index b = 0; b < p.logits.cols(); ++b) out << (b ? " " : "") << p.logits(s, b);
            out << '\n';
        }
    }
    out << "critics\n";
    for (Eigen::Index r = 0; r < state.critics.rows(); ++r) {
        for (Eigen::Index c = 0; c < state.critics.cols(); ++c) out << (c ? " " : "") << state.critics(r, c);
        out << '\n';
    }
    out << std::defaultfloat << "end\n";
}

namespace detail {

inline void expect_word(std::istream& in, const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) throw CheckpointError("checkpoint: expected '" + word + "', got '" + got + "'");
}

template <class T>
T read_value(std::istream& in, const char* what) {
    T v{};
    if (!(in >> v)) throw CheckpointError(std::string("checkpoint: cannot read ") + what);
    return v;
}

inline double read_double(std::istream& in) {
    std::string token;
    if (!(in >> token)) throw CheckpointError("checkpoint: truncated numeric data");
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw CheckpointError("checkpoint: bad number '" + token + "'");
    return v;
}

} // namespace detail

inline TrainerState read_checkpoint(std::istream& in) {
    using detail::expect_word;
    using detail::read_value;
    expect_word(in, kCheckpointMagic);
    expect_word(in, "version");
    const int version = read_value<int>(in, "version");
    if (version != kCheckpointVersion)
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
    TrainerState state;
    expect_word(in, "seed");
    state.seed = read_value<std::uint64_t>(in, "seed");
    expect_word(in, "iteration");
    state.iteration = read_value<std::size_t>(in, "iteration");
    expect_word(in, "agents");
    const auto n = read_value<std::size_t>(in, "agents");
    expect_word(in, "states");
    const auto S = read_value<std::size_t>(in, "states");
    expect_word(in, "actions");
    std::vector<std::size_t> actions(n);
    for (auto& a : actions) a = read_value<std::size_t>(in, "actions");
    expect_word(in, "critic_dim");
    const auto d = read_value<std::size_t>(in, "critic_dim");
    for (std::size_t i = 0; i < n; ++i) {
        expect_word(in, "logits");
        const auto agent = read_value<std::size_t>(in, "agent");
        if (agent != i) throw CheckpointError("checkpoint: agents out of order");
        RowMatrix logits(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(actions[i]));
        for (Eigen::Index s = 0; s < logits.rows(); ++s)
            for (Eigen::Index b = 0; b < logits.cols(); ++b) logits(s, b) = detail::read_double(in);
        state.policy.per_agent.push_back({i, std::move(logits)});
    }
    expect_word(in, "critics");
    state.critics.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < state.critics.rows(); ++r)
        for (Eigen::Index c = 0; c < state.critics.cols(); ++c) state.critics(r, c) = detail::read_double(in);
    expect_word(in, "end");
    return state;
}

inline void save_checkpoint(const std::string& path, const TrainerState& state) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("checkpoint: cannot open '" + path + "' for writing");
    write_checkpoint(out, state);
}

inline TrainerState load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("checkpoint: cannot open '" + path + "'");
    return read_checkpoint(in);
}

} // namespace dsac
