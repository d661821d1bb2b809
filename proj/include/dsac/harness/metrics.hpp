#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "dsac/errors.hpp"
#include "dsac/harness/config.hpp"
#include "dsac/trainer.hpp"

namespace dsac::harness {

/// Column names in file order for N agents.
inline std::vector<std::string> metrics_columns(std::size_t n_agents) {
    std::vector<std::string> cols{"k", "global_utility"};
    for (std::size_t i = 0; i < n_agents; ++i) cols.push_back("utility_agent_" + std::to_string(i));
    cols.push_back("consensus_error");
    cols.push_back("grad_norm_sq");
    for (std::size_t i = 0; i < n_agents; ++i) cols.push_back("constraint_gap_agent_" + std::to_string(i));
    for (std::size_t i = 0; i < n_agents; ++i) cols.push_back("entropy_agent_" + std::to_string(i));
    for (const char* c : {"eta_theta", "eta_w", "B", "H", "wall_ms"}) cols.emplace_back(c);
    return cols;
}

inline std::string metrics_header(std::size_t n_agents) {
    std::string out;
    for (const auto& c : metrics_columns(n_agents)) out += (out.empty() ? "" : ",") + c;
    return out;
}

inline std::string metrics_row(const IterationMetrics& m, std::size_t n_agents) {
    if (m.utility.size() != n_agents || m.constraint_gap.size() != n_agents || m.entropy.size() != n_agents)
        throw ShapeError("metrics_row: per-agent columns do not match N = " + std::to_string(n_agents));
    std::string out = std::to_string(m.k);
    auto put = [&out](double v) { out += ','; out += format_double(v); };
    put(m.global_utility);
    for (double v : m.utility) put(v);
    put(m.consensus_error);
    put(m.grad_norm_sq);
    for (double v : m.constraint_gap) put(v);
    for (double v : m.entropy) put(v);
    put(m.eta_theta);
    put(m.eta_w);
    out += ',' + std::to_string(m.batch);
    out += ',' + std::to_string(m.horizon);
    put(m.wall_ms);
    return out;
}

/// Streams the header once, then every row whose k is a multiple of `interval`.
class MetricsWriter {
public:
    MetricsWriter(std::ostream& out, std::size_t n_agents, std::size_t interval = 1)
        : out_(out), n_(n_agents), interval_(interval ? interval : 1) {
        out_ << metrics_header(n_) << '\n';
    }

    void write(const IterationMetrics& m) {
        if (m.k % interval_ == 0) out_ << metrics_row(m, n_) << '\n';
    }

private:
    std::ostream& out_;
    std::size_t n_;
    std::size_t interval_;
};

} // namespace dsac::harness
