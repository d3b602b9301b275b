#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scal/agents.hpp"
#include "scal/environments.hpp"

namespace scal {

/// Named environment with numeric parameters, or an MDP file.
struct EnvSpec {
    std::string name;
    std::map<std::string, double> params;
    std::string path;  // for name == "file"
};

EnvInstance make_env(const EnvSpec& spec);

struct RunConfig {
    EnvSpec env;
    AgentConfig agent;
    std::uint64_t horizon = 0;
    std::vector<std::int64_t> seeds;
    std::uint64_t record_every = 1000;
    std::string output;
    std::size_t workers = 0;  // 0 means hardware concurrency

    void validate() const;
};

struct TraceRow {
    std::uint64_t t = 0;
    std::int64_t seed = 0;
    double cum_reward = 0.0;
    double regret = 0.0;
    double episode = 0.0;
    double value_span = 0.0;
    double gain_est = 0.0;

    bool operator==(const TraceRow&) const = default;
};

struct RegretTrace {
    std::int64_t seed = 0;
    std::vector<TraceRow> rows;
    std::size_t episodes = 0;
    std::string error;  // empty unless the run aborted
};

/// One seeded run of the agent on env for `horizon` steps against gain g*.
RegretTrace run_single(const EnvInstance& env, const AgentConfig& agent, std::uint64_t horizon,
                       std::int64_t seed, std::uint64_t record_every, double optimal_gain);

/// All seeds of a config, dispatched over worker threads, in seed order.
std::vector<RegretTrace> run_learning(const RunConfig& config);

struct AggregateRow {
    std::uint64_t t = 0;
    std::size_t runs = 0;
    TraceRow mean;                     // seed = -1
    std::optional<TraceRow> half_width;  // 1.96 s / sqrt(n), seed = -2; empty for one run
};

/// Pointwise mean and normal-approximation 95% half-widths over the steps
/// recorded by every successful trace.
std::vector<AggregateRow> aggregate(const std::vector<RegretTrace>& traces);

inline const char* kCsvHeader = "t,seed,cum_reward,regret,episode,value_span,gain_est";

void write_csv(std::ostream& out, const std::vector<RegretTrace>& traces,
               const std::vector<AggregateRow>& aggregates);
std::vector<TraceRow> read_csv(std::istream& in);

/// Seeds of one run: agent and environment draw from separate streams.
std::mt19937_64 make_stream(std::int64_t seed, std::uint32_t stream);

}  // namespace scal
