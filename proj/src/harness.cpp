#include "scal/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "scal/json_io.hpp"

namespace scal {

namespace {

double param(const EnvSpec& spec, const std::string& key, double fallback) {
    const auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

void write_row(std::ostream& out, const TraceRow& r) {
    out << r.t << ',' << r.seed << ',' << format_number(r.cum_reward) << ',' << format_number(r.regret) << ','
        << format_number(r.episode) << ',' << format_number(r.value_span) << ',' << format_number(r.gain_est)
        << '\n';
}

}  // namespace

EnvInstance make_env(const EnvSpec& spec) {
    if (spec.name == "two_state") return make_two_state();
    if (spec.name == "three_state") return make_three_state(param(spec, "delta", 0.005));
    if (spec.name == "knight_quest") return make_knight_quest();
    if (spec.name == "counterexample_b1") return make_counterexample(Counterexample::Infeasible);
    if (spec.name == "counterexample_b2")
        return make_counterexample(Counterexample::Chain, {param(spec, "alpha", 0.3), param(spec, "beta", 0.1),
                                                           param(spec, "delta", 0.2)});
    if (spec.name == "counterexample_b3")
        return make_counterexample(Counterexample::NoisyCycle, {param(spec, "delta", 0.5)});
    if (spec.name == "random") {
        std::mt19937_64 rng(static_cast<std::uint64_t>(param(spec, "seed", 0)));
        const auto states = static_cast<std::size_t>(param(spec, "states", 5));
        const auto actions = static_cast<std::size_t>(param(spec, "actions", 2));
        const auto branching = static_cast<std::size_t>(param(spec, "branching", static_cast<double>(states)));
        return {"random", random_mdp(states, actions, branching, rng)};
    }
    if (spec.name == "file") return {spec.path, mdp_from_json(load_json_file(spec.path))};
    throw InvalidArgument("unknown environment '" + spec.name + "'");
}

void RunConfig::validate() const {
    if (seeds.empty()) throw InvalidArgument("run config: seeds must be non-empty");
    if (record_every < 1) throw InvalidArgument("run config: record_every must be at least 1");
}

std::mt19937_64 make_stream(std::int64_t seed, std::uint32_t stream) {
    const auto u = static_cast<std::uint64_t>(seed);
    std::seed_seq seq{static_cast<std::uint32_t>(u & 0xffffffffu), static_cast<std::uint32_t>(u >> 32), stream};
    return std::mt19937_64(seq);
}

RegretTrace run_single(const EnvInstance& env, const AgentConfig& agent, std::uint64_t horizon,
                       std::int64_t seed, std::uint64_t record_every, double optimal_gain) {
    RegretTrace trace;
    trace.seed = seed;
    if (record_every < 1) throw InvalidArgument("run: record_every must be at least 1");
    std::mt19937_64 env_rng = make_stream(seed, 0);
    std::mt19937_64 agent_rng = make_stream(seed, 1);

    std::vector<std::size_t> shape(env.mdp.num_states());
    for (StateId s = 0; s < shape.size(); ++s) shape[s] = env.mdp.num_actions(s);
    AgentConfig cfg = agent;
    cfg.seed = static_cast<std::uint64_t>(seed);
    Agent learner(std::move(shape), cfg);

    StateId s = env.initial_state;
    double cum_reward = 0.0;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        try {
            const ActionId a = learner.act(s, agent_rng);
            const Transition step = sample(env.mdp, s, a, env_rng);
            cum_reward += step.reward;
            learner.observe(s, a, step.reward, step.next, agent_rng);
            s = step.next;
        } catch (const std::exception& e) {
            trace.error = e.what();
            const double nan = std::nan("");
            trace.rows.push_back({t, seed, cum_reward, static_cast<double>(t - 1) * optimal_gain - cum_reward,
                                  static_cast<double>(learner.episodes()), nan, nan});
            break;
        }
        if (t % record_every == 0) {
            const auto& diag = learner.episode().diagnostics;
            trace.rows.push_back({t, seed, cum_reward, static_cast<double>(t) * optimal_gain - cum_reward,
                                  static_cast<double>(learner.episodes()), diag.value_span, diag.gain_estimate});
        }
    }
    trace.episodes = learner.episodes();
    return trace;
}

std::vector<RegretTrace> run_learning(const RunConfig& config) {
    config.validate();
    const EnvInstance env = make_env(config.env);
    config.agent.validate(env.mdp.num_states());
    OptimalityOptions opt;
    opt.eps = 1e-8;
    const double g_star = optimal_gain_bias(env.mdp, opt).scalar_gain();

    std::vector<RegretTrace> traces(config.seeds.size());
    std::size_t workers = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, config.seeds.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < config.seeds.size(); i = next++)
            traces[i] = run_single(env, config.agent, config.horizon, config.seeds[i], config.record_every, g_star);
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return traces;
}

std::vector<AggregateRow> aggregate(const std::vector<RegretTrace>& traces) {
    std::vector<const RegretTrace*> ok;
    for (const auto& tr : traces)
        if (tr.error.empty()) ok.push_back(&tr);
    std::vector<AggregateRow> out;
    if (ok.empty()) return out;
    std::size_t len = ok.front()->rows.size();
    for (const auto* tr : ok) len = std::min(len, tr->rows.size());
    const double n = static_cast<double>(ok.size());
    auto fields = [](const TraceRow& r) {
        return std::array<double, 5>{r.cum_reward, r.regret, r.episode, r.value_span, r.gain_est};
    };
    for (std::size_t i = 0; i < len; ++i) {
        const std::uint64_t t = ok.front()->rows[i].t;
        std::array<double, 5> sum{}, sq{};
        for (const auto* tr : ok) {
            if (tr->rows[i].t != t) throw InvalidArgument("aggregate: traces recorded at different steps");
            const auto f = fields(tr->rows[i]);
            for (std::size_t k = 0; k < 5; ++k) sum[k] += f[k];
        }
        std::array<double, 5> mean{};
        for (std::size_t k = 0; k < 5; ++k) mean[k] = sum[k] / n;
        for (const auto* tr : ok) {
            const auto f = fields(tr->rows[i]);
            for (std::size_t k = 0; k < 5; ++k) sq[k] += (f[k] - mean[k]) * (f[k] - mean[k]);
        }
        AggregateRow row;
        row.t = t;
        row.runs = ok.size();
        row.mean = {t, -1, mean[0], mean[1], mean[2], mean[3], mean[4]};
        if (ok.size() >= 2) {
            std::array<double, 5> hw{};
            for (std::size_t k = 0; k < 5; ++k) hw[k] = 1.96 * std::sqrt(sq[k] / (n - 1.0)) / std::sqrt(n);
            row.half_width = TraceRow{t, -2, hw[0], hw[1], hw[2], hw[3], hw[4]};
        }
        out.push_back(row);
    }
    return out;
}

void write_csv(std::ostream& out, const std::vector<RegretTrace>& traces,
               const std::vector<AggregateRow>& aggregates) {
    out << kCsvHeader << '\n';
    for (const auto& tr : traces)
        for (const auto& r : tr.rows) write_row(out, r);
    for (const auto& a : aggregates) {
        write_row(out, a.mean);
        if (a.half_width) write_row(out, *a.half_width);
    }
}

std::vector<TraceRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw InvalidArgument("read_csv: missing or wrong header");
    std::vector<TraceRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw InvalidArgument("read_csv: line " + std::to_string(lineno) + " needs 7 fields");
        try {
            rows.push_back({std::stoull(cells[0]), std::stoll(cells[1]), std::stod(cells[2]), std::stod(cells[3]),
                            std::stod(cells[4]), std::stod(cells[5]), std::stod(cells[6])});
        } catch (const std::logic_error&) {
            throw InvalidArgument("read_csv: bad number on line " + std::to_string(lineno));
        }
    }
    return rows;
}

}  // namespace scal
