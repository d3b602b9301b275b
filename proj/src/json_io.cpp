#include "scal/json_io.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <type_traits>

namespace scal {

namespace {

template <class T>
T get(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(path + key, "missing field");
    if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
        const auto& x = j.at(key);
        if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0))
            throw ConfigError(path + key, "expected a nonnegative integer");
    }
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(path + key, e.what());
    }
}

template <class T>
T get_or(const Json& j, const std::string& key, const std::string& path, T fallback) {
    return j.is_object() && j.contains(key) ? get<T>(j, key, path) : fallback;
}

double number_or_inf(const Json& j, const std::string& key, const std::string& path, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& x = j.at(key);
    if (x.is_string() && (x == "inf" || x == "infinity")) return kInfinity;
    return get<double>(j, key, path);
}

ScheduleMode schedule(const Json& j, const std::string& key, const std::string& path) {
    const auto s = get_or<std::string>(j, key, path, "theoretical");
    if (s == "theoretical") return ScheduleMode::Theoretical;
    if (s == "zero") return ScheduleMode::Zero;
    throw ConfigError(path + key, "expected 'theoretical' or 'zero'");
}

}  // namespace

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open file");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path, e.what());
    }
}

FiniteMdp mdp_from_json(const Json& j) {
    const auto n = get<std::size_t>(j, "num_states", "");
    const auto r_max = get<double>(j, "r_max", "");
    if (!j.contains("actions") || !j["actions"].is_array()) throw ConfigError("actions", "missing array");
    const auto& states = j["actions"];
    if (states.size() != n) throw ConfigError("actions", "expected one entry per state");
    std::vector<std::vector<ActionSpec>> acts(n);
    for (StateId s = 0; s < n; ++s) {
        const std::string where = "actions[" + std::to_string(s) + "]";
        if (!states[s].is_array()) throw ConfigError(where, "expected array of actions");
        for (std::size_t a = 0; a < states[s].size(); ++a) {
            const std::string prefix = where + "[" + std::to_string(a) + "].";
            const auto& x = states[s][a];
            ActionSpec spec;
            spec.reward_mean = get<double>(x, "reward_mean", prefix);
            const auto dist = get_or<std::string>(x, "reward_dist", prefix, "deterministic");
            if (dist == "deterministic")
                spec.reward_kind = RewardKind::Deterministic;
            else if (dist == "bernoulli")
                spec.reward_kind = RewardKind::Bernoulli;
            else
                throw ConfigError(prefix + "reward_dist", "expected 'deterministic' or 'bernoulli'");
            spec.trans = get<Vector>(x, "trans", prefix);
            acts[s].push_back(std::move(spec));
        }
    }
    try {
        return FiniteMdp(std::move(acts), r_max);
    } catch (const InvalidArgument& e) {
        throw ConfigError("actions", e.what());
    }
}

Json mdp_to_json(const FiniteMdp& mdp) {
    Json states = Json::array();
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        Json acts = Json::array();
        for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
            const auto& x = mdp.action(s, a);
            acts.push_back({{"reward_mean", x.reward_mean},
                            {"reward_dist", x.reward_kind == RewardKind::Bernoulli ? "bernoulli" : "deterministic"},
                            {"trans", x.trans}});
        }
        states.push_back(std::move(acts));
    }
    return {{"num_states", mdp.num_states()}, {"r_max", mdp.r_max()}, {"actions", std::move(states)}};
}

DecisionRule rule_from_json(const Json& j, const FiniteMdp& mdp) {
    DecisionRule d;
    try {
        if (j.contains("actions")) {
            d = DecisionRule::deterministic(mdp, get<std::vector<ActionId>>(j, "actions", ""));
        } else {
            d = DecisionRule(get<std::vector<Vector>>(j, "probs", ""));
            d.validate(mdp);
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(j.contains("actions") ? "actions" : "probs", e.what());
    }
    return d;
}

Json rule_to_json(const DecisionRule& d) { return {{"probs", d.probs}}; }

Json bmdp_to_json(const BoundedParamMdp& bmdp) {
    Json states = Json::array();
    for (StateId s = 0; s < bmdp.num_states(); ++s) {
        Json acts = Json::array();
        for (ActionId a = 0; a < bmdp.num_actions(s); ++a) {
            const auto& x = bmdp.action(s, a);
            acts.push_back({{"reward", {x.r_lo, x.r_hi}}, {"trans_lo", x.p_lo}, {"trans_hi", x.p_hi}});
        }
        states.push_back(std::move(acts));
    }
    return {{"num_states", bmdp.num_states()}, {"r_max", bmdp.r_max()}, {"actions", std::move(states)}};
}

BoundedParamMdp bmdp_from_json(const Json& j) {
    const auto n = get<std::size_t>(j, "num_states", "");
    const auto r_max = get<double>(j, "r_max", "");
    if (!j.contains("actions") || !j["actions"].is_array() || j["actions"].size() != n)
        throw ConfigError("actions", "expected one entry per state");
    std::vector<std::vector<IntervalAction>> acts(n);
    for (StateId s = 0; s < n; ++s)
        for (std::size_t a = 0; a < j["actions"][s].size(); ++a) {
            const std::string prefix = "actions[" + std::to_string(s) + "][" + std::to_string(a) + "].";
            const auto& x = j["actions"][s][a];
            const auto r = get<std::array<double, 2>>(x, "reward", prefix);
            acts[s].push_back({r[0], r[1], get<Vector>(x, "trans_lo", prefix), get<Vector>(x, "trans_hi", prefix)});
        }
    try {
        return BoundedParamMdp(std::move(acts), r_max);
    } catch (const InvalidArgument& e) {
        throw ConfigError("actions", e.what());
    }
}

AgentConfig agent_config_from_json(const Json& j) {
    const std::string p = "agent.";
    AgentConfig cfg;
    const auto mode = get_or<std::string>(j, "mode", p, "ucrl");
    if (mode == "ucrl")
        cfg.mode = AgentMode::Ucrl;
    else if (mode == "scal")
        cfg.mode = AgentMode::Scal;
    else if (mode == "scal_best_of_both")
        cfg.mode = AgentMode::ScalBestOfBoth;
    else
        throw ConfigError(p + "mode", "expected 'ucrl', 'scal' or 'scal_best_of_both'");
    cfg.c = number_or_inf(j, "c", p, kInfinity);
    cfg.delta = get_or<double>(j, "delta", p, cfg.delta);
    cfg.r_max = get_or<double>(j, "r_max", p, cfg.r_max);
    const double alpha = get_or<double>(j, "alpha", p, 1.0);
    cfg.alpha_r = get_or<double>(j, "alpha_r", p, alpha);
    cfg.alpha_p = get_or<double>(j, "alpha_p", p, alpha);
    cfg.eta_mode = schedule(j, "eta_mode", p);
    cfg.gamma_mode = schedule(j, "gamma_mode", p);
    cfg.attract_state = get_or<std::size_t>(j, "attract_state", p, 0);
    cfg.planner_max_iter = get_or<std::size_t>(j, "planner_max_iter", p, cfg.planner_max_iter);
    if (cfg.mode != AgentMode::Ucrl && !(cfg.c > 0.0)) throw ConfigError(p + "c", "must be positive for SCAL");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError(p + "delta", "must lie in (0,1)");
    if (!(cfg.alpha_r > 0.0 && cfg.alpha_r <= 1.0)) throw ConfigError(p + "alpha_r", "must lie in (0,1]");
    if (!(cfg.alpha_p > 0.0 && cfg.alpha_p <= 1.0)) throw ConfigError(p + "alpha_p", "must lie in (0,1]");
    if (!(cfg.r_max > 0.0)) throw ConfigError(p + "r_max", "must be positive");
    return cfg;
}

RunConfig run_config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("run", "expected an object");
    RunConfig cfg;
    if (!j.contains("env") || !j["env"].is_object()) throw ConfigError("env", "missing object");
    const auto& env = j["env"];
    cfg.env.name = get<std::string>(env, "name", "env.");
    cfg.env.path = get_or<std::string>(env, "path", "env.", "");
    if (env.contains("params")) {
        if (!env["params"].is_object()) throw ConfigError("env.params", "expected an object");
        for (const auto& [key, value] : env["params"].items()) {
            if (!value.is_number()) throw ConfigError("env.params." + key, "expected a number");
            cfg.env.params[key] = value.get<double>();
        }
    }
    if (!j.contains("agent") || !j["agent"].is_object()) throw ConfigError("agent", "missing object");
    cfg.agent = agent_config_from_json(j["agent"]);
    cfg.horizon = get<std::uint64_t>(j, "horizon", "");
    cfg.seeds = get<std::vector<std::int64_t>>(j, "seeds", "");
    if (cfg.seeds.empty()) throw ConfigError("seeds", "must be non-empty");
    for (auto seed : cfg.seeds)
        if (seed < 0) throw ConfigError("seeds", "must be nonnegative");
    cfg.record_every = get_or<std::uint64_t>(j, "record_every", "", 1000);
    if (cfg.record_every < 1) throw ConfigError("record_every", "must be at least 1");
    cfg.output = get_or<std::string>(j, "output", "", "");
    cfg.workers = get_or<std::size_t>(j, "workers", "", 0);
    return cfg;
}

}  // namespace scal
