#include <doctest.h>

#include <cmath>
#include <sstream>

#include "scal/harness.hpp"
#include "scal/json_io.hpp"
#include "support.hpp"

using namespace scal;

namespace {

RunConfig small_run(AgentMode mode, double c) {
    RunConfig run;
    run.env = {"three_state", {{"delta", 0.05}}, ""};
    run.agent.mode = mode;
    run.agent.c = c;
    run.agent.alpha_r = run.agent.alpha_p = 0.05;
    run.agent.eta_mode = run.agent.gamma_mode = ScheduleMode::Zero;
    run.horizon = 5000;
    run.seeds = {1, 2, 3};
    run.record_every = 500;
    run.workers = 2;
    return run;
}

}  // namespace

TEST_CASE("regret rows against an independent replay") {
    const auto env = make_three_state(0.05);
    AgentConfig agent;
    const double g = 2.0 / 3.0;
    const auto trace = run_single(env, agent, 3000, 4, 100, g);
    REQUIRE(trace.error.empty());
    REQUIRE(trace.rows.size() == 30);

    // replay with the same streams
    auto env_rng = make_stream(4, 0), agent_rng = make_stream(4, 1);
    AgentConfig cfg = agent;
    cfg.seed = 4;
    Agent learner({1, 1, 2}, cfg);
    StateId s = env.initial_state;
    double total = 0.0;
    std::size_t row = 0;
    for (std::uint64_t t = 1; t <= 3000; ++t) {
        const ActionId a = learner.act(s, agent_rng);
        const auto step = sample(env.mdp, s, a, env_rng);
        total += step.reward;
        learner.observe(s, a, step.reward, step.next, agent_rng);
        s = step.next;
        if (t % 100 == 0) {
            const auto& r = trace.rows[row++];
            CHECK(r.t == t);
            CHECK(r.seed == 4);
            CHECK(r.cum_reward == total);
            CHECK(r.regret == doctest::Approx(t * g - total).epsilon(1e-12));
            CHECK(r.episode == learner.episodes());
        }
    }
    CHECK(trace.episodes == learner.episodes());
    CHECK(run_single(env, agent, 0, 4, 100, g).rows.empty());
}

TEST_CASE("runs are reproducible regardless of worker count") {
    auto run = small_run(AgentMode::Scal, 2.0);
    const auto a = run_learning(run);
    run.workers = 1;
    const auto b = run_learning(run);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed == run.seeds[i]);
        CHECK(a[i].rows == b[i].rows);
        for (const auto& r : a[i].rows) CHECK(r.value_span <= 2.0 + 1e-9);
    }
    CHECK(a[0].rows != a[1].rows);
}

TEST_CASE("aggregate means and half-widths") {
    RegretTrace x, y;
    x.seed = 1;
    y.seed = 2;
    x.rows = {{10, 1, 4, 2, 1, 0.5, 0.6}, {20, 1, 8, 4, 2, 0.5, 0.6}};
    y.rows = {{10, 2, 6, 0, 1, 0.5, 0.7}, {20, 2, 12, 2, 3, 0.5, 0.6}};
    const auto agg = aggregate({x, y});
    REQUIRE(agg.size() == 2);
    CHECK(agg[0].mean.seed == -1);
    CHECK(agg[0].mean.cum_reward == 5);
    CHECK(agg[0].mean.regret == 1);
    REQUIRE(agg[0].half_width.has_value());
    CHECK(agg[0].half_width->seed == -2);
    // two samples a, b: s = |a - b| / sqrt(2)
    CHECK(agg[0].half_width->cum_reward == doctest::Approx(1.96 * (2 / std::sqrt(2.0)) / std::sqrt(2.0)));
    CHECK(agg[1].half_width->value_span == 0.0);

    CHECK_FALSE(aggregate({x}).front().half_width.has_value());
    RegretTrace failed = y;
    failed.error = "boom";
    CHECK(aggregate({x, failed}).front().runs == 1);
    RegretTrace shifted = y;
    shifted.rows[0].t = 11;
    CHECK_THROWS_AS(aggregate({x, shifted}), InvalidArgument);
}

TEST_CASE("csv round trip") {
    const auto traces = run_learning(small_run(AgentMode::Ucrl, kInfinity));
    const auto agg = aggregate(traces);
    std::stringstream buf;
    write_csv(buf, traces, agg);
    std::string header;
    std::getline(std::stringstream(buf.str()), header);
    CHECK(header == kCsvHeader);
    const auto rows = read_csv(buf);
    std::vector<TraceRow> expect;
    for (const auto& tr : traces) expect.insert(expect.end(), tr.rows.begin(), tr.rows.end());
    for (const auto& a : agg) {
        expect.push_back(a.mean);
        expect.push_back(*a.half_width);
    }
    REQUIRE(rows.size() == expect.size());
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(b)); };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].t == expect[i].t);
        CHECK(rows[i].seed == expect[i].seed);
        CHECK(close(rows[i].cum_reward, expect[i].cum_reward));
        CHECK(close(rows[i].regret, expect[i].regret));
        CHECK(close(rows[i].episode, expect[i].episode));
        CHECK(close(rows[i].value_span, expect[i].value_span));
        CHECK(close(rows[i].gain_est, expect[i].gain_est));
    }

    std::stringstream bad("t,seed,reward\n1,1,0\n");
    CHECK_THROWS_AS(read_csv(bad), InvalidArgument);
}

TEST_CASE("a failing planner leaves a diagnostic row") {
    const auto env = make_three_state(0.05);
    AgentConfig agent;
    agent.mode = AgentMode::Scal;
    agent.c = 2.0;
    agent.planner_max_iter = 2;
    const auto trace = run_single(env, agent, 1000, 1, 100, 2.0 / 3.0);
    REQUIRE_FALSE(trace.error.empty());
    CHECK(trace.error.find("episode") != std::string::npos);
    REQUIRE_FALSE(trace.rows.empty());
    CHECK(std::isnan(trace.rows.back().value_span));
    CHECK(std::isnan(trace.rows.back().gain_est));
}

TEST_CASE("config parsing names the bad field") {
    const Json good = Json::parse(R"({
        "env": {"name": "three_state", "params": {"delta": 0.005}},
        "agent": {"mode": "scal", "c": 2, "alpha": 0.05, "eta_mode": "zero", "gamma_mode": "zero"},
        "horizon": 1000, "seeds": [0, 1], "record_every": 100
    })");
    const auto run = run_config_from_json(good);
    CHECK(run.agent.mode == AgentMode::Scal);
    CHECK(run.agent.alpha_p == 0.05);
    CHECK(run.seeds == std::vector<std::int64_t>{0, 1});
    CHECK(run_config_from_json(Json::parse(R"({"env": {"name": "two_state"}, "agent": {"c": "inf"},
        "horizon": 10, "seeds": [3]})")).agent.c == kInfinity);

    auto field_of = [&](const char* patch) {
        Json j = good;
        j.merge_patch(Json::parse(patch));
        try {
            run_config_from_json(j);
        } catch (const ConfigError& e) {
            return e.field;
        }
        return std::string("<none>");
    };
    CHECK(field_of(R"({"horizon": -5})").find("horizon") != std::string::npos);
    CHECK(field_of(R"({"seeds": []})").find("seeds") != std::string::npos);
    CHECK(field_of(R"({"seeds": [-1]})").find("seeds") != std::string::npos);
    CHECK(field_of(R"({"agent": {"mode": "bandit"}})").find("mode") != std::string::npos);
    CHECK(field_of(R"({"agent": {"delta": 2}})").find("delta") != std::string::npos);
    CHECK(field_of(R"({"env": null})").find("env") != std::string::npos);
}

TEST_CASE("environment lookup") {
    CHECK(make_env({"two_state", {}, ""}).mdp.num_states() == 2);
    CHECK(make_env({"counterexample_b3", {}, ""}).mdp.num_states() == 3);
    const auto r1 = make_env({"random", {{"states", 4}, {"seed", 3}}, ""});
    const auto r2 = make_env({"random", {{"states", 4}, {"seed", 3}}, ""});
    CHECK(r1.mdp.num_states() == 4);
    CHECK(r1.mdp.trans(2, 1) == r2.mdp.trans(2, 1));
    CHECK_THROWS_AS(make_env({"gridworld", {}, ""}), InvalidArgument);
    CHECK_THROWS(make_env({"file", {}, "/nonexistent/mdp.json"}));
}
