// scal: planning and learning experiments on finite average-reward MDPs.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "scal/extended_mdp.hpp"
#include "scal/harness.hpp"
#include "scal/json_io.hpp"
#include "scal/span_planner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

std::string fmt(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

std::string fmt(const scal::Vector& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
    return out + "]";
}

int cmd_plan(const std::string& path, double c, double eps, double eta, std::size_t ref, double gamma) {
    const auto mdp = scal::mdp_from_json(scal::load_json_file(path));
    scal::OptimalityOptions opt;
    opt.eps = eps;
    const auto gb = scal::optimal_gain_bias(mdp, opt);
    std::cout << "g*=" << fmt(gb.scalar_gain()) << "\n";
    std::cout << "bias=" << fmt(gb.bias) << "\n";
    std::cout << "span=" << fmt(scal::span(gb.bias)) << "\n";
    if (std::isfinite(c)) {
        if (ref >= mdp.num_states()) throw scal::ConfigError("--ref", "state out of range");
        const auto model = scal::modify(scal::BoundedParamMdp::from_mdp(mdp), eta, ref);
        const scal::Vector v0(mdp.num_states(), 0.0);
        const auto res = scal::scopt(model, v0, scal::SpanConstraint(c), {ref, gamma, eps, 1'000'000, {}});
        std::cout << "g+=" << fmt(res.gain_estimate) << "\n";
        std::cout << "v=" << fmt(res.v_final) << "\n";
        std::cout << "span(v)=" << fmt(scal::span(res.v_final)) << "\n";
        std::cout << "iterations=" << res.iterations << "\n";
        const auto marginal = scal::action_marginal(model, res.policy);
        for (std::size_t s = 0; s < marginal.size(); ++s) std::cout << "policy[" << s << "]=" << fmt(marginal[s]) << "\n";
    }
    return kOk;
}

int cmd_eval(const std::string& mdp_path, const std::string& policy_path) {
    const auto mdp = scal::mdp_from_json(scal::load_json_file(mdp_path));
    const auto rule = scal::rule_from_json(scal::load_json_file(policy_path), mdp);
    const auto gb = scal::evaluate_policy(mdp, rule);
    if (gb.constant_gain)
        std::cout << "gain=" << fmt(gb.scalar_gain()) << "\n";
    else
        std::cout << "gain=" << fmt(gb.gain) << "\n";
    std::cout << "bias=" << fmt(gb.bias) << "\n";
    std::cout << "span=" << fmt(scal::span(gb.bias)) << "\n";
    std::cout << "constant_gain=" << (gb.constant_gain ? "true" : "false") << "\n";
    return kOk;
}

int cmd_diameter(const std::string& path) {
    const auto mdp = scal::mdp_from_json(scal::load_json_file(path));
    std::cout << "D=" << fmt(scal::diameter(mdp)) << "\n";
    return kOk;
}

int cmd_learn(const std::string& path, const std::string& out_override) {
    auto cfg = scal::run_config_from_json(scal::load_json_file(path));
    if (!out_override.empty()) cfg.output = out_override;
    const auto traces = scal::run_learning(cfg);
    const auto agg = scal::aggregate(traces);
    if (cfg.output.empty() || cfg.output == "-") {
        scal::write_csv(std::cout, traces, agg);
    } else {
        std::ofstream out(cfg.output);
        if (!out) throw scal::ConfigError("output", "cannot open " + cfg.output);
        scal::write_csv(out, traces, agg);
    }
    int code = kOk;
    for (const auto& tr : traces) {
        if (!tr.error.empty()) {
            std::cerr << "seed " << tr.seed << " aborted: " << tr.error << "\n";
            code = kNumericalFailure;
        }
    }
    if (!agg.empty())
        std::cerr << "final mean regret " << fmt(agg.back().mean.regret) << " over " << agg.back().runs << " runs\n";
    return code;
}

int cmd_env(const std::string& name, const std::vector<std::string>& params, const std::string& out_path) {
    scal::EnvSpec spec;
    spec.name = name;
    for (const auto& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw scal::ConfigError("--param", "expected key=value, got " + kv);
        try {
            spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::logic_error&) {
            throw scal::ConfigError("--param", "not a number: " + kv);
        }
    }
    const auto env = scal::make_env(spec);
    const std::string text = scal::mdp_to_json(env.mdp).dump(1) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw scal::ConfigError("--out", "cannot open " + out_path);
        out << text;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Span-constrained planning and optimistic learning for average-reward MDPs"};
    app.require_subcommand(1);

    std::string mdp_path, policy_path, run_path, out_path, env_name;
    double c = scal::kInfinity, eps = 1e-8, eta = 0.0, gamma = 0.0;
    std::size_t ref = 0;
    std::vector<std::string> env_params;

    auto* plan = app.add_subcommand("plan", "optimal gain and bias; span-constrained plan with --c");
    plan->add_option("mdp", mdp_path, "MDP JSON file")->required();
    plan->add_option("--c", c, "span bound for the constrained planner");
    plan->add_option("--eps", eps, "accuracy");
    plan->add_option("--eta", eta, "attraction mass of the modified model");
    plan->add_option("--ref", ref, "reference and attract state");
    plan->add_option("--gamma", gamma, "contraction factor used by the stopping rule");

    auto* learn = app.add_subcommand("learn", "run an experiment config and emit a CSV");
    learn->add_option("run", run_path, "run config JSON")->required();
    learn->add_option("--out", out_path, "CSV path, overrides the config");

    auto* eval = app.add_subcommand("eval", "gain and bias of a policy");
    eval->add_option("mdp", mdp_path, "MDP JSON file")->required();
    eval->add_option("policy", policy_path, "policy JSON file")->required();

    auto* diam = app.add_subcommand("diameter", "diameter of an MDP");
    diam->add_option("mdp", mdp_path, "MDP JSON file")->required();

    auto* env = app.add_subcommand("env", "export a built-in environment as MDP JSON");
    env->add_option("name", env_name, "two_state, three_state, knight_quest, counterexample_b1..b3, random")
        ->required();
    env->add_option("--param", env_params, "key=value parameter");
    env->add_option("--out", out_path, "output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*plan) return cmd_plan(mdp_path, c, eps, eta, ref, gamma);
        if (*learn) return cmd_learn(run_path, out_path);
        if (*eval) return cmd_eval(mdp_path, policy_path);
        if (*diam) return cmd_diameter(mdp_path);
        if (*env) return cmd_env(env_name, env_params, out_path);
    } catch (const scal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const scal::NonConvergence& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const scal::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const scal::PreconditionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    return kConfigError;
}
