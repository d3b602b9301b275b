#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scal/environments.hpp"
#include "scal/extended_mdp.hpp"
#include "scal/harness.hpp"
#include "scal/json_io.hpp"
#include "scal/span_planner.hpp"

namespace py = pybind11;
using namespace scal;

namespace {

py::dict gain_bias_dict(const GainBias& gb) {
    py::dict d;
    d["gain"] = gb.gain;
    d["bias"] = gb.bias;
    d["constant_gain"] = gb.constant_gain;
    return d;
}

template <class Choice>
py::dict scopt_dict(const ScOptResult<Choice>& r, std::vector<Vector> policy) {
    py::dict d;
    d["v"] = r.v_final;
    d["gain"] = r.gain_estimate;
    d["iterations"] = r.iterations;
    d["residual"] = r.stop_residual;
    d["feasible"] = r.policy.feasible;
    d["policy"] = std::move(policy);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Span-constrained planning and optimistic learning for average-reward MDPs";

    py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);
    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<FiniteMdp>(m, "FiniteMdp")
        .def_static(
            "from_json", [](const std::string& text) { return mdp_from_json(Json::parse(text)); },
            "Build an MDP from its JSON text.")
        .def("to_json", [](const FiniteMdp& mdp) { return mdp_to_json(mdp).dump(); })
        .def_property_readonly("num_states", &FiniteMdp::num_states)
        .def_property_readonly("r_max", &FiniteMdp::r_max)
        .def("num_actions", &FiniteMdp::num_actions, py::arg("s"))
        .def("reward", &FiniteMdp::reward, py::arg("s"), py::arg("a"))
        .def("trans", &FiniteMdp::trans, py::arg("s"), py::arg("a"));

    py::class_<EnvInstance>(m, "EnvInstance")
        .def_readonly("name", &EnvInstance::name)
        .def_readonly("mdp", &EnvInstance::mdp)
        .def_readonly("initial_state", &EnvInstance::initial_state)
        .def_readonly("gain", &EnvInstance::gain)
        .def_readonly("bias", &EnvInstance::bias)
        .def_readonly("bias_span", &EnvInstance::bias_span)
        .def_readonly("diameter", &EnvInstance::diameter);

    m.def("make_two_state", &make_two_state);
    m.def("make_three_state", &make_three_state, py::arg("delta"));
    m.def("make_knight_quest", &make_knight_quest);
    m.def(
        "make_counterexample",
        [](const std::string& which, const std::vector<double>& params) {
            if (which == "b1") return make_counterexample(Counterexample::Infeasible, params);
            if (which == "b2") return make_counterexample(Counterexample::Chain, params);
            if (which == "b3") return make_counterexample(Counterexample::NoisyCycle, params);
            throw InvalidArgument("which must be 'b1', 'b2' or 'b3'");
        },
        py::arg("which"), py::arg("params") = std::vector<double>{});

    m.def("span", [](const Vector& v) { return span(v); }, py::arg("v"));
    m.def(
        "bellman_optimal",
        [](const FiniteMdp& mdp, const Vector& v) {
            auto b = bellman_optimal(mdp, v);
            return py::make_tuple(b.values, b.actions);
        },
        py::arg("mdp"), py::arg("v"), "Optimal backup and greedy actions.");
    m.def(
        "evaluate_policy",
        [](const FiniteMdp& mdp, const std::vector<Vector>& probs) {
            return gain_bias_dict(evaluate_policy(mdp, DecisionRule(probs)));
        },
        py::arg("mdp"), py::arg("probs"), "Gain and bias of a randomized rule.");
    m.def(
        "optimal_gain_bias",
        [](const FiniteMdp& mdp, double eps) {
            OptimalityOptions o;
            o.eps = eps;
            return gain_bias_dict(optimal_gain_bias(mdp, o));
        },
        py::arg("mdp"), py::arg("eps") = 1e-8);
    m.def("diameter", [](const FiniteMdp& mdp) { return diameter(mdp); }, py::arg("mdp"));

    m.def(
        "project_span", [](const Vector& v, double c) { return project_span(v, SpanConstraint(c)); },
        py::arg("v"), py::arg("c"));
    m.def(
        "op_tc", [](const FiniteMdp& mdp, const Vector& v, double c) { return op_tc(mdp, v, SpanConstraint(c)); },
        py::arg("mdp"), py::arg("v"), py::arg("c"), "Truncated optimal backup.");
    m.def(
        "scopt",
        [](const FiniteMdp& mdp, double c, std::optional<Vector> v0, std::size_t ref_state, double gamma,
           double eps, std::size_t max_iter, std::optional<double> eta) {
            const Vector start = v0.value_or(Vector(mdp.num_states(), 0.0));
            const ScOptOptions opt{ref_state, gamma, eps, max_iter, {}};
            if (!eta) {
                auto r = scopt(mdp, start, SpanConstraint(c), opt);
                return scopt_dict(r, to_decision_rule(mdp, r.policy).probs);
            }
            const auto model = modify(BoundedParamMdp::from_mdp(mdp), *eta, ref_state);
            auto r = scopt(model, start, SpanConstraint(c), opt);
            return scopt_dict(r, action_marginal(model, r.policy));
        },
        py::arg("mdp"), py::arg("c"), py::arg("v0") = py::none(), py::arg("ref_state") = 0,
        py::arg("gamma") = 0.0, py::arg("eps") = 1e-6, py::arg("max_iter") = 1'000'000, py::arg("eta") = py::none(),
        "Span-constrained relative value iteration. With eta, runs on the modified point-interval model.");

    m.def("inner_max_transition",
          [](const Vector& lo, const Vector& hi, const Vector& v) { return inner_max_transition(lo, hi, v); },
          py::arg("p_lo"), py::arg("p_hi"), py::arg("v"));
    m.def("inner_min_transition",
          [](const Vector& lo, const Vector& hi, const Vector& v) { return inner_min_transition(lo, hi, v); },
          py::arg("p_lo"), py::arg("p_hi"), py::arg("v"));
    m.def("bernstein_radius", &bernstein_radius, py::arg("variance"), py::arg("visits"), py::arg("range"),
          py::arg("alpha"), py::arg("log_term"));

    m.def(
        "run_learning",
        [](const std::string& config_json) {
            const auto cfg = run_config_from_json(Json::parse(config_json));
            std::vector<RegretTrace> traces;
            {
                py::gil_scoped_release release;
                traces = run_learning(cfg);
            }
            std::ostringstream out;
            write_csv(out, traces, aggregate(traces));
            return out.str();
        },
        py::arg("config_json"), "Run an experiment config (JSON text); returns the CSV text.");
    m.attr("CSV_HEADER") = kCsvHeader;
}
