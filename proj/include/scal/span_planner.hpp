#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <sstream>
#include <span>
#include <vector>

#include "scal/mdp.hpp"

namespace scal {

/// Anything that can back up a value vector: the plain MDP (choices are
/// action ids) and bounded-parameter MDPs (choices are interval vertices).
template <class B>
concept BackupProvider = requires(const B& b, std::span<const double> v, std::span<double> out,
                                  StateId s, const typename B::Choice& choice) {
    typename B::Choice;
    { b.num_states() } -> std::convertible_to<std::size_t>;
    b.optimal_values(v, out);
    { b.backup_at(v, s) } -> std::same_as<StateBackup<typename B::Choice>>;
    { b.choice_value(s, choice, v) } -> std::convertible_to<double>;
};

/// Upper bound on the span of value vectors; +inf means unconstrained.
struct SpanConstraint {
    double c = kInfinity;

    SpanConstraint() = default;
    SpanConstraint(double bound) : c(bound) {  // NOLINT(google-explicit-constructor)
        if (!(bound >= 0.0)) throw InvalidArgument("span constraint must be nonnegative");
    }
    bool bounded() const { return std::isfinite(c); }
};

/// Two-point mixture: `high` with probability high_weight, `low` otherwise.
template <class Choice>
struct MixedChoice {
    Choice high;
    Choice low;
    double high_weight = 1.0;

    bool deterministic() const { return high_weight >= 1.0; }
};

template <class Choice>
struct SpanPolicy {
    std::vector<MixedChoice<Choice>> choices;
    std::vector<bool> feasible;

    bool all_feasible() const {
        return std::all_of(feasible.begin(), feasible.end(), [](bool f) { return f; });
    }
};

template <class Choice>
struct ScOptResult {
    Vector v_final;
    SpanPolicy<Choice> policy;
    double gain_estimate = 0.0;
    std::size_t iterations = 0;
    double stop_residual = 0.0;

    const std::vector<bool>& per_state_feasible() const { return policy.feasible; }
};

struct ScOptOptions {
    StateId ref_state = 0;
    double gamma = 0.0;
    double eps = 1e-6;
    std::size_t max_iter = 1'000'000;
    /// Called with (n, v_n, offset_n) for every iterate; v_n + offset_n * e is
    /// the n-th raw iterate T_c^n v0.
    std::function<void(std::size_t, const Vector&, double)> on_iterate;
};

/// min{v(s), min v + c}
inline Vector project_span(std::span<const double> v, SpanConstraint c) {
    Vector w(v.begin(), v.end());
    if (w.empty() || !c.bounded()) return w;
    const double cap = *std::min_element(w.begin(), w.end()) + c.c;
    for (double& x : w) x = std::min(x, cap);
    return w;
}

/// Full sweep of the optimal backup L v.
template <BackupProvider B>
Vector backup_values(const B& backend, std::span<const double> v) {
    if (v.size() != backend.num_states()) throw InvalidArgument("backup: dimension mismatch");
    Vector out(v.size());
    backend.optimal_values(v, out);
    return out;
}

/// T_c v = project_span(L v, c)
template <BackupProvider B>
Vector op_tc(const B& backend, std::span<const double> v, SpanConstraint c) {
    Vector lv = backup_values(backend, v);
    if (!c.bounded()) return lv;
    const double cap = *std::min_element(lv.begin(), lv.end()) + c.c;
    for (double& x : lv) x = std::min(x, cap);
    return lv;
}

constexpr double kFeasibilitySlack = 1e-12;

template <BackupProvider B>
bool feasible_at(const B& backend, std::span<const double> v, SpanConstraint c, StateId s) {
    if (!c.bounded()) return true;
    const Vector lv = backup_values(backend, v);
    const double floor = *std::min_element(lv.begin(), lv.end());
    return backend.backup_at(v, s).minimal_value <= floor + c.c + kFeasibilitySlack;
}

/// G_c: greedy choice where the backup is below the cap, a (greedy, minimal)
/// mixture hitting the cap where it is above but reachable, the minimal
/// choice where it is not reachable.
template <BackupProvider B>
SpanPolicy<typename B::Choice> greedy_span_policy(const B& backend, std::span<const double> v,
                                                  SpanConstraint c) {
    using Choice = typename B::Choice;
    const Vector lv = backup_values(backend, v);
    const double cap = *std::min_element(lv.begin(), lv.end()) + c.c;
    SpanPolicy<Choice> out;
    out.choices.reserve(v.size());
    out.feasible.assign(v.size(), true);
    for (StateId s = 0; s < v.size(); ++s) {
        auto b = backend.backup_at(v, s);
        if (!c.bounded() || b.greedy_value <= cap) {
            out.choices.push_back({b.greedy, b.greedy, 1.0});
        } else if (b.minimal_value <= cap + kFeasibilitySlack) {
            const double gap = b.greedy_value - b.minimal_value;
            if (!(gap > 0.0)) throw std::logic_error("greedy_span_policy: degenerate mixture");
            const double w_high = std::clamp((cap - b.minimal_value) / gap, 0.0, 1.0);
            out.choices.push_back({std::move(b.greedy), std::move(b.minimal), w_high});
        } else {
            out.feasible[s] = false;
            out.choices.push_back({b.minimal, b.minimal, 1.0});
        }
    }
    return out;
}

/// Backup of v under a span policy (mixture of the two choice backups).
template <BackupProvider B>
Vector policy_backup(const B& backend, const SpanPolicy<typename B::Choice>& policy,
                     std::span<const double> v) {
    Vector out(v.size());
    for (StateId s = 0; s < v.size(); ++s) {
        const auto& mc = policy.choices.at(s);
        out[s] = mc.high_weight * backend.choice_value(s, mc.high, v);
        if (mc.high_weight < 1.0)
            out[s] += (1.0 - mc.high_weight) * backend.choice_value(s, mc.low, v);
    }
    return out;
}

/// Decision rule of a span policy on the plain MDP.
inline DecisionRule to_decision_rule(const FiniteMdp& mdp, const SpanPolicy<ActionId>& policy) {
    std::vector<Vector> probs(mdp.num_states());
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        probs[s].assign(mdp.num_actions(s), 0.0);
        const auto& mc = policy.choices.at(s);
        probs[s][mc.high] += mc.high_weight;
        probs[s][mc.low] += 1.0 - mc.high_weight;
    }
    return DecisionRule(std::move(probs));
}

/// Relative value iteration with T_c.
///
/// Stops once span(v_{n+1} - v_n) + 2 gamma^n / (1 - gamma) * span(v_1 - v_0)
/// drops to eps, then returns G_c v_n. Throws NonConvergence after max_iter
/// iterations with the last three iterates attached.
template <BackupProvider B>
ScOptResult<typename B::Choice> scopt(const B& backend, std::span<const double> v0, SpanConstraint c,
                                      const ScOptOptions& opt = {}) {
    const std::size_t n = backend.num_states();
    if (v0.size() != n) throw InvalidArgument("scopt: v0 has the wrong size");
    if (opt.ref_state >= n) throw InvalidArgument("scopt: ref_state out of range");
    if (!(opt.gamma >= 0.0 && opt.gamma < 1.0)) throw InvalidArgument("scopt: gamma must lie in [0,1)");
    if (!(opt.eps > 0.0)) throw InvalidArgument("scopt: eps must be positive");
    if (span(v0) > c.c + kFeasibilitySlack)
        throw PreconditionError("scopt: span(v0) exceeds the constraint");

    Vector v(v0.begin(), v0.end());
    Vector prev = v;
    double offset = 0.0;
    double first_step = 0.0;
    double geometric = 1.0;  // gamma^n
    if (opt.on_iterate) opt.on_iterate(0, v, offset);

    for (std::size_t it = 0;; ++it) {
        Vector tv = op_tc(backend, v, c);
        const double pin = tv[opt.ref_state];
        Vector next(n);
        double lo = kInfinity, hi = -kInfinity, dlo = kInfinity, dhi = -kInfinity;
        for (std::size_t s = 0; s < n; ++s) {
            const double step = tv[s] - v[s];
            lo = std::min(lo, step);
            hi = std::max(hi, step);
            next[s] = tv[s] - pin;
            const double d = next[s] - v[s];
            dlo = std::min(dlo, d);
            dhi = std::max(dhi, d);
        }
        if (!std::isfinite(dhi - dlo)) throw NumericalFailure("scopt: iterates diverged");
        const double step_span = dhi - dlo;
        if (it == 0) first_step = step_span;
        const double residual = step_span + 2.0 * geometric / (1.0 - opt.gamma) * first_step;

        if (residual <= opt.eps) {
            ScOptResult<typename B::Choice> out;
            out.policy = greedy_span_policy(backend, v, c);
            out.gain_estimate = 0.5 * (lo + hi);
            out.iterations = it;
            out.stop_residual = residual;
            out.v_final = std::move(v);
            return out;
        }
        if (it + 1 >= opt.max_iter) {
            const double period2 = span(difference(next, prev));
            std::ostringstream os;
            os << "scopt: no convergence after " << opt.max_iter << " iterations (residual "
               << residual << ", span(v[n+2] - v[n]) = " << period2 << ")";
            throw NonConvergence(os.str(), opt.max_iter, residual, period2,
                                 {std::move(prev), std::move(v), std::move(next)});
        }
        offset += pin;
        prev = std::move(v);
        v = std::move(next);
        geometric *= opt.gamma;
        if (opt.on_iterate) opt.on_iterate(it + 1, v, offset);
    }
}

}  // namespace scal
