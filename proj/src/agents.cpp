#include "scal/agents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace scal {

void AgentConfig::validate(std::size_t num_states) const {
    if (mode != AgentMode::Ucrl && !(c > 0.0)) throw InvalidArgument("agent: c must be positive for SCAL");
    confidence().validate();
    if (attract_state >= num_states) throw InvalidArgument("agent: attract_state out of range");
    if (planner_max_iter == 0) throw InvalidArgument("agent: planner_max_iter must be positive");
}

std::vector<Vector> executable_policy(const BoundedParamMdp& set, const ExtendedDecision& decision) {
    return action_marginal(set, decision);
}

Agent::Agent(std::vector<std::size_t> actions_per_state, AgentConfig config)
    : config_(config), stats_(std::move(actions_per_state), config.r_max) {
    config_.validate(stats_.num_states());
}

void Agent::set_stats(RunningStats stats, std::uint64_t t) {
    if (stats.actions_per_state() != stats_.actions_per_state())
        throw InvalidArgument("agent: statistics shape does not match");
    if (t < 1) throw InvalidArgument("agent: time starts at 1");
    stats_ = std::move(stats);
    t_ = t;
    active_ = false;
    pending_.reset();
}

namespace {

// Largest eta the confidence set can carry towards `attract`.
double eta_ceiling(const BoundedParamMdp& set, StateId attract) {
    double cap = 1.0;
    for (StateId s = 0; s < set.num_states(); ++s)
        for (ActionId a = 0; a < set.num_actions(s); ++a) {
            const auto& act = set.action(s, a);
            double others = 0.0;
            for (StateId j = 0; j < set.num_states(); ++j)
                if (j != attract) others += act.p_lo[j];
            cap = std::min({cap, act.p_hi[attract], 1.0 - others});
        }
    return std::max(cap, 0.0);
}

}  // namespace

const EpisodeState& Agent::plan_episode() {
    const std::uint64_t t_k = t_;
    const double tk = static_cast<double>(t_k);
    const double accuracy = config_.r_max / std::sqrt(tk);
    const BoundedParamMdp set = build_confidence_set(stats_, t_k, config_.confidence());

    EpisodeState next;
    next.index = episode_.index + 1;
    next.start_time = t_k;
    next.diagnostics.accuracy = accuracy;

    std::optional<EviResult> optimistic;
    if (config_.mode != AgentMode::Scal) {
        optimistic = evi(set, {accuracy, config_.planner_max_iter, config_.attract_state});
    }
    std::optional<ScOptResult<Vertex>> constrained;
    double eta = 0.0, gamma = 0.0;
    if (config_.mode != AgentMode::Ucrl) {
        if (config_.eta_mode == ScheduleMode::Theoretical)
            eta = std::min(config_.r_max / (config_.c * tk), eta_ceiling(set, config_.attract_state));
        if (config_.gamma_mode == ScheduleMode::Theoretical && eta > 0.0) gamma = 1.0 - eta;
        const BoundedParamMdp modified = modify(set, eta, config_.attract_state);
        const Vector v0(set.num_states(), 0.0);
        try {
            constrained = scopt(modified, v0, SpanConstraint(config_.c),
                                {config_.attract_state, gamma, accuracy, config_.planner_max_iter, {}});
        } catch (const NonConvergence& e) {
            std::ostringstream os;
            os << "episode " << next.index << " (t=" << t_k << "): " << e.what();
            throw NonConvergence(os.str(), e.iterations, e.residual, e.period2_residual, e.iterates);
        }
        if (!constrained->policy.all_feasible())
            throw std::logic_error("agent: truncated policy infeasible on the augmented model");
    }
    next.diagnostics.eta = eta;
    next.diagnostics.gamma = gamma;

    bool use_scopt = constrained.has_value();
    if (optimistic && constrained) {
        const double evi_span = span(optimistic->u);
        const double scopt_span = span(constrained->v_final);
        next.diagnostics.evi_span = evi_span;
        next.diagnostics.scopt_span = scopt_span;
        use_scopt = scopt_span <= evi_span;
    }
    if (use_scopt) {
        next.diagnostics.planner = "scopt";
        next.diagnostics.iterations = constrained->iterations;
        next.diagnostics.gain_estimate = constrained->gain_estimate;
        next.diagnostics.value_span = span(constrained->v_final);
        next.decision = std::move(constrained->policy);
        next.value = std::move(constrained->v_final);
    } else {
        next.diagnostics.planner = "evi";
        next.diagnostics.iterations = optimistic->iterations;
        next.diagnostics.gain_estimate = optimistic->gain_estimate;
        next.diagnostics.value_span = span(optimistic->u);
        next.decision = std::move(optimistic->decision);
        next.value = std::move(optimistic->u);
    }
    next.policy = executable_policy(set, next.decision);

    const std::size_t n = stats_.num_states();
    next.frozen_counts.resize(n);
    next.episode_counts.resize(n);
    for (StateId s = 0; s < n; ++s) {
        next.episode_counts[s].assign(stats_.num_actions(s), 0);
        for (ActionId a = 0; a < stats_.num_actions(s); ++a) next.frozen_counts[s].push_back(stats_.visits(s, a));
    }
    episode_ = std::move(next);
    active_ = true;
    pending_.reset();
    return episode_;
}

ActionId Agent::draw(StateId s, std::mt19937_64& rng) const {
    const Vector& row = episode_.policy.at(s);
    const auto top = std::max_element(row.begin(), row.end());
    if (*top >= 1.0) return static_cast<ActionId>(top - row.begin());
    std::discrete_distribution<ActionId> dist(row.begin(), row.end());
    return dist(rng);
}

bool Agent::guard_allows(StateId s, ActionId a) const {
    const std::uint64_t frozen = episode_.frozen_counts[s][a];
    return episode_.episode_counts[s][a] <= std::max<std::uint64_t>(1, frozen);
}

ActionId Agent::act(StateId s, std::mt19937_64& rng) {
    if (s >= stats_.num_states()) throw InvalidArgument("agent: state out of range");
    if (!active_) plan_episode();
    ActionId a;
    if (pending_ && pending_->first == s) {
        a = pending_->second;
    } else {
        a = draw(s, rng);
    }
    pending_.reset();
    last_ = {s, a};
    return a;
}

StepOutcome Agent::observe(StateId s, ActionId a, double reward, StateId next, std::mt19937_64& rng) {
    if (!last_ || last_->first != s || last_->second != a)
        throw InvalidArgument("agent: observed transition does not match the last action");
    last_.reset();
    stats_.update(s, a, reward, next);
    episode_.episode_counts[s][a] += 1;
    t_ += 1;
    const ActionId following = draw(next, rng);
    if (!guard_allows(next, following)) {
        active_ = false;
        return StepOutcome::EpisodeEnd;
    }
    pending_ = {next, following};
    return StepOutcome::Continue;
}

}  // namespace scal
