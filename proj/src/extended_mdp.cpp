#include "scal/extended_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace scal {

namespace {

constexpr double kMassTolerance = 1e-12;

std::string pair_name(StateId s, ActionId a) {
    std::ostringstream os;
    os << "(s=" << s << ", a=" << a << ")";
    return os.str();
}

void check_box(std::span<const double> p_lo, std::span<const double> p_hi) {
    if (p_lo.size() != p_hi.size()) throw InvalidArgument("interval box: bound sizes differ");
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < p_lo.size(); ++j) {
        lo += p_lo[j];
        hi += p_hi[j];
    }
    if (lo > 1.0 + kMassTolerance || hi < 1.0 - kMassTolerance)
        throw InvalidArgument("interval box contains no probability vector");
}

// States by decreasing v, ties by increasing index.
std::vector<StateId> descending_order(std::span<const double> v) {
    std::vector<StateId> order(v.size());
    std::iota(order.begin(), order.end(), StateId{0});
    std::stable_sort(order.begin(), order.end(), [&](StateId a, StateId b) { return v[a] > v[b]; });
    return order;
}

// Raise coordinates from p_lo to p_hi along `order` until the mass is 1.
Vector fill_in_order(std::span<const double> p_lo, std::span<const double> p_hi,
                     const std::vector<StateId>& order, double lo_mass) {
    Vector p(p_lo.begin(), p_lo.end());
    double remaining = 1.0 - lo_mass;
    for (StateId j : order) {
        if (remaining <= 0.0) break;
        const double add = std::min(p_hi[j] - p_lo[j], remaining);
        p[j] += add;
        remaining -= add;
    }
    return p;
}

double fill_value(std::span<const double> p_lo, std::span<const double> p_hi,
                  const std::vector<StateId>& order, double lo_mass, std::span<const double> v) {
    double value = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j)
        if (p_lo[j] != 0.0) value += p_lo[j] * v[j];
    double remaining = 1.0 - lo_mass;
    for (StateId j : order) {
        if (remaining <= 0.0) break;
        const double add = std::min(p_hi[j] - p_lo[j], remaining);
        value += add * v[j];
        remaining -= add;
    }
    return value;
}

double dot(std::span<const double> p, std::span<const double> v) {
    double x = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) x += p[j] * v[j];
    return x;
}

}  // namespace

BoundedParamMdp::BoundedParamMdp(std::vector<std::vector<IntervalAction>> actions, double r_max)
    : actions_(std::move(actions)), r_max_(r_max) {
    if (actions_.empty()) throw InvalidArgument("bmdp: num_states must be positive");
    if (!(r_max_ > 0.0) || !std::isfinite(r_max_)) throw InvalidArgument("bmdp: r_max must be positive");
    const std::size_t n = actions_.size();
    lo_mass_.resize(n);
    for (StateId s = 0; s < n; ++s) {
        if (actions_[s].empty()) throw InvalidArgument("bmdp: state " + std::to_string(s) + " has no actions");
        for (ActionId a = 0; a < actions_[s].size(); ++a) {
            const auto& act = actions_[s][a];
            if (!(0.0 <= act.r_lo && act.r_lo <= act.r_hi && act.r_hi <= r_max_))
                throw InvalidArgument("bmdp: bad reward interval at " + pair_name(s, a));
            if (act.p_lo.size() != n || act.p_hi.size() != n)
                throw InvalidArgument("bmdp: transition bounds have wrong length at " + pair_name(s, a));
            for (std::size_t j = 0; j < n; ++j)
                if (!(0.0 <= act.p_lo[j] && act.p_lo[j] <= act.p_hi[j] && act.p_hi[j] <= 1.0))
                    throw InvalidArgument("bmdp: bad transition interval at " + pair_name(s, a));
            try {
                check_box(act.p_lo, act.p_hi);
            } catch (const InvalidArgument&) {
                throw InvalidArgument("bmdp: empty transition box at " + pair_name(s, a));
            }
            lo_mass_[s].push_back(std::accumulate(act.p_lo.begin(), act.p_lo.end(), 0.0));
        }
    }
}

BoundedParamMdp BoundedParamMdp::from_mdp(const FiniteMdp& mdp) {
    std::vector<std::vector<IntervalAction>> acts(mdp.num_states());
    for (StateId s = 0; s < mdp.num_states(); ++s)
        for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
            const auto& x = mdp.action(s, a);
            acts[s].push_back({x.reward_mean, x.reward_mean, x.trans, x.trans});
        }
    return BoundedParamMdp(std::move(acts), mdp.r_max());
}

bool BoundedParamMdp::rewards_augmented() const {
    for (const auto& acts : actions_)
        for (const auto& act : acts)
            if (act.r_lo != 0.0) return false;
    return true;
}

void BoundedParamMdp::optimal_values(std::span<const double> v, std::span<double> out) const {
    if (v.size() != num_states()) throw InvalidArgument("bmdp backup: dimension mismatch");
    const auto order = descending_order(v);
    for (StateId s = 0; s < num_states(); ++s) {
        double best = -kInfinity;
        for (ActionId a = 0; a < actions_[s].size(); ++a) {
            const auto& act = actions_[s][a];
            best = std::max(best, act.r_hi + fill_value(act.p_lo, act.p_hi, order, lo_mass_[s][a], v));
        }
        out[s] = best;
    }
}

StateBackup<Vertex> BoundedParamMdp::backup_at(std::span<const double> v, StateId s) const {
    if (v.size() != num_states()) throw InvalidArgument("bmdp backup: dimension mismatch");
    const auto down = descending_order(v);
    // ascending order, ties again by index
    std::vector<StateId> asc(v.size());
    std::iota(asc.begin(), asc.end(), StateId{0});
    std::stable_sort(asc.begin(), asc.end(), [&](StateId a, StateId b) { return v[a] < v[b]; });

    StateBackup<Vertex> out{-kInfinity, {}, kInfinity, {}};
    for (ActionId a = 0; a < actions_[s].size(); ++a) {
        const auto& act = actions_[s][a];
        const double hi = act.r_hi + fill_value(act.p_lo, act.p_hi, down, lo_mass_[s][a], v);
        const double lo = act.r_lo + fill_value(act.p_lo, act.p_hi, asc, lo_mass_[s][a], v);
        if (hi > out.greedy_value) {
            out.greedy_value = hi;
            out.greedy = {a, act.r_hi, fill_in_order(act.p_lo, act.p_hi, down, lo_mass_[s][a])};
        }
        if (lo < out.minimal_value) {
            out.minimal_value = lo;
            out.minimal = {a, act.r_lo, fill_in_order(act.p_lo, act.p_hi, asc, lo_mass_[s][a])};
        }
    }
    return out;
}

double BoundedParamMdp::choice_value(StateId, const Vertex& x, std::span<const double> v) const {
    return x.reward + dot(x.trans, v);
}

Vector inner_max_transition(std::span<const double> p_lo, std::span<const double> p_hi,
                            std::span<const double> v) {
    if (v.size() != p_lo.size()) throw InvalidArgument("inner_max_transition: dimension mismatch");
    check_box(p_lo, p_hi);
    return fill_in_order(p_lo, p_hi, descending_order(v), std::accumulate(p_lo.begin(), p_lo.end(), 0.0));
}

Vector inner_min_transition(std::span<const double> p_lo, std::span<const double> p_hi,
                            std::span<const double> v) {
    Vector neg(v.begin(), v.end());
    for (double& x : neg) x = -x;
    return inner_max_transition(p_lo, p_hi, neg);
}

BoundedParamMdp modify(const BoundedParamMdp& bmdp, double eta, StateId attract) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("modify: eta must lie in [0,1]");
    if (attract >= bmdp.num_states()) throw InvalidArgument("modify: attract state out of range");
    auto acts = bmdp.actions();
    for (StateId s = 0; s < acts.size(); ++s)
        for (ActionId a = 0; a < acts[s].size(); ++a) {
            auto& act = acts[s][a];
            act.r_lo = 0.0;
            if (eta == 0.0) continue;
            if (act.p_hi[attract] < eta)
                throw PreconditionError("modify: attract interval misses [eta, 1] at " + pair_name(s, a));
            act.p_lo[attract] = std::max(act.p_lo[attract], eta);
            const double lo = std::accumulate(act.p_lo.begin(), act.p_lo.end(), 0.0);
            if (lo > 1.0 + kMassTolerance)
                throw PreconditionError("modify: lower bounds exceed mass 1 at " + pair_name(s, a));
        }
    return BoundedParamMdp(std::move(acts), bmdp.r_max());
}

EviResult evi(const BoundedParamMdp& bmdp, const EviOptions& options) {
    const std::size_t n = bmdp.num_states();
    if (!(options.eps > 0.0)) throw InvalidArgument("evi: eps must be positive");
    if (options.ref_state >= n) throw InvalidArgument("evi: ref_state out of range");
    Vector u(n, 0.0), prev(n, 0.0), next(n);
    for (std::size_t it = 0; it < options.max_iter; ++it) {
        bmdp.optimal_values(u, next);
        double lo = kInfinity, hi = -kInfinity;
        for (std::size_t s = 0; s < n; ++s) {
            const double d = next[s] - u[s];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (!std::isfinite(hi - lo)) throw NumericalFailure("evi: iterates diverged");
        if (hi - lo <= options.eps) {
            EviResult out;
            out.decision = greedy_span_policy(bmdp, u, SpanConstraint{});
            out.gain_estimate = 0.5 * (lo + hi);
            out.iterations = it;
            out.u = std::move(u);
            return out;
        }
        const double pin = next[options.ref_state];
        prev = u;
        for (std::size_t s = 0; s < n; ++s) u[s] = next[s] - pin;
    }
    const double residual = span(difference(u, prev));
    throw NonConvergence("evi: max_iter exceeded", options.max_iter, residual, kInfinity, {prev, u});
}

ExtendedDecision extended_span_policy(const BoundedParamMdp& bmdp, std::span<const double> v,
                                      SpanConstraint c) {
    auto policy = greedy_span_policy(bmdp, v, c);
    if (bmdp.rewards_augmented() && span(v) <= c.c && !policy.all_feasible())
        throw std::logic_error("extended_span_policy: augmented model reported an infeasible state");
    return policy;
}

std::vector<Vector> action_marginal(const BoundedParamMdp& bmdp, const ExtendedDecision& decision) {
    std::vector<Vector> out(bmdp.num_states());
    for (StateId s = 0; s < bmdp.num_states(); ++s) {
        out[s].assign(bmdp.num_actions(s), 0.0);
        const auto& mc = decision.choices.at(s);
        out[s][mc.high.action] += mc.high_weight;
        out[s][mc.low.action] += 1.0 - mc.high_weight;
    }
    return out;
}

}  // namespace scal
