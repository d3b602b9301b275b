#include "scal/confidence.hpp"

#include <algorithm>
#include <cmath>

namespace scal {

RunningStats::RunningStats(std::vector<std::size_t> actions_per_state, double r_max)
    : actions_per_state_(std::move(actions_per_state)), r_max_(r_max) {
    if (actions_per_state_.empty()) throw InvalidArgument("stats: need at least one state");
    if (!(r_max_ > 0.0)) throw InvalidArgument("stats: r_max must be positive");
    const std::size_t n = actions_per_state_.size();
    cells_.resize(n);
    for (StateId s = 0; s < n; ++s) {
        if (actions_per_state_[s] == 0) throw InvalidArgument("stats: state without actions");
        cells_[s].resize(actions_per_state_[s]);
        for (auto& c : cells_[s]) c.next.assign(n, 0);
    }
}

std::size_t RunningStats::max_actions() const {
    return *std::max_element(actions_per_state_.begin(), actions_per_state_.end());
}

const RunningStats::Cell& RunningStats::cell(StateId s, ActionId a) const {
    if (s >= cells_.size() || a >= cells_[s].size()) throw InvalidArgument("stats: invalid state-action pair");
    return cells_[s][a];
}

double RunningStats::reward_variance(StateId s, ActionId a) const {
    const auto& c = cell(s, a);
    return c.n >= 2 ? c.m2 / static_cast<double>(c.n - 1) : 0.0;
}

double RunningStats::p_hat(StateId s, ActionId a, StateId next) const {
    const auto& c = cell(s, a);
    return c.n == 0 ? 0.0 : static_cast<double>(c.next.at(next)) / static_cast<double>(c.n);
}

void RunningStats::update(StateId s, ActionId a, double reward, StateId next) {
    if (s >= cells_.size() || a >= cells_[s].size()) throw InvalidArgument("stats: invalid state-action pair");
    if (next >= cells_.size()) throw InvalidArgument("stats: invalid next state");
    if (!(reward >= 0.0 && reward <= r_max_)) throw InvalidArgument("stats: reward outside [0, r_max]");
    auto& c = cells_[s][a];
    c.n += 1;
    const double old_mean = c.mean;
    c.mean += (reward - old_mean) / static_cast<double>(c.n);
    c.m2 += (reward - old_mean) * (reward - c.mean);
    c.next[next] += 1;
}

void RunningStats::set_pair(StateId s, ActionId a, double mean, double sum_sq_dev,
                            std::vector<std::uint64_t> next_counts) {
    if (s >= cells_.size() || a >= cells_[s].size()) throw InvalidArgument("stats: invalid state-action pair");
    if (next_counts.size() != cells_.size()) throw InvalidArgument("stats: next_counts has the wrong size");
    if (!(mean >= 0.0 && mean <= r_max_) || !(sum_sq_dev >= 0.0))
        throw InvalidArgument("stats: mean or deviation out of range");
    auto& c = cells_[s][a];
    c.n = 0;
    for (auto k : next_counts) c.n += k;
    c.mean = mean;
    c.m2 = sum_sq_dev;
    c.next = std::move(next_counts);
}

void ConfidenceParams::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("confidence: delta must lie in (0,1)");
    if (!(alpha_r > 0.0 && alpha_r <= 1.0)) throw InvalidArgument("confidence: alpha_r must lie in (0,1]");
    if (!(alpha_p > 0.0 && alpha_p <= 1.0)) throw InvalidArgument("confidence: alpha_p must lie in (0,1]");
    if (!(r_max > 0.0)) throw InvalidArgument("confidence: r_max must be positive");
}

double log_term(const RunningStats& stats, std::uint64_t t_k, const ConfidenceParams& params) {
    if (t_k < 1) throw InvalidArgument("confidence: t_k must be at least 1");
    const double sa = static_cast<double>(stats.num_states()) * static_cast<double>(stats.max_actions());
    return std::log(2.0 * sa * static_cast<double>(t_k) / params.delta);
}

double bernstein_radius(double variance, std::uint64_t visits, double range, double alpha, double b) {
    const double n1 = std::max<double>(1.0, static_cast<double>(visits));
    const double n2 = std::max<double>(1.0, static_cast<double>(visits) - 1.0);
    return std::sqrt(14.0 * alpha * variance * b / n1) + 49.0 * alpha * range * b / (3.0 * n2);
}

double beta_r(const RunningStats& stats, StateId s, ActionId a, std::uint64_t t_k,
              const ConfidenceParams& params) {
    return bernstein_radius(stats.reward_variance(s, a), stats.visits(s, a), params.r_max, params.alpha_r,
                            log_term(stats, t_k, params));
}

double beta_p(const RunningStats& stats, StateId s, ActionId a, StateId next, std::uint64_t t_k,
              const ConfidenceParams& params) {
    const double p = stats.p_hat(s, a, next);
    return bernstein_radius(p * (1.0 - p), stats.visits(s, a), 1.0, params.alpha_p,
                            log_term(stats, t_k, params));
}

BoundedParamMdp build_confidence_set(const RunningStats& stats, std::uint64_t t_k,
                                     const ConfidenceParams& params) {
    params.validate();
    const std::size_t n = stats.num_states();
    const double b = log_term(stats, t_k, params);
    std::vector<std::vector<IntervalAction>> acts(n);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < stats.num_actions(s); ++a) {
            const auto visits = stats.visits(s, a);
            const double r = stats.reward_mean(s, a);
            const double br = bernstein_radius(stats.reward_variance(s, a), visits, params.r_max, params.alpha_r, b);
            IntervalAction act;
            act.r_lo = std::clamp(r - br, 0.0, params.r_max);
            act.r_hi = std::clamp(r + br, 0.0, params.r_max);
            act.p_lo.resize(n);
            act.p_hi.resize(n);
            for (StateId j = 0; j < n; ++j) {
                const double p = stats.p_hat(s, a, j);
                const double bp = bernstein_radius(p * (1.0 - p), visits, 1.0, params.alpha_p, b);
                act.p_lo[j] = std::clamp(p - bp, 0.0, 1.0);
                act.p_hi[j] = std::clamp(p + bp, 0.0, 1.0);
            }
            if (visits == 0) {
                // the empirical row is all zeros, so it is not a point of the box
                std::fill(act.p_lo.begin(), act.p_lo.end(), 0.0);
                std::fill(act.p_hi.begin(), act.p_hi.end(), 1.0);
            }
            acts[s].push_back(std::move(act));
        }
    return BoundedParamMdp(std::move(acts), params.r_max);
}

bool contains(const BoundedParamMdp& set, const FiniteMdp& mdp, double tol) {
    for (StateId s = 0; s < mdp.num_states(); ++s)
        for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
            const auto& box = set.action(s, a);
            const double r = mdp.reward(s, a);
            if (r < box.r_lo - tol || r > box.r_hi + tol) return false;
            for (StateId j = 0; j < mdp.num_states(); ++j) {
                const double p = mdp.trans(s, a)[j];
                if (p < box.p_lo[j] - tol || p > box.p_hi[j] + tol) return false;
            }
        }
    return true;
}

}  // namespace scal
