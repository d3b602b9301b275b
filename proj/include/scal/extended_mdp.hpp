#pragma once

#include <vector>

#include "scal/mdp.hpp"
#include "scal/span_planner.hpp"

namespace scal {

/// Reward interval and per-successor probability intervals of one action.
struct IntervalAction {
    double r_lo = 0.0;
    double r_hi = 0.0;
    Vector p_lo;
    Vector p_hi;
};

/// A fictitious action of the extended MDP: a real action together with a
/// reward and a transition vector picked inside its intervals.
struct Vertex {
    ActionId action = 0;
    double reward = 0.0;
    Vector trans;
};

class BoundedParamMdp {
  public:
    using Choice = Vertex;

    BoundedParamMdp() = default;
    /// Throws InvalidArgument naming the (s,a) whose intervals are malformed
    /// or do not admit a probability vector.
    BoundedParamMdp(std::vector<std::vector<IntervalAction>> actions, double r_max);

    /// Point intervals around the true parameters.
    static BoundedParamMdp from_mdp(const FiniteMdp& mdp);

    std::size_t num_states() const { return actions_.size(); }
    std::size_t num_actions(StateId s) const { return actions_.at(s).size(); }
    double r_max() const { return r_max_; }
    const IntervalAction& action(StateId s, ActionId a) const { return actions_.at(s).at(a); }
    const std::vector<std::vector<IntervalAction>>& actions() const { return actions_; }
    /// True when every reward interval starts at 0, which makes the truncated
    /// operator feasible everywhere on {span(v) <= c}.
    bool rewards_augmented() const;

    // Backup provider interface.
    void optimal_values(std::span<const double> v, std::span<double> out) const;
    StateBackup<Vertex> backup_at(std::span<const double> v, StateId s) const;
    double choice_value(StateId s, const Vertex& x, std::span<const double> v) const;

  private:
    std::vector<std::vector<IntervalAction>> actions_;
    std::vector<std::vector<double>> lo_mass_;
    double r_max_ = 1.0;
};

/// argmax of p.v over {p_lo <= p <= p_hi, sum p = 1}. Ties in v go to the
/// lower state index.
Vector inner_max_transition(std::span<const double> p_lo, std::span<const double> p_hi,
                            std::span<const double> v);
/// argmin counterpart (inner_max on -v).
Vector inner_min_transition(std::span<const double> p_lo, std::span<const double> p_hi,
                            std::span<const double> v);

/// Greedy and minimal backups of state s with their vertices.
inline StateBackup<Vertex> extended_backup(const BoundedParamMdp& bmdp, std::span<const double> v,
                                           StateId s) {
    return bmdp.backup_at(v, s);
}

/// Rewards widened down to 0 and the attract column forced to carry at least
/// eta. eta = 0 only widens rewards.
BoundedParamMdp modify(const BoundedParamMdp& bmdp, double eta, StateId attract);

using ExtendedDecision = SpanPolicy<Vertex>;

struct EviOptions {
    double eps = 1e-6;
    std::size_t max_iter = 10'000'000;
    StateId ref_state = 0;
};

struct EviResult {
    Vector u;
    ExtendedDecision decision;
    double gain_estimate = 0.0;
    std::size_t iterations = 0;
};

/// Extended value iteration: u <- L~ u (pinned at ref_state) until
/// span(u_{n+1} - u_n) <= eps. Decision is greedy w.r.t. the last u_n.
EviResult evi(const BoundedParamMdp& bmdp, const EviOptions& options = {});

/// G_c on the extended MDP. On a reward-augmented model with span(v) <= c
/// every state must come out feasible; a violation throws std::logic_error.
ExtendedDecision extended_span_policy(const BoundedParamMdp& bmdp, std::span<const double> v,
                                      SpanConstraint c);

/// Distribution over real actions in each state induced by a decision.
std::vector<Vector> action_marginal(const BoundedParamMdp& bmdp, const ExtendedDecision& decision);

}  // namespace scal
