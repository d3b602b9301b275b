#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "scal/errors.hpp"

namespace scal {

using StateId = std::size_t;
using ActionId = std::size_t;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RewardKind { Deterministic, Bernoulli };

/// One action available in a state: mean reward, how rewards are drawn and
/// the next-state distribution. A Bernoulli reward pays r_max with
/// probability reward_mean / r_max and 0 otherwise.
struct ActionSpec {
    double reward_mean = 0.0;
    RewardKind reward_kind = RewardKind::Deterministic;
    Vector trans;
};

/// Value of one state after a backup together with the choice realising it.
template <class Choice>
struct StateBackup {
    double greedy_value;
    Choice greedy;
    double minimal_value;
    Choice minimal;
};

class FiniteMdp {
  public:
    using Choice = ActionId;

    FiniteMdp() = default;
    /// Validates every row; throws InvalidArgument naming the bad (s,a).
    FiniteMdp(std::vector<std::vector<ActionSpec>> actions, double r_max);

    std::size_t num_states() const { return actions_.size(); }
    std::size_t num_actions(StateId s) const { return actions_.at(s).size(); }
    std::size_t max_actions() const;
    std::size_t total_pairs() const;
    double r_max() const { return r_max_; }
    /// Largest number of nonzero entries in a transition row.
    std::size_t support_gamma() const;

    const ActionSpec& action(StateId s, ActionId a) const { return actions_.at(s).at(a); }
    const std::vector<std::vector<ActionSpec>>& actions() const { return actions_; }
    double reward(StateId s, ActionId a) const { return action(s, a).reward_mean; }
    const Vector& trans(StateId s, ActionId a) const { return action(s, a).trans; }

    /// r(s,a) + p(.|s,a)^T v
    double q_value(StateId s, ActionId a, std::span<const double> v) const;

    // Backup provider interface.
    void optimal_values(std::span<const double> v, std::span<double> out) const;
    StateBackup<ActionId> backup_at(std::span<const double> v, StateId s) const;
    double choice_value(StateId s, const ActionId& a, std::span<const double> v) const {
        return q_value(s, a, v);
    }
    ActionId choice_action(const ActionId& a) const { return a; }

  private:
    std::vector<std::vector<ActionSpec>> actions_;
    double r_max_ = 1.0;
};

/// Per-state distribution over actions.
class DecisionRule {
  public:
    DecisionRule() = default;
    explicit DecisionRule(std::vector<Vector> probs) : probs(std::move(probs)) {}

    static DecisionRule deterministic(const FiniteMdp& mdp, const std::vector<ActionId>& choice);
    static DecisionRule uniform(const FiniteMdp& mdp);

    /// Throws InvalidArgument unless shapes match mdp and every row is a
    /// probability vector (tolerance 1e-12).
    void validate(const FiniteMdp& mdp) const;
    bool is_deterministic() const;

    std::vector<Vector> probs;
};

struct GainBias {
    Vector gain;
    Vector bias;
    bool constant_gain = false;

    /// Midpoint of the gain vector; meaningful when constant_gain.
    double scalar_gain() const;
};

/// max(v) - min(v). Throws on empty or non-finite input.
double span(std::span<const double> v);

/// u - v componentwise.
Vector difference(std::span<const double> u, std::span<const double> v);

struct GreedyBackup {
    Vector values;
    std::vector<ActionId> actions;
    DecisionRule rule(const FiniteMdp& mdp) const {
        return DecisionRule::deterministic(mdp, actions);
    }
};

/// L v with the deterministic greedy rule (lowest action id on ties).
GreedyBackup bellman_optimal(const FiniteMdp& mdp, std::span<const double> v);

/// r_d + P_d v
Vector bellman_policy(const FiniteMdp& mdp, const DecisionRule& d, std::span<const double> v);

/// Action-averaged reward vector and (row-major) transition matrix of a rule.
Vector policy_rewards(const FiniteMdp& mdp, const DecisionRule& d);
std::vector<Vector> policy_matrix(const FiniteMdp& mdp, const DecisionRule& d);

struct EvaluationOptions {
    StateId reference_state = 0;
    /// Power iterations for the Cesaro limit; each one squares the matrix.
    std::size_t max_power_steps = 10000;
    double tolerance = 1e-10;
};

/// Gain and bias of the chain induced by d, valid for multichain policies.
GainBias evaluate_policy(const FiniteMdp& mdp, const DecisionRule& d,
                         const EvaluationOptions& options = {});

/// Stationary (Cesaro-limit) matrix of a row-stochastic matrix.
std::vector<Vector> limiting_matrix(const std::vector<Vector>& p,
                                    const EvaluationOptions& options = {});

struct OptimalityOptions {
    double eps = 1e-8;
    std::size_t max_iter = 10'000'000;
    StateId reference_state = 0;
    /// Self-loop mixing weight for the aperiodicity transform; 1 disables it.
    double aperiodicity = 0.5;
};

/// Relative value iteration on the optimality equation. The returned gain is
/// constant; bias is pinned to 0 at the reference state.
GainBias optimal_gain_bias(const FiniteMdp& mdp, const OptimalityOptions& options = {});

struct DiameterOptions {
    double eps = 1e-6;
    double cap = 1e7;
    std::size_t max_iter = 100'000'000;
};

/// Max over ordered pairs of minimal expected hitting times; kInfinity when a
/// target cannot be reached or hitting times exceed the cap.
double diameter(const FiniteMdp& mdp, const DiameterOptions& options = {});

/// Minimal expected hitting times to `target` from every state.
Vector hitting_times(const FiniteMdp& mdp, StateId target, const DiameterOptions& options = {});

struct ConstrainedPolicy {
    std::vector<ActionId> actions;
    GainBias evaluation;
};

/// Deterministic rules with constant gain and span(h) <= c (+1e-9).
std::vector<ConstrainedPolicy> enumerate_deterministic_pi_c(const FiniteMdp& mdp, double c,
                                                            std::size_t cap = 1'000'000);

}  // namespace scal
