#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scal/confidence.hpp"
#include "scal/extended_mdp.hpp"

namespace scal {

enum class AgentMode { Ucrl, Scal, ScalBestOfBoth };
/// Theoretical schedules follow the regret analysis; Zero switches the
/// perturbation (eta) or the contraction factor (gamma) off.
enum class ScheduleMode { Theoretical, Zero };

struct AgentConfig {
    AgentMode mode = AgentMode::Ucrl;
    double c = kInfinity;
    double delta = 0.1;
    double r_max = 1.0;
    double alpha_r = 1.0;
    double alpha_p = 1.0;
    ScheduleMode eta_mode = ScheduleMode::Theoretical;
    ScheduleMode gamma_mode = ScheduleMode::Theoretical;
    StateId attract_state = 0;
    std::uint64_t seed = 0;
    std::size_t planner_max_iter = 1'000'000;

    void validate(std::size_t num_states) const;
    ConfidenceParams confidence() const { return {delta, alpha_r, alpha_p, r_max}; }
};

struct PlannerDiagnostics {
    std::string planner;  // "evi" or "scopt"
    std::size_t iterations = 0;
    double value_span = 0.0;
    double gain_estimate = 0.0;
    double eta = 0.0;
    double gamma = 0.0;
    double accuracy = 0.0;
    // best-of-both records both candidates
    std::optional<double> evi_span;
    std::optional<double> scopt_span;
};

struct EpisodeState {
    std::size_t index = 0;
    std::uint64_t start_time = 1;
    std::vector<std::vector<std::uint64_t>> frozen_counts;  // N_k
    std::vector<std::vector<std::uint64_t>> episode_counts;  // nu_k
    std::vector<Vector> policy;  // executable action distribution per state
    ExtendedDecision decision;
    Vector value;
    PlannerDiagnostics diagnostics;
};

enum class StepOutcome { Continue, EpisodeEnd };

/// Optimistic episodic learner. Episodes are replanned lazily: the first
/// act() after an episode end builds the next plan.
class Agent {
  public:
    Agent(std::vector<std::size_t> actions_per_state, AgentConfig config);

    /// Plan from the current statistics and time; starts a new episode.
    const EpisodeState& plan_episode();
    ActionId act(StateId s, std::mt19937_64& rng);
    /// Record the transition of the last act(). Returns EpisodeEnd when the
    /// next step would break the episode guard.
    StepOutcome observe(StateId s, ActionId a, double reward, StateId next, std::mt19937_64& rng);

    std::uint64_t time() const { return t_; }
    std::size_t episodes() const { return episode_.index; }
    bool has_episode() const { return active_; }
    const EpisodeState& episode() const { return episode_; }
    const RunningStats& stats() const { return stats_; }
    const AgentConfig& config() const { return config_; }
    /// Replace the statistics and the clock, e.g. to plan on known data.
    void set_stats(RunningStats stats, std::uint64_t t);

  private:
    ActionId draw(StateId s, std::mt19937_64& rng) const;
    bool guard_allows(StateId s, ActionId a) const;

    AgentConfig config_;
    RunningStats stats_;
    EpisodeState episode_;
    std::uint64_t t_ = 1;
    bool active_ = false;
    std::optional<std::pair<StateId, ActionId>> pending_;
    std::optional<std::pair<StateId, ActionId>> last_;
};

/// Executable policy from an extended decision (mixture over vertices
/// marginalised onto real actions).
std::vector<Vector> executable_policy(const BoundedParamMdp& set, const ExtendedDecision& decision);

}  // namespace scal
