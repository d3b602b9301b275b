#pragma once

#include <cstdint>
#include <vector>

#include "scal/extended_mdp.hpp"
#include "scal/mdp.hpp"

namespace scal {

/// Visit counts, Welford reward accumulators and transition counts per
/// state-action pair.
class RunningStats {
  public:
    RunningStats() = default;
    RunningStats(std::vector<std::size_t> actions_per_state, double r_max);

    std::size_t num_states() const { return actions_per_state_.size(); }
    std::size_t num_actions(StateId s) const { return actions_per_state_.at(s); }
    std::size_t max_actions() const;
    const std::vector<std::size_t>& actions_per_state() const { return actions_per_state_; }
    double r_max() const { return r_max_; }

    std::uint64_t visits(StateId s, ActionId a) const { return cell(s, a).n; }
    double reward_mean(StateId s, ActionId a) const { return cell(s, a).mean; }
    double sum_sq_dev(StateId s, ActionId a) const { return cell(s, a).m2; }
    /// Unbiased sample variance; 0 below two samples.
    double reward_variance(StateId s, ActionId a) const;
    std::uint64_t transitions(StateId s, ActionId a, StateId next) const {
        return cell(s, a).next.at(next);
    }
    double p_hat(StateId s, ActionId a, StateId next) const;

    /// One observation; reward must lie in [0, r_max].
    void update(StateId s, ActionId a, double reward, StateId next);
    /// Overwrite the accumulators of one pair, e.g. to plan on synthetic data.
    void set_pair(StateId s, ActionId a, double mean, double sum_sq_dev,
                  std::vector<std::uint64_t> next_counts);

  private:
    struct Cell {
        std::uint64_t n = 0;
        double mean = 0.0;
        double m2 = 0.0;
        std::vector<std::uint64_t> next;
    };
    const Cell& cell(StateId s, ActionId a) const;

    std::vector<std::size_t> actions_per_state_;
    std::vector<std::vector<Cell>> cells_;
    double r_max_ = 1.0;
};

inline void welford_update(RunningStats& stats, StateId s, ActionId a, double reward, StateId next) {
    stats.update(s, a, reward, next);
}

struct ConfidenceParams {
    double delta = 0.1;
    double alpha_r = 1.0;
    double alpha_p = 1.0;
    double r_max = 1.0;

    void validate() const;
    static ConfidenceParams theoretical(double delta, double r_max) { return {delta, 1.0, 1.0, r_max}; }
};

/// ln(2 S A t_k / delta) with A the largest action count.
double log_term(const RunningStats& stats, std::uint64_t t_k, const ConfidenceParams& params);

/// sqrt(14 a v b / max(1,N)) + 49 a R b / (3 max(1, N-1))
double bernstein_radius(double variance, std::uint64_t visits, double range, double alpha, double b);

double beta_r(const RunningStats& stats, StateId s, ActionId a, std::uint64_t t_k,
              const ConfidenceParams& params);
double beta_p(const RunningStats& stats, StateId s, ActionId a, StateId next, std::uint64_t t_k,
              const ConfidenceParams& params);

/// Empirical means widened by the radii and clipped to [0, r_max], [0, 1].
BoundedParamMdp build_confidence_set(const RunningStats& stats, std::uint64_t t_k,
                                     const ConfidenceParams& params);

/// True when every reward mean and transition row of mdp lies in the set.
bool contains(const BoundedParamMdp& set, const FiniteMdp& mdp, double tol = 1e-12);

}  // namespace scal
