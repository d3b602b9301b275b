#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scal/mdp.hpp"

namespace scal {

/// An MDP plus the reference quantities known for it in closed form.
struct EnvInstance {
    EnvInstance() = default;
    EnvInstance(std::string name, FiniteMdp mdp) : name(std::move(name)), mdp(std::move(mdp)) {}

    std::string name;
    FiniteMdp mdp;
    StateId initial_state = 0;
    std::optional<double> gain;
    std::optional<Vector> bias;
    std::optional<double> bias_span;
    std::optional<double> diameter;
};

/// Two states, two deterministic actions each. In s0 action 0 moves to s1
/// (reward 0) and action 1 stays (reward 0.5); in s1 action 0 moves to s0
/// (reward 0) and action 1 stays (reward 1).
EnvInstance make_two_state();

/// Three-state domain with Bernoulli rewards. delta in [0,1); delta = 0 makes
/// the chain weakly communicating with infinite diameter.
EnvInstance make_three_state(double delta);

/// 4x4 Knight Quest grid, 360 states, 8 actions, rewards scaled to [0,1].
EnvInstance make_knight_quest();

enum class Counterexample {
    Infeasible,   // two states where T_c has no policy at v = 0
    Chain,        // params (alpha, beta, delta) with beta < delta < alpha <= 1
    NoisyCycle,   // params (delta) in (0,1)
};

/// Small regression MDPs for the truncated operator. Empty params take the
/// defaults (0.3, 0.1, 0.2) and (0.5).
EnvInstance make_counterexample(Counterexample which, const std::vector<double>& params = {});

struct Transition {
    double reward;
    StateId next;
};

/// Draw a reward and a next state for (s,a).
Transition sample(const FiniteMdp& mdp, StateId s, ActionId a, std::mt19937_64& rng);

/// Random MDP with `branching` successors per row (Dirichlet(1) weights) and
/// uniform deterministic rewards in [0, 1].
FiniteMdp random_mdp(std::size_t num_states, std::size_t num_actions, std::size_t branching,
                     std::mt19937_64& rng);

/// Knight Quest state layout, exposed for inspection and tests.
struct KnightState {
    int row;
    int col;
    int gold;    // 0 or 1
    int dragon;  // 0, 1, 2
    int object;  // 0 none, 1 key, 2 armour, 3 both
};
std::vector<KnightState> knight_quest_states();

}  // namespace scal
