#include "scal/environments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

namespace scal {

namespace {

ActionSpec det(double reward, std::size_t n, StateId to) {
    ActionSpec a;
    a.reward_mean = reward;
    a.trans.assign(n, 0.0);
    a.trans[to] = 1.0;
    return a;
}

ActionSpec bernoulli(double mean, Vector trans) {
    ActionSpec a;
    a.reward_mean = mean;
    a.reward_kind = RewardKind::Bernoulli;
    a.trans = std::move(trans);
    return a;
}

// Knight Quest layout
constexpr int kGrid = 4;
constexpr std::pair<int, int> kTown{0, 3};
constexpr std::pair<int, int> kPrincess{0, 0};
constexpr std::pair<int, int> kMine{3, 1};
constexpr std::array<std::pair<int, int>, 3> kDragonCells{{{0, 1}, {1, 0}, {1, 1}}};
constexpr std::array<std::array<double, 3>, 3> kDragonMoves{{{0.4, 0.0, 0.6}, {0.0, 0.4, 0.6}, {0.4, 0.2, 0.4}}};
constexpr std::array<std::pair<int, int>, 5> kMoves{{{0, 1}, {1, 0}, {0, -1}, {-1, 0}, {0, 0}}};
constexpr int kCollectGold = 5;
constexpr int kBuyKey = 6;

bool has_key(int o) { return o == 1 || o == 3; }
bool has_armour(int o) { return o == 2 || o == 3; }
double scaled(double r) { return (r + 20.0) / 40.0; }

bool knight_state_exists(std::pair<int, int> pos, int dragon, int object) {
    // reaching the princess with the key ends the episode; an unarmoured
    // knight sharing the dragon's cell has been killed
    if (pos == kPrincess && has_key(object)) return false;
    if (pos == kDragonCells[dragon] && !has_armour(object)) return false;
    return true;
}

}  // namespace

EnvInstance make_two_state() {
    std::vector<std::vector<ActionSpec>> acts(2);
    acts[0] = {det(0.0, 2, 1), det(0.5, 2, 0)};
    acts[1] = {det(0.0, 2, 0), det(1.0, 2, 1)};
    EnvInstance env{"two_state", FiniteMdp(std::move(acts), 1.0)};
    env.gain = 1.0;
    return env;
}

EnvInstance make_three_state(double delta) {
    if (!(delta >= 0.0 && delta < 1.0)) throw InvalidArgument("three_state: delta must lie in [0,1)");
    std::vector<std::vector<ActionSpec>> acts(3);
    acts[0] = {bernoulli(0.0, {0.0, delta, 1.0 - delta})};
    acts[0][0].reward_kind = RewardKind::Deterministic;
    acts[1] = {bernoulli(1.0 / 3.0, {1.0, 0.0, 0.0})};
    acts[2] = {bernoulli(2.0 / 3.0, {1.0 - delta, delta, 0.0}), bernoulli(2.0 / 3.0, {0.0, 0.0, 1.0})};
    EnvInstance env{"three_state", FiniteMdp(std::move(acts), 1.0)};
    env.gain = 2.0 / 3.0;
    env.bias = Vector{(-2.0 - delta) / (3.0 * (1.0 - delta)), -1.0 / (1.0 - delta), 0.0};
    env.bias_span = 1.0 / (1.0 - delta);
    env.diameter = delta > 0.0 ? std::max(1.0 / delta, 2.0 / (1.0 - delta)) : kInfinity;
    return env;
}

std::vector<KnightState> knight_quest_states() {
    std::vector<KnightState> out;
    for (int r = 0; r < kGrid; ++r)
        for (int c = 0; c < kGrid; ++c)
            for (int g = 0; g < 2; ++g)
                for (int d = 0; d < 3; ++d)
                    for (int o = 0; o < 4; ++o)
                        if (knight_state_exists({r, c}, d, o)) out.push_back({r, c, g, d, o});
    return out;
}

EnvInstance make_knight_quest() {
    const auto states = knight_quest_states();
    const std::size_t n = states.size();
    std::map<std::tuple<int, int, int, int, int>, StateId> index;
    for (StateId i = 0; i < n; ++i) {
        const auto& x = states[i];
        index[{x.row, x.col, x.gold, x.dragon, x.object}] = i;
    }
    std::array<StateId, 3> resets{};
    for (int d = 0; d < 3; ++d) resets[d] = index.at({kTown.first, kTown.second, 0, d, 0});

    struct Outcome {
        double prob;
        std::pair<int, int> pos;
        int gold;
        int object;
        double reward;
    };

    std::vector<std::vector<ActionSpec>> acts(n);
    for (StateId i = 0; i < n; ++i) {
        const auto& x = states[i];
        const std::pair<int, int> pos{x.row, x.col};
        const bool armour = has_armour(x.object);
        for (int a = 0; a < 8; ++a) {
            std::vector<Outcome> outcomes;
            if (a < 5) {
                const std::pair<int, int> to{std::clamp(pos.first + kMoves[a].first, 0, kGrid - 1),
                                             std::clamp(pos.second + kMoves[a].second, 0, kGrid - 1)};
                if (armour && a != 4)
                    outcomes = {{0.5, to, x.gold, x.object, -1.0}, {0.5, pos, x.gold, x.object, -1.0}};
                else
                    outcomes = {{1.0, to, x.gold, x.object, -1.0}};
            } else if (a == kCollectGold) {
                if (pos != kMine)
                    outcomes = {{1.0, pos, x.gold, x.object, -10.0}};
                else if (armour)
                    outcomes = {{0.01, pos, 1, x.object, -1.0}, {0.99, pos, x.gold, x.object, -1.0}};
                else
                    outcomes = {{1.0, pos, 1, x.object, -1.0}};
            } else {
                if (pos == kTown && x.gold == 1) {
                    const int bought = a == kBuyKey ? 1 : 2;
                    const int object = x.object == 0 ? bought : 3;
                    outcomes = {{1.0, pos, 0, object, -1.0}};
                } else {
                    outcomes = {{1.0, pos, x.gold, x.object, -10.0}};
                }
            }

            ActionSpec spec;
            spec.trans.assign(n, 0.0);
            for (const auto& out : outcomes)
                for (int nd = 0; nd < 3; ++nd) {
                    const double q = out.prob * kDragonMoves[x.dragon][nd];
                    if (q == 0.0) continue;
                    double reward = out.reward;
                    bool reset = false;
                    if (out.pos == kPrincess && has_key(out.object)) {
                        reward = 20.0;
                        reset = true;
                    } else if (out.pos == kDragonCells[nd] && !has_armour(out.object)) {
                        reward = -20.0;
                        reset = true;
                    }
                    spec.reward_mean += q * scaled(reward);
                    if (reset) {
                        for (StateId r : resets) spec.trans[r] += q / 3.0;
                    } else {
                        spec.trans[index.at({out.pos.first, out.pos.second, out.gold, nd, out.object})] += q;
                    }
                }
            spec.reward_mean = std::clamp(spec.reward_mean, 0.0, 1.0);
            acts[i].push_back(std::move(spec));
        }
    }
    EnvInstance env{"knight_quest", FiniteMdp(std::move(acts), 1.0)};
    env.initial_state = resets[0];
    env.gain = 0.5;
    env.bias_span = 3.28;
    return env;
}

EnvInstance make_counterexample(Counterexample which, const std::vector<double>& params) {
    switch (which) {
        case Counterexample::Infeasible: {
            if (!params.empty()) throw InvalidArgument("counterexample b1 takes no parameters");
            std::vector<std::vector<ActionSpec>> acts(2);
            acts[0] = {det(0.0, 2, 1), det(0.0, 2, 0)};
            acts[1] = {det(1.0, 2, 0), det(1.0, 2, 1)};
            return {"counterexample_b1", FiniteMdp(std::move(acts), 1.0)};
        }
        case Counterexample::Chain: {
            const Vector p = params.empty() ? Vector{0.3, 0.1, 0.2} : params;
            if (p.size() != 3) throw InvalidArgument("counterexample b2 takes (alpha, beta, delta)");
            const double alpha = p[0], beta = p[1], delta = p[2];
            if (!(0.0 <= beta && beta < delta && delta < alpha && alpha <= 1.0))
                throw InvalidArgument("counterexample b2 needs 0 <= beta < delta < alpha <= 1");
            std::vector<std::vector<ActionSpec>> acts(3);
            acts[0] = {det(alpha, 3, 1)};
            acts[1] = {det(beta, 3, 2), det(delta, 3, 2)};
            acts[2] = {det(0.0, 3, 2)};
            EnvInstance env{"counterexample_b2", FiniteMdp(std::move(acts), 1.0)};
            env.gain = 0.0;
            return env;
        }
        case Counterexample::NoisyCycle: {
            const Vector p = params.empty() ? Vector{0.5} : params;
            if (p.size() != 1) throw InvalidArgument("counterexample b3 takes (delta)");
            const double delta = p[0];
            if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("counterexample b3 needs 0 < delta < 1");
            std::vector<std::vector<ActionSpec>> acts(3);
            ActionSpec loop;
            loop.reward_mean = 1.0;
            loop.trans = {delta, 1.0 - delta, 0.0};
            acts[0] = {loop};
            acts[1] = {det(0.0, 3, 2)};
            acts[2] = {det(0.0, 3, 0)};
            return {"counterexample_b3", FiniteMdp(std::move(acts), 1.0)};
        }
    }
    throw InvalidArgument("unknown counterexample");
}

Transition sample(const FiniteMdp& mdp, StateId s, ActionId a, std::mt19937_64& rng) {
    if (s >= mdp.num_states() || a >= mdp.num_actions(s)) throw InvalidArgument("sample: invalid state-action pair");
    const auto& act = mdp.action(s, a);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double reward = act.reward_mean;
    if (act.reward_kind == RewardKind::Bernoulli)
        reward = unit(rng) < act.reward_mean / mdp.r_max() ? mdp.r_max() : 0.0;
    double u = unit(rng);
    StateId next = 0;
    StateId last_positive = 0;
    for (StateId j = 0; j < act.trans.size(); ++j) {
        if (act.trans[j] <= 0.0) continue;
        last_positive = j;
        if (u < act.trans[j]) {
            next = j;
            return {reward, next};
        }
        u -= act.trans[j];
    }
    return {reward, last_positive};
}

FiniteMdp random_mdp(std::size_t num_states, std::size_t num_actions, std::size_t branching,
                     std::mt19937_64& rng) {
    if (num_states == 0 || num_actions == 0 || branching == 0)
        throw InvalidArgument("random_mdp: sizes must be positive");
    branching = std::min(branching, num_states);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> gamma1(1.0);
    std::vector<StateId> perm(num_states);
    std::vector<std::vector<ActionSpec>> acts(num_states);
    for (StateId s = 0; s < num_states; ++s)
        for (ActionId a = 0; a < num_actions; ++a) {
            std::iota(perm.begin(), perm.end(), StateId{0});
            std::shuffle(perm.begin(), perm.end(), rng);
            ActionSpec spec;
            spec.reward_mean = unit(rng);
            spec.trans.assign(num_states, 0.0);
            double total = 0.0;
            for (std::size_t k = 0; k < branching; ++k) {
                const double w = gamma1(rng) + 1e-12;
                spec.trans[perm[k]] = w;
                total += w;
            }
            for (double& p : spec.trans) p /= total;
            acts[s].push_back(std::move(spec));
        }
    return FiniteMdp(std::move(acts), 1.0);
}

}  // namespace scal
