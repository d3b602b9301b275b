#include "scal/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include <Eigen/Dense>

namespace scal {

namespace {

std::string pair_name(StateId s, ActionId a) {
    std::ostringstream os;
    os << "(s=" << s << ", a=" << a << ")";
    return os.str();
}

void check_size(std::span<const double> v, std::size_t n, const char* what) {
    if (v.size() != n) {
        std::ostringstream os;
        os << what << ": expected vector of size " << n << ", got " << v.size();
        throw InvalidArgument(os.str());
    }
}

Eigen::MatrixXd to_eigen(const std::vector<Vector>& m) {
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m[i][j];
    return out;
}

}  // namespace

FiniteMdp::FiniteMdp(std::vector<std::vector<ActionSpec>> actions, double r_max)
    : actions_(std::move(actions)), r_max_(r_max) {
    if (actions_.empty()) throw InvalidArgument("mdp: num_states must be positive");
    if (!(r_max_ > 0.0) || !std::isfinite(r_max_))
        throw InvalidArgument("mdp: r_max must be positive and finite");
    const std::size_t n = actions_.size();
    for (StateId s = 0; s < n; ++s) {
        if (actions_[s].empty())
            throw InvalidArgument("mdp: state " + std::to_string(s) + " has no actions");
        for (ActionId a = 0; a < actions_[s].size(); ++a) {
            const auto& act = actions_[s][a];
            if (!(act.reward_mean >= 0.0 && act.reward_mean <= r_max_))
                throw InvalidArgument("mdp: reward_mean outside [0, r_max] at " + pair_name(s, a));
            if (act.trans.size() != n)
                throw InvalidArgument("mdp: transition row has wrong length at " + pair_name(s, a));
            double total = 0.0;
            for (double p : act.trans) {
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw InvalidArgument("mdp: negative or non-finite probability at " +
                                          pair_name(s, a));
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw InvalidArgument("mdp: transition row does not sum to 1 at " + pair_name(s, a));
        }
    }
}

std::size_t FiniteMdp::max_actions() const {
    std::size_t m = 0;
    for (const auto& acts : actions_) m = std::max(m, acts.size());
    return m;
}

std::size_t FiniteMdp::total_pairs() const {
    std::size_t m = 0;
    for (const auto& acts : actions_) m += acts.size();
    return m;
}

std::size_t FiniteMdp::support_gamma() const {
    std::size_t g = 0;
    for (const auto& acts : actions_)
        for (const auto& act : acts)
            g = std::max<std::size_t>(
                g, std::count_if(act.trans.begin(), act.trans.end(), [](double p) { return p > 0; }));
    return g;
}

double FiniteMdp::q_value(StateId s, ActionId a, std::span<const double> v) const {
    const auto& act = actions_[s][a];
    double q = act.reward_mean;
    const std::size_t n = v.size();
    for (std::size_t j = 0; j < n; ++j)
        if (act.trans[j] != 0.0) q += act.trans[j] * v[j];
    return q;
}

void FiniteMdp::optimal_values(std::span<const double> v, std::span<double> out) const {
    check_size(v, num_states(), "optimal_values");
    for (StateId s = 0; s < num_states(); ++s) {
        double best = -kInfinity;
        for (ActionId a = 0; a < actions_[s].size(); ++a) best = std::max(best, q_value(s, a, v));
        out[s] = best;
    }
}

StateBackup<ActionId> FiniteMdp::backup_at(std::span<const double> v, StateId s) const {
    StateBackup<ActionId> b{-kInfinity, 0, kInfinity, 0};
    for (ActionId a = 0; a < actions_[s].size(); ++a) {
        const double q = q_value(s, a, v);
        if (q > b.greedy_value) {
            b.greedy_value = q;
            b.greedy = a;
        }
        if (q < b.minimal_value) {
            b.minimal_value = q;
            b.minimal = a;
        }
    }
    return b;
}

DecisionRule DecisionRule::deterministic(const FiniteMdp& mdp, const std::vector<ActionId>& choice) {
    if (choice.size() != mdp.num_states())
        throw InvalidArgument("deterministic rule: one action per state required");
    std::vector<Vector> probs(mdp.num_states());
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (choice[s] >= mdp.num_actions(s))
            throw InvalidArgument("deterministic rule: action out of range at state " +
                                  std::to_string(s));
        probs[s].assign(mdp.num_actions(s), 0.0);
        probs[s][choice[s]] = 1.0;
    }
    return DecisionRule(std::move(probs));
}

DecisionRule DecisionRule::uniform(const FiniteMdp& mdp) {
    std::vector<Vector> probs(mdp.num_states());
    for (StateId s = 0; s < mdp.num_states(); ++s)
        probs[s].assign(mdp.num_actions(s), 1.0 / static_cast<double>(mdp.num_actions(s)));
    return DecisionRule(std::move(probs));
}

void DecisionRule::validate(const FiniteMdp& mdp) const {
    if (probs.size() != mdp.num_states())
        throw InvalidArgument("decision rule: wrong number of states");
    for (StateId s = 0; s < probs.size(); ++s) {
        if (probs[s].size() != mdp.num_actions(s))
            throw InvalidArgument("decision rule: wrong number of actions at state " +
                                  std::to_string(s));
        double total = 0.0;
        for (double w : probs[s]) {
            if (!(w >= 0.0))
                throw InvalidArgument("decision rule: negative weight at state " + std::to_string(s));
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw InvalidArgument("decision rule: weights do not sum to 1 at state " +
                                  std::to_string(s));
    }
}

bool DecisionRule::is_deterministic() const {
    for (const auto& row : probs)
        if (std::count_if(row.begin(), row.end(), [](double w) { return w > 0; }) != 1) return false;
    return true;
}

double GainBias::scalar_gain() const {
    const auto [lo, hi] = std::minmax_element(gain.begin(), gain.end());
    return 0.5 * (*lo + *hi);
}

double span(std::span<const double> v) {
    if (v.empty()) throw InvalidArgument("span: empty vector");
    double lo = v[0], hi = v[0];
    for (double x : v) {
        if (!std::isfinite(x)) throw InvalidArgument("span: non-finite entry");
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return hi - lo;
}

Vector difference(std::span<const double> u, std::span<const double> v) {
    check_size(v, u.size(), "difference");
    Vector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - v[i];
    return out;
}

GreedyBackup bellman_optimal(const FiniteMdp& mdp, std::span<const double> v) {
    check_size(v, mdp.num_states(), "bellman_optimal");
    GreedyBackup out;
    out.values.resize(mdp.num_states());
    out.actions.resize(mdp.num_states());
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        const auto b = mdp.backup_at(v, s);
        out.values[s] = b.greedy_value;
        out.actions[s] = b.greedy;
    }
    return out;
}

Vector bellman_policy(const FiniteMdp& mdp, const DecisionRule& d, std::span<const double> v) {
    check_size(v, mdp.num_states(), "bellman_policy");
    d.validate(mdp);
    Vector out(mdp.num_states(), 0.0);
    for (StateId s = 0; s < mdp.num_states(); ++s)
        for (ActionId a = 0; a < mdp.num_actions(s); ++a)
            if (d.probs[s][a] > 0.0) out[s] += d.probs[s][a] * mdp.q_value(s, a, v);
    return out;
}

Vector policy_rewards(const FiniteMdp& mdp, const DecisionRule& d) {
    d.validate(mdp);
    Vector r(mdp.num_states(), 0.0);
    for (StateId s = 0; s < mdp.num_states(); ++s)
        for (ActionId a = 0; a < mdp.num_actions(s); ++a) r[s] += d.probs[s][a] * mdp.reward(s, a);
    return r;
}

std::vector<Vector> policy_matrix(const FiniteMdp& mdp, const DecisionRule& d) {
    d.validate(mdp);
    const std::size_t n = mdp.num_states();
    std::vector<Vector> p(n, Vector(n, 0.0));
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < mdp.num_actions(s); ++a)
            if (d.probs[s][a] > 0.0)
                for (StateId j = 0; j < n; ++j) p[s][j] += d.probs[s][a] * mdp.trans(s, a)[j];
    return p;
}

std::vector<Vector> limiting_matrix(const std::vector<Vector>& p, const EvaluationOptions& options) {
    const auto n = static_cast<Eigen::Index>(p.size());
    Eigen::MatrixXd q = 0.5 * (to_eigen(p) + Eigen::MatrixXd::Identity(n, n));
    bool converged = false;
    for (std::size_t k = 0; k < options.max_power_steps; ++k) {
        Eigen::MatrixXd next = q * q;
        // keep rows stochastic against rounding drift
        for (Eigen::Index i = 0; i < n; ++i) next.row(i) /= next.row(i).sum();
        const double change = (next - q).cwiseAbs().maxCoeff();
        q = std::move(next);
        if (change <= options.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NumericalFailure("limiting_matrix: power iteration did not settle");
    std::vector<Vector> out(p.size(), Vector(p.size()));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out[i][j] = q(i, j);
    return out;
}

GainBias evaluate_policy(const FiniteMdp& mdp, const DecisionRule& d, const EvaluationOptions& options) {
    const std::size_t n = mdp.num_states();
    if (options.reference_state >= n) throw InvalidArgument("evaluate_policy: bad reference state");
    const auto p_rows = policy_matrix(mdp, d);
    const Vector r_rows = policy_rewards(mdp, d);

    const Eigen::MatrixXd p = to_eigen(p_rows);
    const Eigen::MatrixXd pstar = to_eigen(limiting_matrix(p_rows, options));
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(r_rows.data(), n);
    const auto ni = static_cast<Eigen::Index>(n);

    const Eigen::VectorXd g = pstar * r;
    const Eigen::MatrixXd fundamental = Eigen::MatrixXd::Identity(ni, ni) - p + pstar;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(fundamental);
    if (!lu.isInvertible())
        throw NumericalFailure("evaluate_policy: fundamental matrix is singular");
    Eigen::VectorXd h = lu.solve(r) - g;  // (I - P + P*)^{-1} r - P* r

    // Check both evaluation equations before handing the result out.
    const double scale = 1.0 + r.cwiseAbs().maxCoeff();
    const double res_g = (g - p * g).cwiseAbs().maxCoeff();
    const double res_h = (h - (r - g + p * h)).cwiseAbs().maxCoeff();
    const double residual = std::max(res_g, res_h);
    if (!(residual <= 1e-9 * scale)) {
        std::ostringstream os;
        os << "evaluate_policy: evaluation equations violated, residual " << residual;
        throw NumericalFailure(os.str(), residual);
    }

    GainBias out;
    out.gain.assign(g.data(), g.data() + n);
    const double pin = h(static_cast<Eigen::Index>(options.reference_state));
    out.bias.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.bias[i] = h(static_cast<Eigen::Index>(i)) - pin;
    out.constant_gain = span(out.gain) <= 1e-9;
    return out;
}

GainBias optimal_gain_bias(const FiniteMdp& mdp, const OptimalityOptions& options) {
    const std::size_t n = mdp.num_states();
    if (!(options.eps > 0.0)) throw InvalidArgument("optimal_gain_bias: eps must be positive");
    if (options.reference_state >= n) throw InvalidArgument("optimal_gain_bias: bad reference state");
    const double tau = options.aperiodicity;
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("optimal_gain_bias: aperiodicity in (0,1]");

    Vector u(n, 0.0), next(n), prev(n, 0.0);
    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        // transformed backup: tau * L u + (1 - tau) * u
        mdp.optimal_values(u, next);
        for (std::size_t s = 0; s < n; ++s) next[s] = tau * next[s] + (1.0 - tau) * u[s];
        const Vector diff = difference(next, u);
        const auto [lo, hi] = std::minmax_element(diff.begin(), diff.end());
        if (!std::isfinite(*lo) || !std::isfinite(*hi))
            throw NumericalFailure("optimal_gain_bias: iterates diverged");
        const double pin = next[options.reference_state];
        prev = u;
        for (std::size_t s = 0; s < n; ++s) u[s] = next[s] - pin;
        if (*hi - *lo <= options.eps * tau) {
            GainBias out;
            out.gain.assign(n, 0.5 * (*lo + *hi) / tau);
            out.bias = u;
            out.constant_gain = true;
            return out;
        }
    }
    const double sp = span(difference(u, prev));
    throw NonConvergence("optimal_gain_bias: max_iter exceeded", options.max_iter, sp, kInfinity,
                         {prev, u});
}

namespace {

// Exact hitting times of a proper stationary policy: solve (I - P) tau = 1
// on the non-target reachable states.
bool solve_hitting(const FiniteMdp& mdp, StateId target, const std::vector<bool>& reach,
                   const std::vector<ActionId>& choice, Vector& tau) {
    const std::size_t n = mdp.num_states();
    std::vector<std::size_t> index(n, n);
    std::size_t m = 0;
    for (StateId s = 0; s < n; ++s)
        if (reach[s] && s != target) index[s] = m++;
    if (m == 0) return true;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
    for (StateId s = 0; s < n; ++s) {
        if (index[s] == n) continue;
        const auto& row = mdp.trans(s, choice[s]);
        for (StateId j = 0; j < n; ++j) {
            if (row[j] == 0.0 || j == target) continue;
            if (index[j] == n) return false;
            a(index[s], index[j]) -= row[j];
        }
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    const Eigen::VectorXd x = a.fullPivLu().solve(ones);
    if (!x.allFinite() || (a * x - ones).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + x.cwiseAbs().maxCoeff()))
        return false;
    for (StateId s = 0; s < n; ++s)
        if (index[s] != n) {
            if (!(x[index[s]] >= 1.0 - 1e-9)) return false;
            tau[s] = x[index[s]];
        }
    return true;
}

// Policy-iteration polish of value-iteration hitting times; leaves tau
// untouched and returns false if a step fails.
bool polish_hitting(const FiniteMdp& mdp, StateId target, const std::vector<bool>& reach, Vector& tau) {
    const std::size_t n = mdp.num_states();
    Vector current = tau;
    std::vector<ActionId> choice(n, 0);
    for (int round = 0; round < 100; ++round) {
        bool changed = false;
        for (StateId s = 0; s < n; ++s) {
            if (s == target || !reach[s]) continue;
            double best = kInfinity;
            ActionId arg = choice[s];
            for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
                const auto& row = mdp.trans(s, a);
                double q = 1.0;
                for (StateId j = 0; j < n; ++j)
                    if (row[j] > 0.0 && j != target) q += row[j] * current[j];
                if (q < best - 1e-12 * std::max(1.0, std::abs(best))) best = q, arg = a;
            }
            if (round == 0 || arg != choice[s]) {
                changed |= round > 0;
                choice[s] = arg;
            }
        }
        if (round > 0 && !changed) break;
        Vector next = current;
        if (!solve_hitting(mdp, target, reach, choice, next)) return false;
        current = std::move(next);
    }
    tau = std::move(current);
    return true;
}

constexpr double kWarmStartTolerance = 1e-3;

}  // namespace

Vector hitting_times(const FiniteMdp& mdp, StateId target, const DiameterOptions& options) {
    const std::size_t n = mdp.num_states();
    if (target >= n) throw InvalidArgument("hitting_times: bad target");

    // Backward reachability over positive-probability edges. Choosing, in
    // each state, an edge that shortens the distance gives a policy with
    // finite hitting time, so unreachable states are exactly the infinite ones.
    std::vector<std::vector<StateId>> preds(n);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < mdp.num_actions(s); ++a)
            for (StateId j = 0; j < n; ++j)
                if (mdp.trans(s, a)[j] > 0.0) preds[j].push_back(s);
    std::vector<bool> reach(n, false);
    reach[target] = true;
    std::deque<StateId> queue{target};
    while (!queue.empty()) {
        const StateId j = queue.front();
        queue.pop_front();
        for (StateId s : preds[j])
            if (!reach[s]) {
                reach[s] = true;
                queue.push_back(s);
            }
    }

    // sparse rows without the target column
    std::vector<std::vector<std::vector<std::pair<StateId, double>>>> rows(n);
    for (StateId s = 0; s < n; ++s) {
        rows[s].resize(mdp.num_actions(s));
        for (ActionId a = 0; a < mdp.num_actions(s); ++a)
            for (StateId j = 0; j < n; ++j)
                if (mdp.trans(s, a)[j] > 0.0 && j != target) rows[s][a].emplace_back(j, mdp.trans(s, a)[j]);
    }

    Vector tau(n, 0.0), next(n, 0.0);
    for (StateId s = 0; s < n; ++s)
        if (!reach[s]) tau[s] = kInfinity;
    bool warm = options.eps < kWarmStartTolerance;
    for (std::size_t it = 0; it < options.max_iter; ++it) {
        double change = 0.0, top = 0.0;
        for (StateId s = 0; s < n; ++s) {
            if (s == target || !reach[s]) {
                next[s] = tau[s];
                continue;
            }
            double best = kInfinity;
            for (const auto& row : rows[s]) {
                double q = 1.0;
                for (const auto& [j, p] : row) q += p * tau[j];
                best = std::min(best, q);
            }
            next[s] = best;
            if (std::isfinite(best)) {
                change = std::max(change, std::abs(best - tau[s]));
                top = std::max(top, best);
            }
        }
        tau.swap(next);
        if (top > options.cap) {
            for (StateId s = 0; s < n; ++s)
                if (tau[s] > options.cap) tau[s] = kInfinity;
            return tau;
        }
        // a coarse solution usually fixes the optimal policy already
        if (warm && change <= kWarmStartTolerance * std::max(1.0, top)) {
            if (polish_hitting(mdp, target, reach, tau)) return tau;
            warm = false;
        }
        if (change <= options.eps * std::max(1.0, top)) {
            polish_hitting(mdp, target, reach, tau);
            return tau;
        }
    }
    for (StateId s = 0; s < n; ++s)
        if (s != target) tau[s] = kInfinity;
    return tau;
}

double diameter(const FiniteMdp& mdp, const DiameterOptions& options) {
    double d = 0.0;
    for (StateId t = 0; t < mdp.num_states(); ++t) {
        const Vector tau = hitting_times(mdp, t, options);
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            if (s == t) continue;
            if (!std::isfinite(tau[s])) return kInfinity;
            d = std::max(d, tau[s]);
        }
    }
    return d;
}

std::vector<ConstrainedPolicy> enumerate_deterministic_pi_c(const FiniteMdp& mdp, double c,
                                                            std::size_t cap) {
    if (!(c >= 0.0)) throw InvalidArgument("enumerate_deterministic_pi_c: c must be nonnegative");
    double count = 1.0;
    for (StateId s = 0; s < mdp.num_states(); ++s) count *= static_cast<double>(mdp.num_actions(s));
    if (count > static_cast<double>(cap))
        throw TooLarge("enumerate_deterministic_pi_c: " + std::to_string(count) +
                       " rules exceed the cap");

    std::vector<ConstrainedPolicy> out;
    std::vector<ActionId> choice(mdp.num_states(), 0);
    while (true) {
        GainBias gb = evaluate_policy(mdp, DecisionRule::deterministic(mdp, choice));
        if (gb.constant_gain && span(gb.bias) <= c + 1e-9) out.push_back({choice, std::move(gb)});
        // mixed-radix increment
        std::size_t s = 0;
        while (s < choice.size()) {
            if (++choice[s] < mdp.num_actions(s)) break;
            choice[s] = 0;
            ++s;
        }
        if (s == choice.size()) break;
    }
    return out;
}

}  // namespace scal
