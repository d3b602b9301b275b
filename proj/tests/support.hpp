// Generators and brute-force oracles shared by the test suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "scal/environments.hpp"
#include "scal/extended_mdp.hpp"
#include "scal/mdp.hpp"

namespace testing {

using scal::Vector;

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double lo = -5.0, double hi = 5.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (double& x : v) x = u(rng);
    return v;
}

inline double sup_norm(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Random box around a random probability vector; always admits a point.
inline void random_box(std::mt19937_64& rng, std::size_t n, Vector& lo, Vector& hi, double max_width = 0.5) {
    std::exponential_distribution<double> e(1.0);
    std::uniform_real_distribution<double> u(0.0, max_width);
    Vector p(n);
    double total = 0.0;
    for (double& x : p) total += (x = e(rng));
    lo.resize(n);
    hi.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        p[j] /= total;
        lo[j] = std::max(0.0, p[j] - u(rng));
        hi[j] = std::min(1.0, p[j] + u(rng));
    }
}

/// Bounded-parameter MDP of random boxes; widths at least min_width so
/// that a modification with eta <= min_width stays feasible.
inline scal::BoundedParamMdp random_bmdp(std::mt19937_64& rng, std::size_t n, std::size_t actions,
                                         double min_width = 0.0, double max_width = 0.4) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> w(min_width, std::max(min_width, max_width));
    std::exponential_distribution<double> e(1.0);
    std::vector<std::vector<scal::IntervalAction>> acts(n);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t a = 0; a < actions; ++a) {
            scal::IntervalAction act;
            const double r = u(rng);
            act.r_lo = std::max(0.0, r - w(rng));
            act.r_hi = std::min(1.0, r + w(rng));
            Vector p(n);
            double total = 0.0;
            for (double& x : p) total += (x = e(rng));
            act.p_lo.resize(n);
            act.p_hi.resize(n);
            for (std::size_t j = 0; j < n; ++j) {
                p[j] /= total;
                act.p_lo[j] = std::max(0.0, p[j] - w(rng));
                act.p_hi[j] = std::min(1.0, p[j] + w(rng));
            }
            acts[s].push_back(std::move(act));
        }
    return scal::BoundedParamMdp(std::move(acts), 1.0);
}

/// All vertices of {lo <= p <= hi, sum p = 1}: every coordinate but one sits
/// at a bound and the free one absorbs the remaining mass.
inline std::vector<Vector> box_vertices(const Vector& lo, const Vector& hi) {
    const std::size_t n = lo.size();
    std::vector<Vector> out;
    for (std::size_t free = 0; free < n; ++free)
        for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
            Vector p(n);
            double used = 0.0;
            std::size_t bit = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == free) continue;
                p[j] = (mask >> bit++) & 1 ? hi[j] : lo[j];
                used += p[j];
            }
            p[free] = 1.0 - used;
            if (p[free] >= lo[free] - 1e-12 && p[free] <= hi[free] + 1e-12) out.push_back(p);
        }
    return out;
}

inline double dot(const Vector& a, const Vector& b) {
    double x = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) x += a[i] * b[i];
    return x;
}

/// Dense Gaussian elimination with partial pivoting; independent of the
/// library's linear algebra.
inline Vector solve_linear(std::vector<Vector> a, Vector b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

struct UnichainEval {
    double gain;
    Vector bias;  // bias[0] = 0
};

/// Gain and bias of an irreducible chain (P, r): stationary distribution
/// from mu (I - P) = 0 with normalisation, then (I - P) h = r - g, h(0) = 0.
inline UnichainEval evaluate_unichain(const std::vector<Vector>& p, const Vector& r) {
    const std::size_t n = r.size();
    std::vector<Vector> a(n, Vector(n));
    Vector b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - p[j][i];
    for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
    b[n - 1] = 1.0;
    const Vector mu = solve_linear(a, b);
    const double g = dot(mu, r);
    // unknowns h(1..n-1); equations for every state, drop the last one
    std::vector<Vector> m(n - 1, Vector(n - 1, 0.0));
    Vector rhs(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 1; j < n; ++j) m[i][j - 1] = (i == j ? 1.0 : 0.0) - p[i][j];
        rhs[i] = r[i] - g;
    }
    Vector h(n, 0.0);
    if (n > 1) {
        const Vector rest = solve_linear(m, rhs);
        for (std::size_t j = 1; j < n; ++j) h[j] = rest[j - 1];
    }
    return {g, h};
}

/// Every deterministic rule of a small MDP.
inline std::vector<std::vector<scal::ActionId>> all_deterministic(const scal::FiniteMdp& mdp) {
    std::vector<std::vector<scal::ActionId>> out;
    std::vector<scal::ActionId> choice(mdp.num_states(), 0);
    while (true) {
        out.push_back(choice);
        std::size_t s = 0;
        while (s < choice.size()) {
            if (++choice[s] < mdp.num_actions(s)) break;
            choice[s] = 0;
            ++s;
        }
        if (s == choice.size()) return out;
    }
}

/// z minimising span(z - v) over {span(z) <= c}, searched on a grid of
/// shifts d with d(0) = 0 (span is translation invariant).
inline double projection_grid_best(const Vector& v, double c, double radius, int steps) {
    double best = scal::kInfinity;
    const double h = 2.0 * radius / steps;
    for (int i = 0; i <= steps; ++i)
        for (int k = 0; k <= steps; ++k) {
            const Vector d{0.0, -radius + i * h, -radius + k * h};
            Vector z(3);
            for (int j = 0; j < 3; ++j) z[j] = v[j] + d[j];
            if (scal::span(z) <= c + 1e-12) best = std::min(best, scal::span(d));
        }
    return best;
}

}  // namespace testing
