#pragma once

#include "mdpsolve/linalg.hpp"
#include "mdpsolve/mdp.hpp"
#include "mdpsolve/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mdpsolve {

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Mean first passage times toward a goal set: mu(s) is the expected number
/// of chain transitions to first reach any goal. Exactly 0 on goals, >= 1 on
/// other states, +inf for states with no path to a goal.
struct Landscape {
    std::vector<double> mu;
    std::vector<int> goals;

    std::size_t size() const { return mu.size(); }
};

/// Componentwise landscape difference with sentinel arithmetic (see
/// landscape_delta).
struct LandscapeDelta {
    std::vector<double> delta;
};

/// Difference respecting the +-inf sentinels: two infinities of the same
/// sign cancel to 0, finite - inf saturates to -inf, inf - finite to +inf.
inline double sentinel_diff(double a, double b) {
    if (std::isinf(a) && std::isinf(b) && (a > 0.0) == (b > 0.0))
        return 0.0;
    return a - b;
}

/// Optional instrumentation collected by mfpt_landscape.
struct MfptStats {
    double ms_linear_solve = 0.0;  // time inside lu_factor + lu_solve
    bool used_reachability_fallback = false;
    int unreachable_states = 0;
};

namespace detail {

/// Transient states that can reach a goal along positive-probability edges
/// (reverse BFS from the goal set).
inline std::vector<std::uint8_t> reachable_mask(const MarkovChain& chain,
                                                const std::vector<std::uint8_t>& goal_mask) {
    const int n = chain.n_states;
    std::vector<std::vector<int>> predecessors(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s)
        for (std::size_t k = chain.row_begin(s); k < chain.row_end(s); ++k)
            if (chain.prob[k] > 0.0 && chain.col[k] != s)
                predecessors[static_cast<std::size_t>(chain.col[k])].push_back(s);

    std::vector<std::uint8_t> reachable(static_cast<std::size_t>(n), 0);
    std::deque<int> queue;
    for (int s = 0; s < n; ++s) {
        if (goal_mask[static_cast<std::size_t>(s)]) {
            reachable[static_cast<std::size_t>(s)] = 1;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        for (int p : predecessors[static_cast<std::size_t>(s)]) {
            if (!reachable[static_cast<std::size_t>(p)]) {
                reachable[static_cast<std::size_t>(p)] = 1;
                queue.push_back(p);
            }
        }
    }
    return reachable;
}

/// Assemble and solve (P_TT - I) mu = -1 over the given transient states,
/// dropping columns into anything outside the set. Returns false if the
/// solve failed or produced values outside [1, inf).
inline bool solve_transient_system(const MarkovChain& chain, const std::vector<int>& states,
                                   std::vector<double>& mu_out, MfptStats* stats) {
    const std::size_t m = states.size();
    if (m == 0) {
        mu_out.clear();
        return true;
    }
    std::vector<int> index_of(static_cast<std::size_t>(chain.n_states), -1);
    for (std::size_t i = 0; i < m; ++i)
        index_of[static_cast<std::size_t>(states[i])] = static_cast<int>(i);

    DenseMatrix a(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        const int s = states[i];
        double* row = a.entries.data() + i * m;
        for (std::size_t k = chain.row_begin(s); k < chain.row_end(s); ++k) {
            const int j = index_of[static_cast<std::size_t>(chain.col[k])];
            if (j >= 0)
                row[static_cast<std::size_t>(j)] += chain.prob[k];
        }
        row[i] -= 1.0;
    }
    const std::vector<double> b(m, -1.0);

    const auto t0 = std::chrono::steady_clock::now();
    const LuFactorization f = lu_factor(a);
    if (f.singular) {
        if (stats)
            stats->ms_linear_solve +=
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
        return false;
    }
    mu_out = lu_solve(f, b);
    if (stats)
        stats->ms_linear_solve +=
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();

    for (double& v : mu_out) {
        if (!std::isfinite(v) || v < 1.0 - 1e-6)
            return false;
        v = std::max(v, 1.0);  // clamp roundoff just below the 1-step floor
    }
    return true;
}

}  // namespace detail

/// Compute the reachability landscape of a chain toward a goal set.
///
/// The transient-submatrix form of the MFPT system is solved directly:
/// (P_TT - I) mu = -1 with goal rows and columns removed, mu = 0 pinned on
/// goals. When the chain is not absorbing into the goal set (the solve comes
/// back singular or with invalid entries), states with no positive-probability
/// path to a goal get the +inf sentinel and the system is re-solved over the
/// remaining transient states only.
inline Landscape mfpt_landscape(const MarkovChain& chain, const std::vector<int>& goals,
                                MfptStats* stats = nullptr) {
    const int n = chain.n_states;
    if (goals.empty())
        throw std::invalid_argument("mfpt_landscape: goal set must be non-empty");
    std::vector<std::uint8_t> goal_mask(static_cast<std::size_t>(n), 0);
    for (int g : goals) {
        if (g < 0 || g >= n)
            throw std::invalid_argument("mfpt_landscape: goal index out of range");
        goal_mask[static_cast<std::size_t>(g)] = 1;
    }

    Landscape landscape;
    landscape.goals = goals;
    std::sort(landscape.goals.begin(), landscape.goals.end());
    landscape.goals.erase(std::unique(landscape.goals.begin(), landscape.goals.end()),
                          landscape.goals.end());
    landscape.mu.assign(static_cast<std::size_t>(n), 0.0);

    std::vector<int> transient;
    transient.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s)
        if (!goal_mask[static_cast<std::size_t>(s)])
            transient.push_back(s);

    std::vector<double> mu;
    if (detail::solve_transient_system(chain, transient, mu, stats)) {
        for (std::size_t i = 0; i < transient.size(); ++i)
            landscape.mu[static_cast<std::size_t>(transient[i])] = mu[i];
        return landscape;
    }

    // Not absorbing into the goal set: resolve by reachability analysis.
    if (stats)
        stats->used_reachability_fallback = true;
    const auto reachable = detail::reachable_mask(chain, goal_mask);
    std::vector<int> solvable;
    for (int s : transient) {
        if (reachable[static_cast<std::size_t>(s)])
            solvable.push_back(s);
        else
            landscape.mu[static_cast<std::size_t>(s)] = kUnreachable;
    }
    if (stats)
        stats->unreachable_states = static_cast<int>(transient.size() - solvable.size());

    if (!detail::solve_transient_system(chain, solvable, mu, stats))
        throw std::runtime_error(
            "mfpt_landscape: reduced system unsolvable; chain violates MarkovChain invariants");
    for (std::size_t i = 0; i < solvable.size(); ++i)
        landscape.mu[static_cast<std::size_t>(solvable[i])] = mu[i];
    return landscape;
}

/// The n x n system exactly as printed in the source formulation,
/// (p - I) mu = -1 including the goal row. Only meaningful for regular
/// chains, where row j yields the mean recurrence time instead of 0; kept as
/// a comparison path for tests. Throws SingularSystemError when the chain is
/// absorbing (the goal row is zero).
inline std::vector<double> mfpt_literal_system(const MarkovChain& chain, int goal) {
    const int n = chain.n_states;
    if (goal < 0 || goal >= n)
        throw std::invalid_argument("mfpt_literal_system: goal out of range");
    DenseMatrix a(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        double* row = a.entries.data() + static_cast<std::size_t>(s) * n;
        for (std::size_t k = chain.row_begin(s); k < chain.row_end(s); ++k)
            if (chain.col[k] != goal)
                row[static_cast<std::size_t>(chain.col[k])] += chain.prob[k];
        row[static_cast<std::size_t>(s)] -= 1.0;
    }
    return lu_solve(lu_factor(a), std::vector<double>(static_cast<std::size_t>(n), -1.0));
}

/// Monte-Carlo estimate of the MFPT from one start state; the independent
/// oracle for mfpt_landscape. Trials that do not reach a goal within
/// max_steps are censored: excluded from the mean and counted separately.
struct SimulationResult {
    double mean = 0.0;       // +inf when every trial was censored
    double std_error = 0.0;  // sample stddev / sqrt(completed trials)
    long completed = 0;
    long censored = 0;
};

inline SimulationResult simulate_mfpt(const MarkovChain& chain, const std::vector<int>& goals,
                                      int start, long trials, long max_steps,
                                      std::uint64_t seed) {
    if (trials < 1)
        throw std::invalid_argument("simulate_mfpt: trials must be >= 1");
    std::vector<std::uint8_t> goal_mask(static_cast<std::size_t>(chain.n_states), 0);
    for (int g : goals)
        goal_mask[static_cast<std::size_t>(g)] = 1;

    // Per-state cumulative rows for O(log succ) sampling.
    std::vector<double> cum(chain.prob.size());
    for (int s = 0; s < chain.n_states; ++s) {
        double acc = 0.0;
        for (std::size_t k = chain.row_begin(s); k < chain.row_end(s); ++k) {
            acc += chain.prob[k];
            cum[k] = acc;
        }
    }

    SplitMix64Stream rng(seed);
    double sum = 0.0;
    double sum_sq = 0.0;
    SimulationResult result;
    for (long t = 0; t < trials; ++t) {
        int s = start;
        long steps = 0;
        while (!goal_mask[static_cast<std::size_t>(s)] && steps < max_steps) {
            const double u = rng.next_double() * cum[chain.row_end(s) - 1];
            const auto begin = cum.begin() + static_cast<std::ptrdiff_t>(chain.row_begin(s));
            const auto end = cum.begin() + static_cast<std::ptrdiff_t>(chain.row_end(s));
            const auto it = std::lower_bound(begin, end, u);
            const std::size_t k = chain.row_begin(s) +
                                  static_cast<std::size_t>(std::min(it - begin, end - begin - 1));
            s = chain.col[k];
            ++steps;
        }
        if (goal_mask[static_cast<std::size_t>(s)]) {
            ++result.completed;
            sum += static_cast<double>(steps);
            sum_sq += static_cast<double>(steps) * static_cast<double>(steps);
        } else {
            ++result.censored;
        }
    }
    if (result.completed == 0) {
        result.mean = kUnreachable;
        return result;
    }
    const double n = static_cast<double>(result.completed);
    result.mean = sum / n;
    if (result.completed > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
        result.std_error = std::sqrt(var / n);
    }
    return result;
}

/// Combined landscape for several goal sets: each per-set landscape is
/// rescaled to [0,1] by its largest finite value, then the per-state minimum
/// is taken. A single goal set returns the raw landscape unchanged.
inline Landscape multi_goal_landscape(const MarkovChain& chain,
                                      const std::vector<std::vector<int>>& goal_sets,
                                      MfptStats* stats = nullptr) {
    if (goal_sets.empty())
        throw std::invalid_argument("multi_goal_landscape: need at least one goal set");
    if (goal_sets.size() == 1)
        return mfpt_landscape(chain, goal_sets[0], stats);

    Landscape combined;
    combined.mu.assign(static_cast<std::size_t>(chain.n_states), kUnreachable);
    for (const auto& goals : goal_sets) {
        Landscape l = mfpt_landscape(chain, goals, stats);
        double max_finite = 0.0;
        for (double v : l.mu)
            if (std::isfinite(v))
                max_finite = std::max(max_finite, v);
        const double scale = max_finite > 0.0 ? 1.0 / max_finite : 1.0;
        for (std::size_t s = 0; s < l.mu.size(); ++s) {
            const double scaled = std::isfinite(l.mu[s]) ? l.mu[s] * scale : kUnreachable;
            combined.mu[s] = std::min(combined.mu[s], scaled);
        }
        combined.goals.insert(combined.goals.end(), l.goals.begin(), l.goals.end());
    }
    std::sort(combined.goals.begin(), combined.goals.end());
    combined.goals.erase(std::unique(combined.goals.begin(), combined.goals.end()),
                         combined.goals.end());
    return combined;
}

/// min(mu, cap) per state; the +inf sentinel clips to cap so heatmaps stay
/// renderable.
inline Landscape clip_landscape(const Landscape& l, double cap) {
    if (cap <= 0.0)
        throw std::invalid_argument("clip_landscape: cap must be positive");
    Landscape out = l;
    for (double& v : out.mu)
        v = std::isfinite(v) ? std::min(v, cap) : cap;
    return out;
}

/// new - old, componentwise, with sentinel_diff semantics. Requires matching
/// goal sets and lengths.
inline LandscapeDelta landscape_delta(const Landscape& old_l, const Landscape& new_l) {
    if (old_l.mu.size() != new_l.mu.size())
        throw std::invalid_argument("landscape_delta: length mismatch");
    if (old_l.goals != new_l.goals)
        throw std::invalid_argument("landscape_delta: goal sets differ");
    LandscapeDelta d;
    d.delta.resize(new_l.mu.size());
    for (std::size_t s = 0; s < new_l.mu.size(); ++s)
        d.delta[s] = sentinel_diff(new_l.mu[s], old_l.mu[s]);
    return d;
}

}  // namespace mdpsolve
