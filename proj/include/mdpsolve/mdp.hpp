#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdpsolve {

/// One weighted successor of a (state, action) pair. `reward` is the
/// immediate reward for taking that transition, stored per (s, a, s').
struct Transition {
    int state = 0;
    double prob = 0.0;
    double reward = 0.0;
};

using ValueFunction = std::vector<double>;

struct Policy {
    std::vector<int> action;  // one action index per state
};

/// Finite MDP with absorbing goal states. Transition rows are sparse
/// successor lists stored contiguously; row (s, a) lives at
/// transitions[row_offset[s * n_actions + a] .. row_offset[...+1]).
///
/// Instances are immutable by convention once built (see MdpBuilder) and are
/// safe to share across threads.
struct Mdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<std::size_t> row_offset;  // n_states*n_actions + 1 entries
    std::vector<Transition> transitions;
    std::vector<int> goals;               // sorted, absorbing
    std::vector<std::uint8_t> goal_mask;  // n_states entries

    std::span<const Transition> row(int s, int a) const {
        const std::size_t idx = static_cast<std::size_t>(s) * n_actions + a;
        return {transitions.data() + row_offset[idx], row_offset[idx + 1] - row_offset[idx]};
    }
    bool is_goal(int s) const { return goal_mask[static_cast<std::size_t>(s)] != 0; }
};

/// Row-stochastic chain obtained by fixing a policy on an Mdp. Same sparse
/// row layout as Mdp, probabilities only.
struct MarkovChain {
    int n_states = 0;
    std::vector<std::size_t> row_offset;  // n_states + 1
    std::vector<int> col;
    std::vector<double> prob;

    std::size_t row_begin(int s) const { return row_offset[static_cast<std::size_t>(s)]; }
    std::size_t row_end(int s) const { return row_offset[static_cast<std::size_t>(s) + 1]; }
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Accumulates transitions in any order, then freezes them into the packed
/// Mdp layout. Duplicate (s, a, s') entries merge by summing probability;
/// the last reward written for a triple wins.
class MdpBuilder {
  public:
    MdpBuilder(int n_states, int n_actions) : n_states_(n_states), n_actions_(n_actions) {
        if (n_states <= 0 || n_actions <= 0)
            throw std::invalid_argument("MdpBuilder: state and action counts must be positive");
        rows_.resize(static_cast<std::size_t>(n_states) * n_actions);
    }

    void add_transition(int s, int a, int s2, double prob, double reward = 0.0) {
        auto& row = rows_[check_index(s, a)];
        for (auto& t : row) {
            if (t.state == s2) {
                t.prob += prob;
                t.reward = reward;
                return;
            }
        }
        row.push_back({s2, prob, reward});
    }

    void set_reward(int s, int a, int s2, double reward) {
        auto& row = rows_[check_index(s, a)];
        for (auto& t : row) {
            if (t.state == s2) {
                t.reward = reward;
                return;
            }
        }
        throw std::invalid_argument("set_reward: no transition (" + std::to_string(s) + "," +
                                    std::to_string(a) + "," + std::to_string(s2) + ")");
    }

    void add_goal(int s) { goals_.push_back(s); }

    Mdp build() const {
        Mdp m;
        m.n_states = n_states_;
        m.n_actions = n_actions_;
        m.row_offset.reserve(rows_.size() + 1);
        m.row_offset.push_back(0);
        std::size_t total = 0;
        for (const auto& row : rows_) {
            total += row.size();
            m.row_offset.push_back(total);
        }
        m.transitions.reserve(total);
        for (const auto& row : rows_) {
            auto sorted = row;
            std::sort(sorted.begin(), sorted.end(),
                      [](const Transition& a, const Transition& b) { return a.state < b.state; });
            m.transitions.insert(m.transitions.end(), sorted.begin(), sorted.end());
        }
        m.goals = goals_;
        std::sort(m.goals.begin(), m.goals.end());
        m.goals.erase(std::unique(m.goals.begin(), m.goals.end()), m.goals.end());
        m.goal_mask.assign(static_cast<std::size_t>(n_states_), 0);
        for (int g : m.goals) {
            if (g < 0 || g >= n_states_)
                throw std::invalid_argument("MdpBuilder: goal index out of range");
            m.goal_mask[static_cast<std::size_t>(g)] = 1;
        }
        return m;
    }

  private:
    std::size_t check_index(int s, int a) const {
        if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_)
            throw std::invalid_argument("MdpBuilder: (state, action) out of range");
        return static_cast<std::size_t>(s) * n_actions_ + a;
    }

    int n_states_;
    int n_actions_;
    std::vector<std::vector<Transition>> rows_;
    std::vector<int> goals_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string rule;  // short machine-readable id, e.g. "row-sum"
    int state = -1;
    int action = -1;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

constexpr double kRowSumTolerance = 1e-9;

/// Check every Mdp invariant and report each violation with its coordinates.
/// A valid Mdp yields an empty report; nothing throws here.
inline ValidationReport validate(const Mdp& mdp) {
    ValidationReport report;
    auto add = [&](std::string rule, int s, int a, std::string detail) {
        report.violations.push_back({std::move(rule), s, a, std::move(detail)});
    };

    if (mdp.goals.empty())
        add("goals-empty", -1, -1, "goal set must be non-empty");
    for (int g : mdp.goals)
        if (g < 0 || g >= mdp.n_states)
            add("goal-range", g, -1, "goal index out of range");

    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto row = mdp.row(s, a);
            double sum = 0.0;
            int prev_state = -1;
            for (const auto& t : row) {
                sum += t.prob;
                if (t.state < 0 || t.state >= mdp.n_states)
                    add("successor-range", s, a, "successor " + std::to_string(t.state));
                if (t.prob < 0.0 || t.prob > 1.0)
                    add("prob-range", s, a,
                        "p=" + std::to_string(t.prob) + " to s'=" + std::to_string(t.state));
                if (!std::isfinite(t.reward))
                    add("reward-finite", s, a, "reward to s'=" + std::to_string(t.state));
                if (t.state == prev_state)
                    add("duplicate-successor", s, a, "s'=" + std::to_string(t.state));
                prev_state = t.state;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                add("row-sum", s, a, "row sum " + std::to_string(sum));
            if (mdp.is_goal(s)) {
                for (const auto& t : row)
                    if (t.state != s && t.prob > 0.0)
                        add("goal-not-absorbing", s, a,
                            "p=" + std::to_string(t.prob) + " to s'=" + std::to_string(t.state));
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Bellman machinery
// ---------------------------------------------------------------------------

struct BackupResult {
    double value = 0.0;
    int action = 0;
};

/// One Bellman backup of state s: max over actions of
/// sum_{s'} T_a(s,s') (R_a(s,s') + gamma V(s')). Ties break toward the
/// lowest action index.
inline BackupResult bellman_backup(const Mdp& mdp, const ValueFunction& v, int s, double gamma) {
    double best = -std::numeric_limits<double>::infinity();
    int best_action = 0;
    for (int a = 0; a < mdp.n_actions; ++a) {
        double q = 0.0;
        for (const auto& t : mdp.row(s, a))
            q += t.prob * (t.reward + gamma * v[static_cast<std::size_t>(t.state)]);
        if (q > best) {
            best = q;
            best_action = a;
        }
    }
    return {best, best_action};
}

/// Gauss-Seidel sweep over `order`: each state in sequence is backed up
/// in place, so later backups see earlier results. States outside `order`
/// keep their value and report delta 0; their policy entry is untouched.
///
/// `deltas` is resized to n_states and receives |V'(s) - V(s)| per state.
/// Returns the largest delta seen (Delta_S restricted to the sweep).
inline double sweep_in_place(const Mdp& mdp, double gamma, std::span<const int> order,
                             ValueFunction& v, Policy& policy, std::vector<double>& deltas) {
    deltas.assign(static_cast<std::size_t>(mdp.n_states), 0.0);
    double max_delta = 0.0;
    for (int s : order) {
        const BackupResult r = bellman_backup(mdp, v, s, gamma);
        const double delta = std::abs(r.value - v[static_cast<std::size_t>(s)]);
        v[static_cast<std::size_t>(s)] = r.value;
        policy.action[static_cast<std::size_t>(s)] = r.action;
        deltas[static_cast<std::size_t>(s)] = delta;
        max_delta = std::max(max_delta, delta);
    }
    return max_delta;
}

struct SweepResult {
    ValueFunction value;
    std::vector<double> deltas;  // |V'(s) - V(s)|, 0 for states not in order
    Policy policy;
};

/// Value-returning wrapper around sweep_in_place. Rejects duplicate indices
/// in `order`; a partial order is allowed (untouched states keep v and get
/// action 0 in the returned policy).
inline SweepResult full_sweep(const Mdp& mdp, const ValueFunction& v, double gamma,
                              std::span<const int> order) {
    if (v.size() != static_cast<std::size_t>(mdp.n_states))
        throw std::invalid_argument("full_sweep: value function length mismatch");
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(mdp.n_states), 0);
    for (int s : order) {
        if (s < 0 || s >= mdp.n_states)
            throw std::invalid_argument("full_sweep: state index out of range");
        if (seen[static_cast<std::size_t>(s)]++)
            throw std::invalid_argument("full_sweep: duplicate state " + std::to_string(s) +
                                        " in order");
    }
    SweepResult result;
    result.value = v;
    result.policy.action.assign(static_cast<std::size_t>(mdp.n_states), 0);
    sweep_in_place(mdp, gamma, order, result.value, result.policy, result.deltas);
    return result;
}

/// max_s |v(s) - w(s)|, the convergence test quantity.
inline double convergence_delta(const ValueFunction& v, const ValueFunction& w) {
    if (v.size() != w.size())
        throw std::invalid_argument("convergence_delta: length mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        worst = std::max(worst, std::abs(v[i] - w[i]));
    return worst;
}

/// Fix a policy on the MDP: row i of the chain is T_{pi[i]}(i, .).
inline MarkovChain induced_chain(const Mdp& mdp, const Policy& policy) {
    if (policy.action.size() != static_cast<std::size_t>(mdp.n_states))
        throw std::invalid_argument("induced_chain: policy length mismatch");
    MarkovChain chain;
    chain.n_states = mdp.n_states;
    chain.row_offset.reserve(static_cast<std::size_t>(mdp.n_states) + 1);
    chain.row_offset.push_back(0);
    std::size_t total = 0;
    for (int s = 0; s < mdp.n_states; ++s) {
        const int a = policy.action[static_cast<std::size_t>(s)];
        if (a < 0 || a >= mdp.n_actions)
            throw std::invalid_argument("induced_chain: action index out of range at state " +
                                        std::to_string(s));
        total += mdp.row(s, a).size();
        chain.row_offset.push_back(total);
    }
    chain.col.reserve(total);
    chain.prob.reserve(total);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (const auto& t : mdp.row(s, policy.action[static_cast<std::size_t>(s)])) {
            chain.col.push_back(t.state);
            chain.prob.push_back(t.prob);
        }
    }
    return chain;
}

/// Per-state argmax of the Bellman backup; ties toward the lowest index.
inline Policy greedy_policy(const Mdp& mdp, const ValueFunction& v, double gamma) {
    Policy p;
    p.action.resize(static_cast<std::size_t>(mdp.n_states));
    for (int s = 0; s < mdp.n_states; ++s)
        p.action[static_cast<std::size_t>(s)] = bellman_backup(mdp, v, s, gamma).action;
    return p;
}

}  // namespace mdpsolve
