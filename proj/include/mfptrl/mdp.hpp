#pragma once

#include <span>
#include <vector>

namespace mfptrl {

using ValueFunction = std::vector<double>;

/// Action index per state.
using Policy = std::vector<int>;

/// One nonzero entry of a transition row T_a(s, .) with its reward R_a(s, s').
struct Outcome {
    int next = 0;
    double prob = 0.0;
    double reward = 0.0;

    bool operator==(const Outcome&) const = default;
};

/// Stopping rule shared by the value-iteration family.
struct ConvergenceParams {
    double tolerance = 1e-6;
    long max_sweeps = 100000;

    void validate() const;
};

/**
 * Finite MDP (S, A, T, R) with a distinguished absorbing goal state.
 *
 * Rows are stored sparsely: row(a, s) lists the successors s' with
 * T_a(s, s') > 0, sorted by s', each carrying R_a(s, s'). Lookups of absent
 * entries return probability 0 and reward 0.
 *
 * The object is immutable. The constructor validates row-stochasticity and
 * index ranges, and overwrites the goal rows with a zero-reward self-loop so
 * the absorbing property holds by construction.
 */
class TabularMdp {
public:
    static constexpr double kRowSumTolerance = 1e-9;

    /// rows[a * n_states + s] is the transition row for action a at state s.
    TabularMdp(int n_states, int n_actions, std::vector<std::vector<Outcome>> rows,
               int goal, double discount);

    /// Builds from dense tables indexed transition[a][s][s'] and reward[a][s][s'].
    static TabularMdp from_dense(const std::vector<std::vector<std::vector<double>>>& transition,
                                 const std::vector<std::vector<std::vector<double>>>& reward,
                                 int goal, double discount);

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }
    int goal() const noexcept { return goal_; }
    double discount() const noexcept { return discount_; }

    std::span<const Outcome> row(int action, int state) const {
        return rows_[static_cast<std::size_t>(action) * n_states_ + state];
    }

    double transition(int action, int state, int next) const;
    double reward(int action, int state, int next) const;

    /// Dense T[a][s][.] row, mainly for tests and small models.
    std::vector<double> dense_row(int action, int state) const;

private:
    int n_states_;
    int n_actions_;
    int goal_;
    double discount_;
    std::vector<std::vector<Outcome>> rows_;
};

/// States from which the goal is hit with positive probability under some policy.
std::vector<bool> goal_reachable_states(const TabularMdp& mdp);

} // namespace mfptrl
