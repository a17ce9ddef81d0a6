#pragma once

#include "mfptrl/mdp.hpp"

namespace mfptrl {

struct BackupResult {
    double value = 0.0;
    int best_action = 0;
};

struct SolveResult {
    ValueFunction v;
    Policy pi;
    long sweeps = 0;
};

/// One-step lookahead: sum over s' of T_a(s,s') * (R_a(s,s') + gamma * v[s']).
double action_value(const TabularMdp& mdp, const ValueFunction& v, int state, int action);

/// Max over actions of action_value; ties resolve to the lowest action index.
BackupResult bellman_backup(const TabularMdp& mdp, const ValueFunction& v, int state);

/// Synchronous (Jacobi) value iteration from v = 0.
///
/// Stops once max_s |V(s) - V'(s)| <= tolerance between two consecutive
/// sweeps. Throws BudgetExhausted when max_sweeps is reached first.
SolveResult value_iteration(const TabularMdp& mdp, const ConvergenceParams& params);

/// Greedy policy w.r.t. v. With tie_tolerance > 0 the lowest-index action
/// within tie_tolerance of the best lookahead is chosen.
Policy greedy_policy(const TabularMdp& mdp, const ValueFunction& v, double tie_tolerance = 0.0);

/**
 * In-place value iteration where each sweep visits states in descending
 * order of the magnitude of their value change in the previous sweep.
 * The first sweep uses index order. Ties in the score keep index order.
 */
SolveResult value_change_prioritized_vi(const TabularMdp& mdp, const ConvergenceParams& params);

/// max_s |v1[s] - v2[s]|. Throws LengthMismatch on differing sizes.
double max_value_diff(const ValueFunction& v1, const ValueFunction& v2);

/// max_s |bellman_backup(v, s).value - v[s]|.
double bellman_residual(const TabularMdp& mdp, const ValueFunction& v);

} // namespace mfptrl
