#include "mfptrl/solvers.hpp"

#include "mfptrl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mfptrl {

double action_value(const TabularMdp& mdp, const ValueFunction& v, int state, int action) {
    const double gamma = mdp.discount();
    double q = 0.0;
    for (const Outcome& o : mdp.row(action, state))
        q += o.prob * (o.reward + gamma * v[o.next]);
    return q;
}

BackupResult bellman_backup(const TabularMdp& mdp, const ValueFunction& v, int state) {
    BackupResult best{action_value(mdp, v, state, 0), 0};
    for (int a = 1; a < mdp.n_actions(); ++a) {
        const double q = action_value(mdp, v, state, a);
        if (q > best.value) best = {q, a};
    }
    return best;
}

namespace {

void check_value_size(const TabularMdp& mdp, const ValueFunction& v) {
    if (v.size() != static_cast<std::size_t>(mdp.n_states()))
        throw LengthMismatch("value function has " + std::to_string(v.size()) +
                             " entries, model has " + std::to_string(mdp.n_states()) +
                             " states");
}

[[noreturn]] void exhausted(const char* solver, long sweeps, double delta) {
    throw BudgetExhausted(std::string(solver) + " did not reach tolerance within " +
                              std::to_string(sweeps) + " sweeps (last delta " +
                              std::to_string(delta) + ")",
                          sweeps, delta);
}

} // namespace

SolveResult value_iteration(const TabularMdp& mdp, const ConvergenceParams& params) {
    params.validate();
    const int n = mdp.n_states();
    ValueFunction v(n, 0.0);
    ValueFunction next(n, 0.0);
    long sweeps = 0;
    while (true) {
        ++sweeps;
        for (int s = 0; s < n; ++s) next[s] = bellman_backup(mdp, v, s).value;
        const double delta = max_value_diff(v, next);
        v.swap(next);
        if (delta <= params.tolerance) break;
        if (sweeps >= params.max_sweeps) exhausted("value_iteration", sweeps, delta);
    }
    Policy pi = greedy_policy(mdp, v);
    return {std::move(v), std::move(pi), sweeps};
}

Policy greedy_policy(const TabularMdp& mdp, const ValueFunction& v, double tie_tolerance) {
    check_value_size(mdp, v);
    const int n = mdp.n_states();
    Policy pi(n, 0);
    std::vector<double> q(mdp.n_actions());
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) q[a] = action_value(mdp, v, s, a);
        const double best = *std::max_element(q.begin(), q.end());
        for (int a = 0; a < mdp.n_actions(); ++a) {
            if (q[a] >= best - tie_tolerance) {
                pi[s] = a;
                break;
            }
        }
    }
    return pi;
}

SolveResult value_change_prioritized_vi(const TabularMdp& mdp, const ConvergenceParams& params) {
    params.validate();
    const int n = mdp.n_states();
    ValueFunction v(n, 0.0);
    std::vector<double> change(n, 0.0);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    long sweeps = 0;
    while (true) {
        ++sweeps;
        double delta = 0.0;
        for (int s : order) {
            const double updated = bellman_backup(mdp, v, s).value;
            change[s] = std::abs(updated - v[s]);
            delta = std::max(delta, change[s]);
            v[s] = updated;
        }
        if (delta <= params.tolerance) break;
        if (sweeps >= params.max_sweeps) exhausted("value_change_prioritized_vi", sweeps, delta);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return change[a] > change[b]; });
    }
    Policy pi = greedy_policy(mdp, v);
    return {std::move(v), std::move(pi), sweeps};
}

double max_value_diff(const ValueFunction& v1, const ValueFunction& v2) {
    if (v1.size() != v2.size())
        throw LengthMismatch("value functions differ in length: " + std::to_string(v1.size()) +
                             " vs " + std::to_string(v2.size()));
    double diff = 0.0;
    for (std::size_t i = 0; i < v1.size(); ++i) diff = std::max(diff, std::abs(v1[i] - v2[i]));
    return diff;
}

double bellman_residual(const TabularMdp& mdp, const ValueFunction& v) {
    check_value_size(mdp, v);
    double r = 0.0;
    for (int s = 0; s < mdp.n_states(); ++s)
        r = std::max(r, std::abs(bellman_backup(mdp, v, s).value - v[s]));
    return r;
}

} // namespace mfptrl
