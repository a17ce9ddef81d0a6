#include "mfptrl/mdp.hpp"

#include "mfptrl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfptrl {

void ConvergenceParams::validate() const {
    if (!(tolerance > 0.0))
        throw InvalidModel("convergence tolerance must be positive");
    if (max_sweeps < 1)
        throw InvalidModel("max_sweeps must be at least 1");
}

namespace {

std::string where(int a, int s) {
    return "(action " + std::to_string(a) + ", state " + std::to_string(s) + ")";
}

} // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, std::vector<std::vector<Outcome>> rows,
                       int goal, double discount)
    : n_states_(n_states), n_actions_(n_actions), goal_(goal), discount_(discount),
      rows_(std::move(rows)) {
    if (n_states < 1 || n_actions < 1)
        throw InvalidModel("state and action counts must be positive");
    if (goal < 0 || goal >= n_states)
        throw InvalidModel("goal index out of range");
    if (!(discount > 0.0 && discount <= 1.0))
        throw InvalidModel("discount must lie in (0, 1]");
    if (rows_.size() != static_cast<std::size_t>(n_states) * n_actions)
        throw InvalidModel("expected one transition row per (action, state)");

    for (int a = 0; a < n_actions_; ++a) {
        for (int s = 0; s < n_states_; ++s) {
            auto& r = rows_[static_cast<std::size_t>(a) * n_states_ + s];
            if (s == goal_) {
                r.assign(1, Outcome{goal_, 1.0, 0.0});
                continue;
            }
            std::erase_if(r, [](const Outcome& o) { return o.prob == 0.0; });
            std::sort(r.begin(), r.end(),
                      [](const Outcome& x, const Outcome& y) { return x.next < y.next; });
            double sum = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) {
                const Outcome& o = r[i];
                if (o.next < 0 || o.next >= n_states_)
                    throw InvalidModel("successor index out of range at " + where(a, s));
                if (i > 0 && r[i - 1].next == o.next)
                    throw InvalidModel("duplicate successor at " + where(a, s));
                if (!(o.prob >= 0.0 && o.prob <= 1.0 + kRowSumTolerance))
                    throw InvalidModel("probability outside [0,1] at " + where(a, s));
                if (!std::isfinite(o.reward))
                    throw InvalidModel("non-finite reward at " + where(a, s));
                sum += o.prob;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                throw InvalidModel("transition row does not sum to 1 at " + where(a, s));
        }
    }
}

TabularMdp TabularMdp::from_dense(const std::vector<std::vector<std::vector<double>>>& transition,
                                  const std::vector<std::vector<std::vector<double>>>& reward,
                                  int goal, double discount) {
    const int n_actions = static_cast<int>(transition.size());
    if (n_actions == 0 || reward.size() != transition.size())
        throw InvalidModel("dense tables must have matching, non-empty action dimension");
    const int n_states = static_cast<int>(transition[0].size());
    std::vector<std::vector<Outcome>> rows(static_cast<std::size_t>(n_actions) * n_states);
    for (int a = 0; a < n_actions; ++a) {
        if (static_cast<int>(transition[a].size()) != n_states ||
            static_cast<int>(reward[a].size()) != n_states)
            throw InvalidModel("dense tables are ragged");
        for (int s = 0; s < n_states; ++s) {
            if (static_cast<int>(transition[a][s].size()) != n_states ||
                static_cast<int>(reward[a][s].size()) != n_states)
                throw InvalidModel("dense tables are ragged");
            auto& r = rows[static_cast<std::size_t>(a) * n_states + s];
            for (int k = 0; k < n_states; ++k) {
                if (transition[a][s][k] != 0.0)
                    r.push_back({k, transition[a][s][k], reward[a][s][k]});
            }
        }
    }
    return TabularMdp(n_states, n_actions, std::move(rows), goal, discount);
}

double TabularMdp::transition(int action, int state, int next) const {
    for (const Outcome& o : row(action, state))
        if (o.next == next) return o.prob;
    return 0.0;
}

double TabularMdp::reward(int action, int state, int next) const {
    for (const Outcome& o : row(action, state))
        if (o.next == next) return o.reward;
    return 0.0;
}

std::vector<double> TabularMdp::dense_row(int action, int state) const {
    std::vector<double> out(n_states_, 0.0);
    for (const Outcome& o : row(action, state)) out[o.next] = o.prob;
    return out;
}

std::vector<bool> goal_reachable_states(const TabularMdp& mdp) {
    const int n = mdp.n_states();
    std::vector<std::vector<int>> predecessors(n);
    for (int a = 0; a < mdp.n_actions(); ++a)
        for (int s = 0; s < n; ++s)
            for (const Outcome& o : mdp.row(a, s))
                if (o.next != s) predecessors[o.next].push_back(s);

    std::vector<bool> seen(n, false);
    std::vector<int> stack{mdp.goal()};
    seen[mdp.goal()] = true;
    while (!stack.empty()) {
        const int k = stack.back();
        stack.pop_back();
        for (int p : predecessors[k]) {
            if (!seen[p]) {
                seen[p] = true;
                stack.push_back(p);
            }
        }
    }
    return seen;
}

} // namespace mfptrl
