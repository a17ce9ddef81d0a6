#include "mfptrl/learners.hpp"

#include "mfptrl/errors.hpp"
#include "mfptrl/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>

namespace mfptrl {

int QTable::argmax(int s) const {
    const auto r = row(s);
    int best = 0;
    for (int a = 1; a < n_actions_; ++a)
        if (r[a] > r[best]) best = a;
    return best;
}

Policy QTable::greedy() const {
    Policy pi(n_states_);
    for (int s = 0; s < n_states_; ++s) pi[s] = argmax(s);
    return pi;
}

ValueFunction QTable::values() const {
    ValueFunction v(n_states_);
    for (int s = 0; s < n_states_; ++s) v[s] = max(s);
    return v;
}

void LearnParams::validate() const {
    auto fail = [](const std::string& what) { throw InvalidModel("invalid learner parameter: " + what); };
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must lie in (0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
    if (!(epsilon_greedy >= 0.0 && epsilon_greedy <= 1.0)) fail("epsilon_greedy must lie in [0, 1]");
    if (!(epsilon_tol > 0.0)) fail("epsilon_tol must be positive");
    if (planning_steps < 0) fail("planning_steps must be non-negative");
    if (mfpt_period < 1) fail("mfpt_period must be at least 1");
    if (!(exploration_mix >= 0.0 && exploration_mix < 1.0)) fail("exploration_mix must lie in [0, 1)");
    if (!(mu_cap > 0.0)) fail("mu_cap must be positive");
    if (sample_budget < 0) fail("sample_budget must be non-negative");
    if (checkpoint_interval < 1) fail("checkpoint_interval must be at least 1");
    if (max_vi_sweeps < 1) fail("max_vi_sweeps must be at least 1");
    if (stable_phases < 1) fail("stable_phases must be at least 1");
}

std::string_view algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::q_learning: return "q";
    case Algorithm::dyna: return "dyna";
    case Algorithm::mfpt_q: return "mfpt-q";
    case Algorithm::mfpt_dyna: return "mfpt-dyna";
    }
    return "?";
}

std::vector<Policy> LearningTrace::policies() const {
    std::vector<Policy> out;
    out.reserve(checkpoints.size());
    Policy current(n_states, 0);
    for (const Checkpoint& c : checkpoints) {
        for (const PolicyChange& ch : c.changes) current[ch.state] = ch.action;
        out.push_back(current);
    }
    return out;
}

Policy LearningTrace::final_policy() const {
    Policy current(n_states, 0);
    for (const Checkpoint& c : checkpoints)
        for (const PolicyChange& ch : c.changes) current[ch.state] = ch.action;
    return current;
}

bool LearningTrace::same_run(const LearningTrace& o) const {
    if (n_states != o.n_states || samples_consumed != o.samples_consumed ||
        sweeps_total != o.sweeps_total || stopped_early != o.stopped_early || !(q == o.q) ||
        v != o.v || checkpoints.size() != o.checkpoints.size())
        return false;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const Checkpoint& a = checkpoints[i];
        const Checkpoint& b = o.checkpoints[i];
        if (a.samples != b.samples || a.sweeps != b.sweeps || a.changes != b.changes) return false;
    }
    return true;
}

void q_update(QTable& q, const Experience& e, double alpha, double gamma) {
    const double target = e.r + gamma * q.max(e.s_next);
    double& cell = q(e.s, e.a);
    cell += alpha * (target - cell);
}

int epsilon_greedy(const QTable& q, int s, double eps, Rng& rng) {
    const double coin = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (coin < eps) {
        std::uniform_int_distribution<int> pick(0, q.n_actions() - 1);
        return pick(rng);
    }
    return q.argmax(s);
}

PhaseResult mfpt_vi_phase(const LearnedModel& m, QTable& q, ValueFunction& v, int goal,
                          const LearnParams& params) {
    if (q.n_states() != m.n_states() || q.n_actions() != m.n_actions() ||
        v.size() != static_cast<std::size_t>(m.n_states()))
        throw LengthMismatch("model, Q-table and value function dimensions differ");

    const TabularMdp model = m.to_mdp(goal, params.gamma);
    const ChainMatrix chain = induced_chain(model, q.greedy(), params.exploration_mix);
    PhaseResult result;
    result.mfpt = solve_mfpt(chain, goal, params.mu_cap);
    const PriorityOrder order = priority_order(result.mfpt);

    const int n_actions = model.n_actions();
    while (true) {
        ++result.sweeps;
        double delta = 0.0;
        for (int s : order) {
            double best = 0.0;
            for (int a = 0; a < n_actions; ++a) {
                const double value = action_value(model, v, s, a);
                q(s, a) = value;
                if (a == 0 || value > best) best = value;
            }
            delta = std::max(delta, std::abs(best - v[s]));
            v[s] = best;
        }
        result.delta_max = delta;
        if (delta <= params.epsilon_tol) break;
        if (result.sweeps >= params.max_vi_sweeps)
            throw BudgetExhausted("mfpt_vi_phase did not reach tolerance within " +
                                      std::to_string(result.sweeps) + " sweeps",
                                  result.sweeps, delta);
    }
    return result;
}

namespace {

bool plans(Algorithm a) { return a == Algorithm::dyna || a == Algorithm::mfpt_dyna; }
bool uses_mfpt(Algorithm a) { return a == Algorithm::mfpt_q || a == Algorithm::mfpt_dyna; }

class Recorder {
public:
    Recorder(LearningTrace& trace, int n_states)
        : trace_(trace), last_(n_states, 0), start_(std::chrono::steady_clock::now()) {}

    void record(long samples, long sweeps, const QTable& q) {
        Checkpoint c;
        c.samples = samples;
        c.sweeps = sweeps;
        for (int s = 0; s < q.n_states(); ++s) {
            const int a = q.argmax(s);
            if (a != last_[s]) {
                c.changes.push_back({s, a});
                last_[s] = a;
            }
        }
        c.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start_)
                        .count();
        trace_.checkpoints.push_back(std::move(c));
    }

private:
    LearningTrace& trace_;
    Policy last_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace

LearningTrace run_learner(Algorithm algorithm, const GridWorld& env, const LearnParams& params,
                          const RunOptions& options) {
    params.validate();
    const int n = env.n_states();
    const int n_actions = env.n_actions();
    const int goal = env.goal();

    LearningTrace trace;
    trace.algorithm = algorithm;
    trace.n_states = n;
    trace.q = QTable(n, n_actions);
    QTable& q = trace.q;
    ValueFunction v(n, 0.0);

    const bool keep_model = algorithm != Algorithm::q_learning;
    std::optional<LearnedModel>& model = trace.model;
    if (keep_model) {
        if (options.warm_start && uses_mfpt(algorithm)) model.emplace(*options.warm_start);
        else model.emplace(n, n_actions);
        if (model->n_states() != n || model->n_actions() != n_actions)
            throw LengthMismatch("warm-start model does not match the environment");
    }

    std::vector<int> start_states;
    start_states.reserve(n);
    for (int s = 0; s < n; ++s)
        if (s != goal) start_states.push_back(s);

    Rng rng(params.seed);
    std::uniform_int_distribution<std::size_t> pick_state(0, start_states.size() - 1);
    Recorder recorder(trace, n);

    auto observe = [&](long samples) {
        if (options.observer)
            options.observer(LearnerView{samples, q, model ? &*model : nullptr, goal});
    };

    const std::size_t covered = static_cast<std::size_t>(n - 1) * n_actions;
    long sweeps = 0;
    long samples = 0;
    int stable = 0;
    std::optional<Policy> last_phase_policy;
    recorder.record(0, 0, q);
    observe(0);

    while (samples < params.sample_budget) {
        const int s = start_states[pick_state(rng)];
        const int a = epsilon_greedy(q, s, params.epsilon_greedy, rng);
        const StepResult step = env.step(s, a, rng);
        const Experience e{s, a, step.reward, step.next};
        q_update(q, e, params.alpha, params.gamma);
        if (model) model_update(*model, e);

        if (plans(algorithm)) {
            const auto& pairs = model->observed_pairs();
            std::uniform_int_distribution<std::size_t> pick_pair(0, pairs.size() - 1);
            for (int i = 0; i < params.planning_steps; ++i) {
                const auto [ps, pa] = pairs[pick_pair(rng)];
                const auto& succ = model->sample(ps, pa, rng);
                const double r = succ.reward_sum / static_cast<double>(succ.count);
                q_update(q, {ps, pa, r, succ.next}, params.alpha, params.gamma);
            }
        }
        ++samples;

        bool stop = false;
        if (uses_mfpt(algorithm) && samples % params.mfpt_period == 0) {
            const PhaseResult phase = mfpt_vi_phase(*model, q, v, goal, params);
            sweeps += phase.sweeps;
            Policy pi = q.greedy();
            if (phase.delta_max <= params.epsilon_tol && last_phase_policy && pi == *last_phase_policy)
                ++stable;
            else
                stable = 0;
            last_phase_policy = std::move(pi);
            stop = stable >= params.stable_phases && model->observed_pairs().size() >= covered;
        }

        observe(samples);
        if (samples % params.checkpoint_interval == 0) recorder.record(samples, sweeps, q);
        if (stop) {
            trace.stopped_early = true;
            break;
        }
    }
    if (trace.checkpoints.back().samples != samples) recorder.record(samples, sweeps, q);

    trace.samples_consumed = samples;
    trace.sweeps_total = sweeps;
    trace.v = uses_mfpt(algorithm) ? v : q.values();
    return trace;
}

LearningTrace run_q_learning(const GridWorld& env, const LearnParams& params) {
    return run_learner(Algorithm::q_learning, env, params);
}

LearningTrace run_dyna(const GridWorld& env, const LearnParams& params) {
    return run_learner(Algorithm::dyna, env, params);
}

LearningTrace run_mfpt_q(const GridWorld& env, const LearnParams& params, const RunOptions& options) {
    return run_learner(Algorithm::mfpt_q, env, params, options);
}

LearningTrace run_mfpt_dyna(const GridWorld& env, const LearnParams& params,
                            const RunOptions& options) {
    return run_learner(Algorithm::mfpt_dyna, env, params, options);
}

} // namespace mfptrl
