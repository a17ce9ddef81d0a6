#pragma once

#include "mfptrl/gridworld.hpp"
#include "mfptrl/mdp.hpp"
#include "mfptrl/reachability.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mfptrl {

using Rng = std::mt19937_64;

/// Dense action-value table q[s][a], zero-initialized.
class QTable {
public:
    QTable() = default;
    QTable(int n_states, int n_actions)
        : n_states_(n_states), n_actions_(n_actions),
          q_(static_cast<std::size_t>(n_states) * n_actions, 0.0) {}

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }

    double& operator()(int s, int a) { return q_[static_cast<std::size_t>(s) * n_actions_ + a]; }
    double operator()(int s, int a) const { return q_[static_cast<std::size_t>(s) * n_actions_ + a]; }

    std::span<const double> row(int s) const {
        return {q_.data() + static_cast<std::size_t>(s) * n_actions_,
                static_cast<std::size_t>(n_actions_)};
    }

    /// Lowest-index maximizer of q[s][.].
    int argmax(int s) const;
    double max(int s) const { return (*this)(s, argmax(s)); }

    Policy greedy() const;
    ValueFunction values() const;

    bool operator==(const QTable&) const = default;

private:
    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> q_;
};

struct Experience {
    int s = 0;
    int a = 0;
    double r = 0.0;
    int s_next = 0;
};

/**
 * Count-statistics estimate of T and R from experience tuples.
 *
 * t_hat(s,a,s') = count(s,a,s') / visits(s,a) and
 * r_hat(s,a,s') = reward_sum(s,a,s') / count(s,a,s'). A pair (s,a) that was
 * never visited behaves as a zero-reward self-loop.
 */
class LearnedModel {
public:
    struct Successor {
        int next = 0;
        long count = 0;
        double reward_sum = 0.0;

        bool operator==(const Successor&) const = default;
    };

    LearnedModel(int n_states, int n_actions);

    /// Model with counts proportional to an MDP's transition table:
    /// count = T * resolution, which must be integral for every entry.
    static LearnedModel exact(const TabularMdp& mdp, long resolution = 1);

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }

    void update(const Experience& e);

    long visits(int s, int a) const { return visits_[index(s, a)]; }
    long count(int s, int a, int next) const;
    double reward_sum(int s, int a, int next) const;
    double t_hat(int s, int a, int next) const;
    double r_hat(int s, int a, int next) const;
    std::span<const Successor> successors(int s, int a) const { return successors_[index(s, a)]; }

    /// (s, a) pairs in order of first visit.
    const std::vector<std::pair<int, int>>& observed_pairs() const noexcept { return observed_; }

    /// Samples s' ~ t_hat(s,a,.). Requires visits(s,a) > 0.
    const Successor& sample(int s, int a, Rng& rng) const;

    /// The estimated MDP (t_hat, r_hat) with the given goal and discount.
    TabularMdp to_mdp(int goal, double discount) const;

    bool operator==(const LearnedModel&) const = default;

private:
    std::size_t index(int s, int a) const { return static_cast<std::size_t>(s) * n_actions_ + a; }

    int n_states_;
    int n_actions_;
    std::vector<long> visits_;
    std::vector<std::vector<Successor>> successors_;
    std::vector<std::pair<int, int>> observed_;
};

struct LearnParams {
    double alpha = 0.1;
    double gamma = 0.95;
    double epsilon_greedy = 0.1;
    double epsilon_tol = 1e-4;
    int planning_steps = 10;
    int mfpt_period = 20;
    double exploration_mix = kDefaultExplorationMix;
    double mu_cap = kDefaultMuCap;
    long sample_budget = 100000;
    std::uint64_t seed = 0;
    long checkpoint_interval = 100;
    long max_vi_sweeps = 100000;
    /// MFPT learners stop after this many consecutive phases without a policy
    /// change, once every non-goal (s, a) pair has been observed.
    int stable_phases = 10;

    void validate() const;
};

enum class Algorithm { q_learning, dyna, mfpt_q, mfpt_dyna };

std::string_view algorithm_name(Algorithm a);

struct PolicyChange {
    int state = 0;
    int action = 0;

    bool operator==(const PolicyChange&) const = default;
};

/// Greedy policy snapshot stored as the changes since the previous checkpoint
/// (the first checkpoint is relative to the all-zero policy).
struct Checkpoint {
    long samples = 0;
    long sweeps = 0;
    double wall_ms = 0.0;
    std::vector<PolicyChange> changes;
};

struct LearningTrace {
    Algorithm algorithm = Algorithm::q_learning;
    int n_states = 0;
    std::vector<Checkpoint> checkpoints;
    QTable q;
    ValueFunction v;
    /// Final learned model; empty for Q-learning.
    std::optional<LearnedModel> model;
    long samples_consumed = 0;
    long sweeps_total = 0;
    bool stopped_early = false;

    /// Policies at every checkpoint, reconstructed from the deltas.
    std::vector<Policy> policies() const;
    Policy final_policy() const;

    /// Equality of checkpoints, tables and counters; wall-clock readings and the
    /// retained model are not compared.
    bool same_run(const LearningTrace& other) const;
};

/// q[s][a] += alpha (r + gamma max_a' q[s'][a'] - q[s][a]).
void q_update(QTable& q, const Experience& e, double alpha, double gamma);

/// With probability 1 - eps the lowest-index argmax, otherwise a uniform action.
/// The coin is always drawn, so eps = 0 still advances rng.
int epsilon_greedy(const QTable& q, int s, double eps, Rng& rng);

inline void model_update(LearnedModel& m, const Experience& e) { m.update(e); }

struct PhaseResult {
    long sweeps = 0;
    double delta_max = 0.0;
    MfptVector mfpt;
};

/**
 * Model-based refinement shared by MFPT-Q and MFPT-DYNA.
 *
 * Solves the MFPT vector once on the chain induced by the greedy policy of q
 * on the learned model, then sweeps states in ascending-MFPT order, Gauss-Seidel
 * style, rewriting q(s,.) from the model and v(s) = max_a q(s,a), until one
 * sweep changes no value by more than epsilon_tol. Throws BudgetExhausted after
 * max_vi_sweeps.
 */
PhaseResult mfpt_vi_phase(const LearnedModel& m, QTable& q, ValueFunction& v, int goal,
                          const LearnParams& params);

/// Read-only view handed to a SampleObserver.
struct LearnerView {
    long samples = 0;
    const QTable& q;
    const LearnedModel* model = nullptr;
    int goal = 0;
};

/// Called once before the first sample and after every sample.
using SampleObserver = std::function<void(const LearnerView&)>;

struct RunOptions {
    /// Initial model for the model-based learners (copied).
    const LearnedModel* warm_start = nullptr;
    SampleObserver observer;
};

LearningTrace run_learner(Algorithm algorithm, const GridWorld& env, const LearnParams& params,
                          const RunOptions& options = {});

LearningTrace run_q_learning(const GridWorld& env, const LearnParams& params);
LearningTrace run_dyna(const GridWorld& env, const LearnParams& params);
LearningTrace run_mfpt_q(const GridWorld& env, const LearnParams& params,
                         const RunOptions& options = {});
LearningTrace run_mfpt_dyna(const GridWorld& env, const LearnParams& params,
                            const RunOptions& options = {});

} // namespace mfptrl
