#pragma once

#include "mfptrl/gridworld.hpp"
#include "mfptrl/learners.hpp"
#include "mfptrl/mdp.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mfptrl {

/// Learners plus the two exact planners (vi: synchronous value iteration,
/// pvi: value-change prioritized value iteration).
enum class Method { q, dyna, mfpt_q, mfpt_dyna, vi, pvi };

std::string_view method_name(Method m);
/// Throws ValidationError for names outside {q, dyna, mfpt-q, mfpt-dyna, vi, pvi}.
Method parse_method(std::string_view name);

/**
 * One experiment: a map, an algorithm, learner parameters and a seed list.
 *
 * Config text is line oriented, `key value`, with `#` comments:
 *
 *     map maps/fig1.map            # relative to the config file
 *     algorithm mfpt-q
 *     seeds 1,2,3
 *     sample_budget 200000
 *     output_dir out
 *
 * Relative map and output_dir paths resolve against the config's directory.
 * Every LearnParams field is accepted under its own name, plus step_cost and
 * label.
 */
struct ExperimentConfig {
    std::filesystem::path map_path;
    Method algorithm = Method::q;
    LearnParams params;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output_dir = "out";
    /// Real-world cost of one environment sample, for the training-time proxy.
    double step_cost = 1.0;
    /// File stem for outputs; defaults to the algorithm name.
    std::string label;

    std::string stem() const { return label.empty() ? std::string(method_name(algorithm)) : label; }
    void validate() const;
};

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/**
 * Ground truth for convergence judgments: optimal action sets of the true MDP.
 *
 * Only states from which the goal is reachable (excluding the goal) are
 * judged. An action counts as optimal when its one-step lookahead is within
 * tie_tolerance of the optimal value.
 */
class Oracle {
public:
    static constexpr double kSolveTolerance = 1e-10;
    static constexpr double kTieTolerance = 1e-6;

    Oracle(const TabularMdp& mdp, double bellman_residual_limit);

    const ValueFunction& values() const noexcept { return values_; }
    const Policy& policy() const noexcept { return policy_; }
    bool judged(int s) const { return judged_[s]; }
    bool is_optimal_action(int s, int a) const { return optimal_[s][a]; }
    bool is_optimal(const Policy& pi) const;
    /// Number of judged states whose action is not optimal.
    int mistakes(const Policy& pi) const;
    double residual() const noexcept { return residual_; }

private:
    ValueFunction values_;
    Policy policy_;
    std::vector<bool> judged_;
    std::vector<std::vector<bool>> optimal_;
    double residual_ = 0.0;
};

struct Convergence {
    /// Samples at the first checkpoint from which every later snapshot is optimal.
    std::optional<long> samples;
    /// Wall-clock at that checkpoint (or at the end of the run when not converged).
    double wall_ms = 0.0;
    long sweeps = 0;
};

Convergence judge_trace(const LearningTrace& trace, const Oracle& oracle);

struct RunMetrics {
    std::string algorithm;
    std::uint64_t seed = 0;
    std::optional<long> samples_to_converge; // empty: NotConverged
    long vi_sweeps_total = 0;
    double wall_clock_ms = 0.0;
    double training_time_proxy = 0.0;
    long samples_consumed = 0;

    bool converged() const noexcept { return samples_to_converge.has_value(); }
};

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

/// Linear-interpolation quartiles; +inf entries sort last. Empty input gives NaN.
Quartiles quartiles(std::vector<double> values);

struct MetricsReport {
    std::string algorithm;
    std::vector<RunMetrics> runs;
    Quartiles samples_to_converge; // NotConverged counts as +inf
    Quartiles vi_sweeps_total;
    Quartiles wall_clock_ms;
    int converged_runs = 0;
};

MetricsReport run_experiment(const ExperimentConfig& cfg);
MetricsReport run_experiment(const ExperimentConfig& cfg, const GridSpec& map);

/// Writes <out>/<stem>.csv, <stem>.timing.csv and <stem>.summary.csv.
void write_report(const MetricsReport& report, const std::filesystem::path& out_dir,
                  const std::string& stem);

std::string metrics_csv(const MetricsReport& report);
std::string timing_csv(const MetricsReport& report);
std::string summary_csv(const MetricsReport& report);

struct ComparisonRow {
    std::string algorithm;
    int runs = 0;
    int converged = 0;
    double median_samples = 0.0;
    double median_wall_ms = 0.0;
    double median_sweeps = 0.0;
};

struct PairwiseWins {
    std::string first;
    std::string second;
    int first_wins = 0;
    int second_wins = 0;
    int ties = 0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    std::vector<PairwiseWins> wins;
    std::vector<MetricsReport> reports;
};

/// Runs every config and tabulates medians plus paired wins on samples_to_converge
/// (fewer samples wins; NotConverged loses to any converged run).
/// Throws ConfigMismatch when maps or seed lists differ.
ComparisonTable compare(const std::vector<ExperimentConfig>& cfgs);
ComparisonTable compare(const std::vector<ExperimentConfig>& cfgs, const GridSpec& map);

std::string comparison_csv(const ComparisonTable& table);
std::string comparison_timing_csv(const ComparisonTable& table);
std::string wins_csv(const ComparisonTable& table);
void write_comparison(const ComparisonTable& table, const std::filesystem::path& out_dir);

struct LandscapeSnapshot {
    long requested_samples = 0;
    long actual_samples = 0;
    MfptVector mfpt;
    std::filesystem::path base; // file prefix, without extension
};

/**
 * Runs the config's MFPT learner for its first seed and exports the MFPT
 * landscape of the greedy policy on the learned model at each requested
 * sample count. Counts beyond the end of the run use the final state.
 */
std::vector<LandscapeSnapshot> landscape(const ExperimentConfig& cfg,
                                         const std::vector<long>& at_samples);
std::vector<LandscapeSnapshot> landscape(const ExperimentConfig& cfg, const GridSpec& map,
                                         const std::vector<long>& at_samples);

/// MFPT landscape of the greedy policy of q on a learned model.
MfptVector learned_landscape(const LearnedModel& model, const QTable& q, int goal,
                             const LearnParams& params);

/// Shortest round-trip decimal form, "NA" for non-finite values.
std::string format_number(double x);

} // namespace mfptrl
