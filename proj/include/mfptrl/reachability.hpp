#pragma once

#include "mfptrl/mdp.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mfptrl {

struct ChainEntry {
    int to = 0;
    double prob = 0.0;
};

/// Row-stochastic transition matrix of a Markov chain, stored by sparse rows.
class ChainMatrix {
public:
    static constexpr double kRowSumTolerance = 1e-9;

    /// Rows are sorted by target; zero entries dropped; sums validated.
    explicit ChainMatrix(std::vector<std::vector<ChainEntry>> rows);
    static ChainMatrix from_dense(const std::vector<std::vector<double>>& p);

    int size() const noexcept { return static_cast<int>(rows_.size()); }
    std::span<const ChainEntry> row(int i) const { return rows_[i]; }
    double probability(int i, int k) const;

private:
    std::vector<std::vector<ChainEntry>> rows_;
};

/// Expected hop counts to the goal (mu_i = MFPT from state i to the goal).
struct MfptVector {
    std::vector<double> mu;
    std::vector<bool> capped;
    int goal = 0;
    double mu_cap = 0.0;

    int size() const noexcept { return static_cast<int>(mu.size()); }
    bool all_capped_except_goal() const;
};

/// Permutation of state indices sorted by ascending mu.
using PriorityOrder = std::vector<int>;

inline constexpr double kDefaultExplorationMix = 0.05;
inline constexpr double kDefaultMuCap = 1e6;
inline constexpr double kDefaultLandscapeClip = 600.0;

/// Chain followed by the MDP under pi, blended with the uniform-action mixture:
/// p[i] = (1 - mix) T[pi(i)][i] + mix * mean_a T[a][i].
ChainMatrix induced_chain(const TabularMdp& mdp, const Policy& pi, double exploration_mix);

/**
 * Solves mu_i = 1 + sum_{k != goal} p[i][k] mu_k for every i != goal, with
 * mu_goal = 0.
 *
 * States that can reach, with positive probability, a state from which the
 * goal is unreachable have infinite MFPT; they are capped before the solve and
 * excluded from the system. The remaining (goal-excluded) system is factored by
 * LU with partial pivoting. A numerically singular factorization caps every
 * state of the system. Solutions that are non-finite or exceed mu_cap are
 * capped as well. Capped entries hold exactly mu_cap.
 */
MfptVector solve_mfpt(const ChainMatrix& chain, int goal, double mu_cap = kDefaultMuCap);

/// |1 + sum_{k != goal} p[i][k] mu_k - mu_i| maximized over uncapped i != goal.
double mfpt_residual(const ChainMatrix& chain, const MfptVector& mfpt);

/// Stable ascending sort of state indices by mu.
PriorityOrder priority_order(const MfptVector& mfpt);

struct MonteCarloMfpt {
    std::vector<double> mean;
    std::vector<double> std_error;
};

/// Per-state sample mean of first-passage step counts over `episodes` walks,
/// each truncated after `horizon` steps (a truncated walk counts as horizon).
MonteCarloMfpt mfpt_monte_carlo(const ChainMatrix& chain, int goal, long episodes, long horizon,
                                std::uint64_t seed);

/// Extents of a 2D (depth == 1, three_d == false) or 3D grid, row-major cells.
struct GridShape {
    int width = 1;
    int height = 1;
    int depth = 1;
    bool three_d = false;

    int cells() const noexcept { return width * height * depth; }
    bool operator==(const GridShape&) const = default;
};

/// round(255 * min(mu, clip) / clip).
int landscape_pixel(double mu, double clip);

/**
 * Writes the reachability landscape as ASCII portable graymaps (P2, maxval
 * 255) and a CSV `state,mu,capped`.
 *
 * `base` is a path prefix: 2D shapes produce base.pgm, 3D shapes produce
 * base_z<k>.pgm per layer; both produce base.csv. `cell_state` maps each grid
 * cell to its state index or -1 for a cell that is not a state (drawn at
 * maxval). When empty, cells and states coincide and shape.cells() must equal
 * the state count.
 *
 * Throws ShapeMismatch or IoFailure.
 */
void landscape_export(const MfptVector& mfpt, const GridShape& shape, double clip,
                      const std::filesystem::path& base, std::span<const int> cell_state = {});

} // namespace mfptrl
