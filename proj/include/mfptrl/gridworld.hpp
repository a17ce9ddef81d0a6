#pragma once

#include "mfptrl/mdp.hpp"
#include "mfptrl/reachability.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfptrl {

struct Cell {
    int x = 0;
    int y = 0;
    int z = 0;

    auto operator<=>(const Cell&) const = default;
};

/**
 * A 2D or 3D occupancy grid with start and goal cells.
 *
 * Map text format (UTF-8):
 *
 *     2d <width> <height>            or   3d <width> <height> <depth>
 *     goal_reward <real>             (optional, any order, each at most once)
 *     step_reward <real>             (optional)
 *     slip <real>                    (optional)
 *     <height rows of width chars>   '.' free, 'X' obstacle, 'S' start, 'G' goal
 *
 * 3D maps list `depth` layers (z = 0 first), separated by one blank line.
 * Row y = 0 is the first row of a layer.
 */
struct GridSpec {
    GridShape shape;
    std::vector<Cell> obstacles; // sorted, unique
    Cell start;
    Cell goal;
    double goal_reward = 100.0;
    double step_reward = -1.0;
    double slip = 0.0;

    /// Throws ValidationError naming the violated invariant.
    void validate() const;
    bool is_obstacle(const Cell& c) const;
    bool in_bounds(const Cell& c) const;

    bool operator==(const GridSpec&) const = default;
};

/// Ordered displacement list; index 0 is always the idle action.
struct ActionSet {
    std::vector<std::array<int, 3>> offsets;
    std::vector<std::string> names;

    int size() const noexcept { return static_cast<int>(offsets.size()); }

    /// idle, N, NE, E, SE, S, SW, W, NW (N decreases y).
    static ActionSet planar();
    /// idle, N, E, S, W, TOP, BOTTOM (TOP increases z).
    static ActionSet volumetric();
    static ActionSet for_shape(const GridShape& shape);
};

GridSpec parse_map(std::string_view text);
std::string serialize_map(const GridSpec& spec);

GridSpec load_map(const std::string& path);

struct StepResult {
    int next = 0;
    double reward = 0.0;
    bool done = false;
};

/**
 * A validated GridSpec with its state indexing. Free cells are states,
 * numbered row-major (x fastest, then y, then z); obstacle cells are not
 * states.
 */
class GridWorld {
public:
    explicit GridWorld(GridSpec spec);

    const GridSpec& spec() const noexcept { return spec_; }
    const ActionSet& actions() const noexcept { return actions_; }
    int n_states() const noexcept { return static_cast<int>(cells_.size()); }
    int n_actions() const noexcept { return actions_.size(); }
    int goal() const noexcept { return goal_; }
    int start() const noexcept { return start_; }

    /// State index of a cell, or -1 for obstacles and out-of-grid cells.
    int state_of(const Cell& c) const;
    const Cell& cell_of(int state) const { return cells_[state]; }
    /// Grid cell (row-major) -> state index or -1.
    std::span<const int> cell_states() const noexcept { return cell_state_; }

    /// Deterministic result of action a at s: blocked or off-grid moves stay put.
    int move_target(int state, int action) const;

    /// Exact transition model with the slip mixture and absorbing goal.
    TabularMdp build_mdp(double discount) const;

    /// Samples one step from the same distribution build_mdp encodes.
    /// Draws from rng only when slip > 0.
    StepResult step(int state, int action, std::mt19937_64& rng) const;

private:
    double reward_into(int next) const { return next == goal_ ? spec_.goal_reward : spec_.step_reward; }

    GridSpec spec_;
    ActionSet actions_;
    std::vector<Cell> cells_;
    std::vector<int> cell_state_;
    std::vector<int> targets_; // targets_[s * n_actions + a]
    int goal_ = 0;
    int start_ = 0;
};

TabularMdp build_mdp(const GridSpec& spec, double discount);
StepResult env_step(const GridWorld& world, int state, int action, std::mt19937_64& rng);

/**
 * Random map whose free cells all reach the goal under the action set.
 * Obstacles are drawn uniformly; draws that disconnect the free space are
 * rejected and redrawn.
 */
GridSpec generate_map(const GridShape& shape, int obstacle_count, std::uint64_t seed);

} // namespace mfptrl
