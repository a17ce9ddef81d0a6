#include "mfptrl/gridworld.hpp"

#include "mfptrl/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace mfptrl {

namespace {

std::string cell_text(const Cell& c) {
    return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + "," + std::to_string(c.z) + ")";
}

std::string format_real(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

} // namespace

bool GridSpec::in_bounds(const Cell& c) const {
    return c.x >= 0 && c.x < shape.width && c.y >= 0 && c.y < shape.height && c.z >= 0 &&
           c.z < shape.depth;
}

bool GridSpec::is_obstacle(const Cell& c) const {
    return std::binary_search(obstacles.begin(), obstacles.end(), c);
}

void GridSpec::validate() const {
    if (shape.width < 1 || shape.height < 1 || shape.depth < 1)
        throw ValidationError("grid extents must be positive");
    if (!shape.three_d && shape.depth != 1) throw ValidationError("2d grid must have depth 1");
    if (!std::is_sorted(obstacles.begin(), obstacles.end()) ||
        std::adjacent_find(obstacles.begin(), obstacles.end()) != obstacles.end())
        throw ValidationError("obstacle list must be sorted and unique");
    for (const Cell& c : obstacles)
        if (!in_bounds(c)) throw ValidationError("obstacle " + cell_text(c) + " outside grid");
    if (!in_bounds(start)) throw ValidationError("start outside grid");
    if (!in_bounds(goal)) throw ValidationError("goal outside grid");
    if (start == goal) throw ValidationError("start and goal coincide");
    if (is_obstacle(start)) throw ValidationError("start cell is an obstacle");
    if (is_obstacle(goal)) throw ValidationError("goal cell is an obstacle");
    if (!std::isfinite(goal_reward) || !std::isfinite(step_reward))
        throw ValidationError("rewards must be finite");
    if (!(slip >= 0.0 && slip < 1.0)) throw ValidationError("slip must lie in [0, 1)");
}

ActionSet ActionSet::planar() {
    return {{{0, 0, 0},
             {0, -1, 0},
             {1, -1, 0},
             {1, 0, 0},
             {1, 1, 0},
             {0, 1, 0},
             {-1, 1, 0},
             {-1, 0, 0},
             {-1, -1, 0}},
            {"idle", "N", "NE", "E", "SE", "S", "SW", "W", "NW"}};
}

ActionSet ActionSet::volumetric() {
    return {{{0, 0, 0}, {0, -1, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, 0, 1}, {0, 0, -1}},
            {"idle", "N", "E", "S", "W", "TOP", "BOTTOM"}};
}

ActionSet ActionSet::for_shape(const GridShape& shape) {
    return shape.three_d ? volumetric() : planar();
}

// ---------------------------------------------------------------------------
// Map text

namespace {

struct Line {
    std::string_view text;
    std::size_t number;
};

std::vector<Line> split_lines(std::string_view text) {
    std::vector<Line> lines;
    std::size_t pos = 0, number = 1;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                              : nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back({line, number++});
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    // A terminating newline does not open another line.
    if (!lines.empty() && lines.back().text.empty() && !text.empty() && text.back() == '\n')
        lines.pop_back();
    return lines;
}

struct Token {
    std::string_view text;
    std::size_t column; // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t begin = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > begin) out.push_back({line.substr(begin, i - begin), begin + 1});
    }
    return out;
}

int parse_extent(const Token& t, std::size_t line) {
    int value = 0;
    auto [end, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || end != t.text.data() + t.text.size())
        throw ParseError("expected an integer, got '" + std::string(t.text) + "'", line, t.column);
    if (value < 1) throw ParseError("grid extent must be positive", line, t.column);
    return value;
}

double parse_real(const Token& t, std::size_t line) {
    double value = 0.0;
    auto [end, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || end != t.text.data() + t.text.size())
        throw ParseError("expected a real number, got '" + std::string(t.text) + "'", line,
                         t.column);
    return value;
}

bool is_parameter_key(std::string_view word) {
    return word == "goal_reward" || word == "step_reward" || word == "slip";
}

} // namespace

GridSpec parse_map(std::string_view text) {
    const std::vector<Line> lines = split_lines(text);
    if (lines.empty()) throw ParseError("empty map", 1, 1);

    GridSpec spec;
    const auto header = tokenize(lines[0].text);
    if (header.empty()) throw ParseError("missing header", 1, 1);
    if (header[0].text == "2d") {
        if (header.size() != 3) throw ParseError("expected '2d <width> <height>'", 1, 1);
        spec.shape = {parse_extent(header[1], 1), parse_extent(header[2], 1), 1, false};
    } else if (header[0].text == "3d") {
        if (header.size() != 4) throw ParseError("expected '3d <width> <height> <depth>'", 1, 1);
        spec.shape = {parse_extent(header[1], 1), parse_extent(header[2], 1),
                      parse_extent(header[3], 1), true};
    } else {
        throw ParseError("header must start with '2d' or '3d'", 1, header[0].column);
    }

    std::size_t li = 1;
    std::vector<std::string_view> seen_keys;
    while (li < lines.size()) {
        const auto tokens = tokenize(lines[li].text);
        if (tokens.empty() || !is_parameter_key(tokens[0].text)) break;
        const std::size_t n = lines[li].number;
        if (tokens.size() != 2)
            throw ParseError("expected '<key> <value>'", n, tokens[0].column);
        if (std::find(seen_keys.begin(), seen_keys.end(), tokens[0].text) != seen_keys.end())
            throw ParseError("duplicate parameter '" + std::string(tokens[0].text) + "'", n,
                             tokens[0].column);
        seen_keys.push_back(tokens[0].text);
        const double value = parse_real(tokens[1], n);
        if (tokens[0].text == "goal_reward") spec.goal_reward = value;
        else if (tokens[0].text == "step_reward") spec.step_reward = value;
        else spec.slip = value;
        ++li;
    }

    int starts = 0, goals = 0;
    for (int z = 0; z < spec.shape.depth; ++z) {
        if (z > 0) {
            if (li >= lines.size())
                throw ParseError("missing layer " + std::to_string(z),
                                 lines.back().number + 1, 1);
            if (!lines[li].text.empty())
                throw ParseError("expected a blank line between layers", lines[li].number, 1);
            ++li;
        }
        for (int y = 0; y < spec.shape.height; ++y, ++li) {
            if (li >= lines.size())
                throw ParseError("expected " + std::to_string(spec.shape.height) + " rows",
                                 lines.back().number + 1, 1);
            const Line& row = lines[li];
            if (row.text.size() != static_cast<std::size_t>(spec.shape.width))
                throw ParseError("row must have exactly " + std::to_string(spec.shape.width) +
                                     " cells",
                                 row.number,
                                 std::min(row.text.size(),
                                          static_cast<std::size_t>(spec.shape.width)) + 1);
            for (int x = 0; x < spec.shape.width; ++x) {
                const Cell c{x, y, z};
                switch (row.text[x]) {
                case '.': break;
                case 'X': spec.obstacles.push_back(c); break;
                case 'S': spec.start = c; ++starts; break;
                case 'G': spec.goal = c; ++goals; break;
                default:
                    throw ParseError(std::string("unexpected character '") + row.text[x] + "'",
                                     row.number, static_cast<std::size_t>(x) + 1);
                }
            }
        }
    }
    for (; li < lines.size(); ++li)
        if (!lines[li].text.empty())
            throw ParseError("unexpected content after the grid", lines[li].number, 1);

    if (starts != 1) throw ValidationError("map must contain exactly one 'S' (found " +
                                           std::to_string(starts) + ")");
    if (goals != 1) throw ValidationError("map must contain exactly one 'G' (found " +
                                          std::to_string(goals) + ")");
    std::sort(spec.obstacles.begin(), spec.obstacles.end());
    spec.validate();
    return spec;
}

std::string serialize_map(const GridSpec& spec) {
    spec.validate();
    const GridSpec defaults;
    std::string out;
    if (spec.shape.three_d)
        out += "3d " + std::to_string(spec.shape.width) + ' ' + std::to_string(spec.shape.height) +
               ' ' + std::to_string(spec.shape.depth) + '\n';
    else
        out += "2d " + std::to_string(spec.shape.width) + ' ' + std::to_string(spec.shape.height) +
               '\n';
    if (spec.goal_reward != defaults.goal_reward)
        out += "goal_reward " + format_real(spec.goal_reward) + '\n';
    if (spec.step_reward != defaults.step_reward)
        out += "step_reward " + format_real(spec.step_reward) + '\n';
    if (spec.slip != defaults.slip) out += "slip " + format_real(spec.slip) + '\n';

    for (int z = 0; z < spec.shape.depth; ++z) {
        if (z > 0) out += '\n';
        for (int y = 0; y < spec.shape.height; ++y) {
            for (int x = 0; x < spec.shape.width; ++x) {
                const Cell c{x, y, z};
                if (c == spec.start) out += 'S';
                else if (c == spec.goal) out += 'G';
                else if (spec.is_obstacle(c)) out += 'X';
                else out += '.';
            }
            out += '\n';
        }
    }
    return out;
}

GridSpec load_map(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot read map '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_map(ss.str());
}

// ---------------------------------------------------------------------------
// GridWorld

GridWorld::GridWorld(GridSpec spec) : spec_(std::move(spec)), actions_(ActionSet::for_shape(spec_.shape)) {
    spec_.validate();
    const GridShape& g = spec_.shape;
    cell_state_.assign(g.cells(), -1);
    for (int z = 0; z < g.depth; ++z)
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x) {
                const Cell c{x, y, z};
                if (spec_.is_obstacle(c)) continue;
                cell_state_[(z * g.height + y) * g.width + x] = static_cast<int>(cells_.size());
                cells_.push_back(c);
            }
    goal_ = state_of(spec_.goal);
    start_ = state_of(spec_.start);

    const int n_actions = actions_.size();
    targets_.resize(cells_.size() * n_actions);
    for (int s = 0; s < n_states(); ++s) {
        for (int a = 0; a < n_actions; ++a) {
            const auto& d = actions_.offsets[a];
            const Cell c = cells_[s];
            const int t = state_of({c.x + d[0], c.y + d[1], c.z + d[2]});
            targets_[static_cast<std::size_t>(s) * n_actions + a] = t < 0 ? s : t;
        }
    }
}

int GridWorld::state_of(const Cell& c) const {
    if (!spec_.in_bounds(c)) return -1;
    const GridShape& g = spec_.shape;
    return cell_state_[(c.z * g.height + c.y) * g.width + c.x];
}

int GridWorld::move_target(int state, int action) const {
    return targets_[static_cast<std::size_t>(state) * n_actions() + action];
}

TabularMdp GridWorld::build_mdp(double discount) const {
    const int n = n_states();
    const int n_actions = actions_.size();
    const double slip = spec_.slip;
    const double other = n_actions > 1 ? slip / (n_actions - 1) : 0.0;

    std::vector<std::vector<Outcome>> rows(static_cast<std::size_t>(n) * n_actions);
    std::map<int, double> mass;
    for (int a = 0; a < n_actions; ++a) {
        for (int s = 0; s < n; ++s) {
            mass.clear();
            for (int b = 0; b < n_actions; ++b) {
                const double p = b == a ? 1.0 - slip : other;
                if (p > 0.0) mass[move_target(s, b)] += p;
            }
            auto& row = rows[static_cast<std::size_t>(a) * n + s];
            for (const auto& [next, p] : mass) row.push_back({next, p, reward_into(next)});
        }
    }
    return TabularMdp(n, n_actions, std::move(rows), goal_, discount);
}

StepResult GridWorld::step(int state, int action, std::mt19937_64& rng) const {
    if (state == goal_) return {goal_, 0.0, true};
    int taken = action;
    if (spec_.slip > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < spec_.slip) {
            std::uniform_int_distribution<int> pick(0, n_actions() - 2);
            const int b = pick(rng);
            taken = b < action ? b : b + 1;
        }
    }
    const int next = move_target(state, taken);
    return {next, reward_into(next), next == goal_};
}

TabularMdp build_mdp(const GridSpec& spec, double discount) {
    return GridWorld(spec).build_mdp(discount);
}

StepResult env_step(const GridWorld& world, int state, int action, std::mt19937_64& rng) {
    return world.step(state, action, rng);
}

// ---------------------------------------------------------------------------
// Random maps

namespace {

bool free_space_connected(const GridSpec& spec) {
    GridWorld world(spec);
    std::vector<bool> seen(world.n_states(), false);
    std::vector<int> stack{world.goal()};
    seen[world.goal()] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
        const int s = stack.back();
        stack.pop_back();
        // Moves are symmetric on grids, so forward neighbours double as predecessors.
        for (int a = 1; a < world.n_actions(); ++a) {
            const int t = world.move_target(s, a);
            if (!seen[t]) {
                seen[t] = true;
                ++count;
                stack.push_back(t);
            }
        }
    }
    return count == static_cast<std::size_t>(world.n_states());
}

} // namespace

GridSpec generate_map(const GridShape& shape, int obstacle_count, std::uint64_t seed) {
    const int cells = shape.cells();
    if (obstacle_count < 0 || obstacle_count > cells - 2)
        throw ValidationError("obstacle count leaves fewer than two free cells");

    std::mt19937_64 rng(seed);
    std::vector<Cell> all;
    all.reserve(cells);
    for (int z = 0; z < shape.depth; ++z)
        for (int y = 0; y < shape.height; ++y)
            for (int x = 0; x < shape.width; ++x) all.push_back({x, y, z});

    for (int attempt = 0; attempt < 10000; ++attempt) {
        std::shuffle(all.begin(), all.end(), rng);
        GridSpec spec;
        spec.shape = shape;
        spec.start = all[0];
        spec.goal = all[1];
        spec.obstacles.assign(all.begin() + 2, all.begin() + 2 + obstacle_count);
        std::sort(spec.obstacles.begin(), spec.obstacles.end());
        if (free_space_connected(spec)) return spec;
    }
    throw ValidationError("could not generate a connected map with " +
                          std::to_string(obstacle_count) + " obstacles");
}

} // namespace mfptrl
