#pragma once

// Desk-scale maze environments. GridMaze moves between integer cells with four
// actions; PointMaze moves a continuous point in eight directions with a fixed
// step length. Both expose the position as the state representation.

#include <array>
#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "g4rl/rng.hpp"
#include "g4rl/state_graph.hpp"

namespace g4rl {

enum class RewardMode { Dense, Sparse };
enum class MazeKind { Grid, Point };

using Cell = std::pair<int, int>;

struct MazeSpec {
    MazeKind kind = MazeKind::Grid;
    int width = 10;
    int height = 10;
    std::set<Cell> walls;  // blocked cells
    /// Moves from `first` to `second` are allowed, the reverse move is blocked.
    std::vector<std::pair<Cell, Cell>> one_way;
    std::array<double, 2> start{0.0, 0.0};
    std::array<double, 2> goal{9.0, 9.0};
    double goal_radius = 1.0;
    RewardMode reward_mode = RewardMode::Sparse;
    int max_steps = 200;
    double step_length = 0.5;  // PointMaze only

    /// Throws ConfigError when bounds, start, goal or radius are invalid or
    /// the goal is unreachable from the start.
    void validate() const;

    bool in_bounds(const Cell& c) const { return c.first >= 0 && c.second >= 0 && c.first < width && c.second < height; }
    bool blocked(const Cell& c) const { return !in_bounds(c) || walls.count(c) > 0; }
    bool move_allowed(const Cell& from, const Cell& to) const;

    /// Cells reachable from the start cell with unit grid moves (BFS).
    std::set<Cell> reachable_cells() const;
};

void to_json(nlohmann::json& j, const MazeSpec& spec);
void from_json(const nlohmann::json& j, MazeSpec& spec);

/// Desk-scale default: 10x10 grid with a dividing wall, sparse reward, T = 200.
MazeSpec default_maze();

struct EnvState {
    std::array<double, 2> position{0.0, 0.0};
    int step_index = 0;
    bool done = false;
    bool success = false;
};

struct StepResult {
    StateRepr phi;
    double reward = 0.0;
    bool done = false;
    bool success = false;
};

class MazeEnv {
public:
    explicit MazeEnv(MazeSpec spec);

    const MazeSpec& spec() const { return spec_; }
    const EnvState& state() const { return state_; }
    std::size_t action_count() const;

    /// Back to the start position. The generator is accepted for interface
    /// symmetry; resets are deterministic.
    StateRepr reset(Rng& rng);
    StepResult step(std::size_t action);
    StateRepr phi() const { return phi(state_); }
    static StateRepr phi(const EnvState& state) { return {state.position[0], state.position[1]}; }

    /// Lower and upper coordinate bounds of the state representation.
    std::array<double, 2> lower_bound() const { return {0.0, 0.0}; }
    std::array<double, 2> upper_bound() const;

    double goal_distance(const std::array<double, 2>& p) const;

private:
    MazeSpec spec_;
    EnvState state_;
};

/// Grid action displacements: right, left, up, down.
inline constexpr std::array<std::array<int, 2>, 4> kGridMoves{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

}  // namespace g4rl
