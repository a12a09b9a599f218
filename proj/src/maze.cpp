#include "g4rl/maze.hpp"

#include <cmath>
#include <deque>

#include "g4rl/errors.hpp"

namespace g4rl {

namespace {

Cell cell_of(const std::array<double, 2>& p) {
    return {static_cast<int>(std::lround(p[0])), static_cast<int>(std::lround(p[1]))};
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

bool MazeSpec::move_allowed(const Cell& from, const Cell& to) const {
    if (blocked(to)) return false;
    for (const auto& [a, b] : one_way) {
        if (from == b && to == a) return false;
    }
    return true;
}

std::set<Cell> MazeSpec::reachable_cells() const {
    std::set<Cell> seen;
    const Cell s = cell_of(start);
    if (blocked(s)) return seen;
    std::deque<Cell> queue{s};
    seen.insert(s);
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        for (const auto& m : kGridMoves) {
            const Cell n{c.first + m[0], c.second + m[1]};
            if (move_allowed(c, n) && seen.insert(n).second) queue.push_back(n);
        }
    }
    return seen;
}

void MazeSpec::validate() const {
    if (width <= 0 || height <= 0) throw ConfigError("maze width and height must be positive");
    if (max_steps <= 0) throw ConfigError("maze max_steps must be positive");
    if (!(goal_radius > 0.0)) throw ConfigError("maze goal_radius must be positive");
    if (kind == MazeKind::Point && !(step_length > 0.0)) throw ConfigError("maze step_length must be positive");
    for (const auto& p : {start, goal}) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || p[0] < 0.0 || p[1] < 0.0 || p[0] > width - 1 ||
            p[1] > height - 1) {
            throw ConfigError("maze start/goal must lie inside the maze");
        }
    }
    if (kind == MazeKind::Grid) {
        for (const auto& p : {start, goal}) {
            if (p[0] != std::round(p[0]) || p[1] != std::round(p[1])) {
                throw ConfigError("grid maze start/goal must be integer cells");
            }
        }
    }
    const Cell s = cell_of(start);
    const Cell g = cell_of(goal);
    if (blocked(s)) throw ConfigError("maze start cell is a wall");
    if (blocked(g)) throw ConfigError("maze goal cell is a wall");
    if (!reachable_cells().count(g)) throw ConfigError("maze goal is unreachable from the start");
}

void to_json(nlohmann::json& j, const MazeSpec& spec) {
    auto walls = nlohmann::json::array();
    for (const auto& [x, y] : spec.walls) walls.push_back({x, y});
    auto one_way = nlohmann::json::array();
    for (const auto& [a, b] : spec.one_way) one_way.push_back({a.first, a.second, b.first, b.second});
    j = nlohmann::json{{"kind", spec.kind == MazeKind::Grid ? "grid" : "point"},
                       {"width", spec.width},
                       {"height", spec.height},
                       {"walls", std::move(walls)},
                       {"one_way", std::move(one_way)},
                       {"start", spec.start},
                       {"goal", spec.goal},
                       {"goal_radius", spec.goal_radius},
                       {"reward_mode", spec.reward_mode == RewardMode::Dense ? "dense" : "sparse"},
                       {"max_steps", spec.max_steps},
                       {"step_length", spec.step_length}};
}

void from_json(const nlohmann::json& j, MazeSpec& spec) {
    try {
        MazeSpec s;
        const auto kind = j.value("kind", std::string("grid"));
        if (kind == "grid") {
            s.kind = MazeKind::Grid;
        } else if (kind == "point") {
            s.kind = MazeKind::Point;
        } else {
            throw ConfigError("maze kind must be grid or point");
        }
        s.width = j.at("width").get<int>();
        s.height = j.at("height").get<int>();
        for (const auto& w : j.value("walls", nlohmann::json::array())) {
            if (w.size() != 2) throw ConfigError("maze walls must be [x, y] pairs");
            s.walls.insert({w[0].get<int>(), w[1].get<int>()});
        }
        for (const auto& d : j.value("one_way", nlohmann::json::array())) {
            if (d.size() != 4) throw ConfigError("one_way entries must be [x1, y1, x2, y2]");
            s.one_way.push_back({{d[0].get<int>(), d[1].get<int>()}, {d[2].get<int>(), d[3].get<int>()}});
        }
        s.start = j.at("start").get<std::array<double, 2>>();
        s.goal = j.at("goal").get<std::array<double, 2>>();
        s.goal_radius = j.at("goal_radius").get<double>();
        const auto mode = j.at("reward_mode").get<std::string>();
        if (mode == "dense") {
            s.reward_mode = RewardMode::Dense;
        } else if (mode == "sparse") {
            s.reward_mode = RewardMode::Sparse;
        } else {
            throw ConfigError("reward_mode must be dense or sparse");
        }
        s.max_steps = j.at("max_steps").get<int>();
        s.step_length = j.value("step_length", s.step_length);
        s.validate();
        spec = std::move(s);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("maze JSON: ") + e.what());
    }
}

MazeSpec default_maze() {
    MazeSpec spec;
    // A wall across x = 4 leaves a gap at the top, so the straight line from
    // start to goal is not a path.
    for (int y = 0; y < 8; ++y) spec.walls.insert({4, y});
    spec.start = {0.0, 0.0};
    spec.goal = {8.0, 0.0};
    spec.goal_radius = 1.0;
    spec.reward_mode = RewardMode::Sparse;
    spec.max_steps = 200;
    return spec;
}

MazeEnv::MazeEnv(MazeSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    state_.position = spec_.start;
}

std::size_t MazeEnv::action_count() const { return spec_.kind == MazeKind::Grid ? 4 : 8; }

std::array<double, 2> MazeEnv::upper_bound() const {
    return {static_cast<double>(spec_.width - 1), static_cast<double>(spec_.height - 1)};
}

double MazeEnv::goal_distance(const std::array<double, 2>& p) const {
    return std::hypot(p[0] - spec_.goal[0], p[1] - spec_.goal[1]);
}

StateRepr MazeEnv::reset(Rng& /*rng*/) {
    state_ = EnvState{};
    state_.position = spec_.start;
    return phi();
}

StepResult MazeEnv::step(std::size_t action) {
    if (state_.done) throw ProtocolError("step called on a finished episode; call reset first");
    if (action >= action_count()) throw ProtocolError("action index out of range");

    const Cell from = cell_of(state_.position);
    if (spec_.kind == MazeKind::Grid) {
        const Cell to{from.first + kGridMoves[action][0], from.second + kGridMoves[action][1]};
        if (spec_.move_allowed(from, to)) {
            state_.position = {static_cast<double>(to.first), static_cast<double>(to.second)};
        }
    } else {
        const double angle = static_cast<double>(action) * kPi / 4.0;
        const std::array<double, 2> next{state_.position[0] + spec_.step_length * std::cos(angle),
                                         state_.position[1] + spec_.step_length * std::sin(angle)};
        const auto hi = upper_bound();
        if (next[0] >= 0.0 && next[1] >= 0.0 && next[0] <= hi[0] && next[1] <= hi[1]) {
            const Cell to = cell_of(next);
            if (to == from || spec_.move_allowed(from, to)) state_.position = next;
        }
    }

    ++state_.step_index;
    const double dist = goal_distance(state_.position);
    const bool reached = dist <= spec_.goal_radius;
    StepResult r;
    r.reward = spec_.reward_mode == RewardMode::Dense ? -dist : (reached ? 1.0 : 0.0);
    state_.success = reached;
    state_.done = reached || state_.step_index >= spec_.max_steps;
    r.phi = phi();
    r.done = state_.done;
    r.success = reached;
    return r;
}

}  // namespace g4rl
