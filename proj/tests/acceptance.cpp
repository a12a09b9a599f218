// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--out DIR] [--config FILE] [--only 1,2,...] [--jobs N]
//
// Criteria 7 and 8 train the full four-arm sweep described by the config
// (configs/sparse_maze.json by default) twice, so they dominate the runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "oracles.hpp"

#include "g4rl/graph_codec.hpp"
#include "g4rl/harness.hpp"
#include "g4rl/hierarchy.hpp"
#include "g4rl/maze.hpp"
#include "g4rl/state_graph.hpp"

namespace fs = std::filesystem;
using namespace g4rl;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------- 1

bool graph_structure_ok(const StateGraph& g, std::string& why) {
    const auto n = g.capacity();
    std::size_t filled = 0;
    for (std::size_t u = 0; u < n; ++u) {
        if (g.slot(u)) ++filled;
        if (g.weight(u, u) != 0) {
            why = "non-zero diagonal";
            return false;
        }
        for (std::size_t v = u + 1; v < n; ++v) {
            if (g.weight(u, v) != g.weight(v, u)) {
                why = "asymmetric adjacency";
                return false;
            }
            if ((!g.slot(u) || !g.slot(v)) && g.weight(u, v) != 0) {
                why = "edge on an empty slot";
                return false;
            }
        }
    }
    if (filled != g.occupancy() || filled > n) {
        why = "occupancy mismatch";
        return false;
    }
    const auto slots = g.filled_slots();
    for (std::size_t i = 0; i < slots.size(); ++i) {
        for (std::size_t j = i + 1; j < slots.size(); ++j) {
            const auto& a = g.slot(slots[i])->feature;
            const auto& b = g.slot(slots[j])->feature;
            const double d = std::hypot(a[0] - b[0], a[1] - b[1]);
            if (!(d > g.match_threshold())) {
                why = "two nodes within the match threshold";
                return false;
            }
        }
    }
    return true;
}

Outcome graph_invariants() {
    MazeSpec big;
    big.width = 20;
    big.height = 20;
    big.start = {0.0, 0.0};
    big.goal = {19.0, 19.0};
    big.max_steps = 200;
    std::size_t checks = 0;
    std::size_t max_occupancy = 0;
    for (const auto& spec : {default_maze(), big}) {
        MazeEnv env(spec);
        StateGraphConfig gc;
        gc.capacity = 200;
        gc.match_threshold = 0.1;
        StateGraph g(gc);
        Rng rng(2024);
        std::optional<StateRepr> prev;
        StateRepr phi = env.reset(rng);
        g.observe_transition(prev, phi, 0);
        prev = phi;
        for (std::uint64_t step = 1; step <= 10000; ++step) {
            auto r = env.step(rng.below(env.action_count()));
            g.observe_transition(prev, r.phi, step);
            prev = r.phi;
            if (r.done) {
                prev.reset();
                env.reset(rng);
            }
            std::string why;
            if (!graph_structure_ok(g, why)) return {false, why + " at step " + std::to_string(step)};
            ++checks;
        }
        max_occupancy = std::max(max_occupancy, g.occupancy());
    }
    return {true, std::to_string(checks) + " post-step checks on 10x10 and 20x20 grids, max occupancy " +
                      std::to_string(max_occupancy) + "/200"};
}

// ---------------------------------------------------------------- 2

Outcome maze_graph_fidelity() {
    MazeSpec spec;
    spec.width = 6;
    spec.height = 6;
    spec.walls = {{2, 0}, {2, 1}, {2, 2}, {2, 3}, {4, 2}, {4, 3}, {4, 4}, {4, 5}, {0, 5}};
    spec.start = {0.0, 0.0};
    spec.goal = {5.0, 5.0};
    spec.goal_radius = 0.5;
    spec.max_steps = 500;
    MazeEnv env(spec);

    // Independent BFS oracle over the wall set.
    std::set<Cell> reach{{0, 0}};
    std::deque<Cell> queue{{0, 0}};
    const auto open = [&](const Cell& c) {
        return c.first >= 0 && c.second >= 0 && c.first < 6 && c.second < 6 && !spec.walls.count(c);
    };
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        for (const Cell n : {Cell{x + 1, y}, Cell{x - 1, y}, Cell{x, y + 1}, Cell{x, y - 1}}) {
            if (open(n) && reach.insert(n).second) queue.push_back(n);
        }
    }
    std::set<std::pair<Cell, Cell>> adjacent;
    for (const auto& c : reach) {
        for (const Cell n : {Cell{c.first + 1, c.second}, Cell{c.first, c.second + 1}}) {
            if (reach.count(n)) adjacent.insert({c, n});
        }
    }

    StateGraphConfig gc;
    gc.capacity = 36;
    gc.match_threshold = 0.1;
    StateGraph g(gc);
    Rng rng(6);
    std::optional<StateRepr> prev;
    std::uint64_t step = 0;
    for (int episode = 0; episode < 400; ++episode) {
        prev.reset();
        StateRepr phi = env.reset(rng);
        g.observe_transition(prev, phi, step++);
        prev = phi;
        // Undirected edges into the goal cell are still seen, since the
        // episode ends only after the move onto it.
        for (bool done = false; !done;) {
            const auto r = env.step(rng.below(4));
            g.observe_transition(prev, r.phi, step++);
            prev = r.phi;
            done = r.done;
        }
    }

    std::set<Cell> nodes;
    for (auto s : g.filled_slots()) {
        const auto& f = g.slot(s)->feature;
        nodes.insert({static_cast<int>(f[0]), static_cast<int>(f[1])});
    }
    std::set<std::pair<Cell, Cell>> edges;
    for (auto u : g.filled_slots()) {
        for (auto v : g.filled_slots()) {
            if (g.weight(u, v) <= 0) continue;
            Cell a{static_cast<int>(g.slot(u)->feature[0]), static_cast<int>(g.slot(u)->feature[1])};
            Cell b{static_cast<int>(g.slot(v)->feature[0]), static_cast<int>(g.slot(v)->feature[1])};
            if (b < a) std::swap(a, b);
            edges.insert({a, b});
        }
    }
    const bool pass = nodes == reach && edges == adjacent;
    return {pass, std::to_string(nodes.size()) + "/" + std::to_string(reach.size()) + " nodes, " +
                      std::to_string(edges.size()) + "/" + std::to_string(adjacent.size()) + " edges after " +
                      std::to_string(step) + " observations"};
}

// ---------------------------------------------------------------- 3

Outcome codec_vs_oracle() {
    const std::size_t n = 5;
    StateGraphConfig gc;
    gc.capacity = n;
    StateGraph g(gc);
    std::optional<StateRepr> prev;
    for (std::size_t i = 0; i < n; ++i) {
        StateRepr s{static_cast<double>(i), 0.0};
        g.observe_transition(prev, s, i);
        prev = s;
    }
    const auto a = g.normalized_adjacency();
    Eigen::MatrixXd ahat(n, n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) ahat(u, v) = a[u * n + v];

    // Best rank-k positive-semidefinite approximation: keep the k largest
    // positive eigenvalues. Its off-diagonal error on unordered pairs is the
    // floor a Gram-matrix decoder is measured against.
    const std::size_t k = 8;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ahat);
    Eigen::MatrixXd psd = Eigen::MatrixXd::Zero(n, n);
    std::size_t kept = 0;
    for (Eigen::Index i = static_cast<Eigen::Index>(n) - 1; i >= 0 && kept < k; --i) {
        if (es.eigenvalues()(i) <= 0.0) break;
        psd += es.eigenvalues()(i) * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
        ++kept;
    }
    double floor = 0.0;
    double zero_loss = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            floor += (psd(u, v) - ahat(u, v)) * (psd(u, v) - ahat(u, v));
            zero_loss += ahat(u, v) * ahat(u, v);
        }
    }
    const double threshold = floor + 0.05 * (zero_loss - floor);

    Rng rng(3);
    CodecConfig cc;
    cc.latent_dim = k;
    cc.learning_rate = 1e-3;
    cc.input_scale = {0.25, 0.25};
    GraphCodec codec(cc, rng);
    const double initial = reconstruction_loss(codec, g);
    Rng train_rng(0);
    for (int i = 0; i < 500; ++i) codec.train_phase(g, train_rng);
    const double final_loss = reconstruction_loss(codec, g);
    return {final_loss <= threshold, "loss " + fmt(initial) + " -> " + fmt(final_loss) + ", floor " + fmt(floor) +
                                         ", zero-encoder " + fmt(zero_loss) + ", threshold " + fmt(threshold)};
}

// ---------------------------------------------------------------- 4

Outcome codec_gradients() {
    Rng rng(404);
    double worst = 0.0;
    std::size_t checked = 0;
    for (int instance = 0; instance < 100; ++instance) {
        StateGraphConfig gc;
        gc.capacity = 4 + rng.below(5);
        gc.match_threshold = 0.05;
        StateGraph g(gc);
        std::optional<StateRepr> prev;
        for (int step = 0; step < 60; ++step) {
            StateRepr s{rng.below(5) * 0.25, rng.below(4) * 0.25};
            g.observe_transition(prev, s, step);
            prev = s;
        }
        CodecConfig cc;  // default architecture 2-128-128-128-16
        GraphCodec codec(cc, rng);
        // Small output weights put decoder scores in the O(1) range of a
        // trained codec instead of the large values of a fresh He init.
        for (auto& w : codec.encoder().layers().back().weights) w *= 0.1;
        for (auto& layer : codec.encoder().layers())
            for (auto& b : layer.bias) b = rng.uniform(-0.05, 0.05);
        const auto pairs = filled_pairs(g);
        const auto lg = reconstruction_gradient(codec.encoder(), g, pairs);
        const auto analytic = oracle::flatten(lg.gradient);

        // A random sample of weights and biases from every layer.
        std::vector<std::size_t> indices;
        std::size_t offset = 0;
        for (const auto& layer : codec.encoder().layers()) {
            for (int i = 0; i < 20; ++i) indices.push_back(offset + rng.below(layer.weights.size()));
            offset += layer.weights.size();
            for (int i = 0; i < 5; ++i) indices.push_back(offset + rng.below(layer.bias.size()));
            offset += layer.bias.size();
        }

        const auto numeric = oracle::numeric_partials(codec.encoder(), [&](const nn::DenseNet& net) {
            return reconstruction_loss(GraphCodec(net, 0.0, 1.0), g);
        }, indices);
        std::vector<double> picked;
        for (auto i : indices) picked.push_back(analytic[i]);
        worst = std::max(worst, oracle::max_relative_error(picked, numeric));
        checked += indices.size();
    }
    return {worst < 1e-4, "max relative error " + fmt(worst, 3) + " over " + std::to_string(checked) +
                              " partials in 100 codec instances"};
}

// ---------------------------------------------------------------- 5

Outcome schedule_arithmetic() {
    StateGraphConfig gc;
    gc.capacity = 200;
    gc.beta = 0.2;
    StateGraph g(gc);
    bool ok = g.training_threshold() == 7960;
    // Never fires before the graph is full, however large the counter.
    for (int i = 0; i < 200 && ok; ++i) {
        g.observe_transition(std::nullopt, {static_cast<double>(i), 0.0}, i);
        if (!g.full()) {
            const auto c = g.change_counter();
            g.set_change_counter(1'000'000);
            ok = ok && !g.consume_training_trigger() && g.change_counter() == 1'000'000;
            g.set_change_counter(c);
        }
    }
    ok = ok && g.full() && g.change_counter() == 200 * 199;
    g.set_change_counter(7959);
    ok = ok && !g.consume_training_trigger() && g.change_counter() == 7959;
    g.set_change_counter(7960);
    ok = ok && g.consume_training_trigger() && g.change_counter() == 0;
    // Edge events add one each: 7960 of them re-arm the trigger exactly.
    g.observe_transition(StateRepr{0.0, 0.0}, {1.0, 0.0}, 201);
    const auto after_one = g.change_counter();
    ok = ok && after_one == 1;
    g.set_change_counter(7959);
    g.observe_transition(StateRepr{0.0, 0.0}, {1.0, 0.0}, 202);
    ok = ok && g.change_counter() == 7960 && g.consume_training_trigger();
    return {ok, "threshold " + std::to_string(g.training_threshold()) + "; fires at 7960, not 7959; resets to 0"};
}

// ---------------------------------------------------------------- 6

std::string serialize(const EpisodeTrace& t) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& p : t.positions) os << p[0] << ' ' << p[1] << ';';
    for (auto a : t.actions) os << a << ',';
    for (const auto& g : t.subgoals) os << g[0] << ' ' << g[1] << ';';
    for (auto s : t.subgoal_steps) os << s << ',';
    for (double r : t.external_rewards) os << r << ',';
    for (double r : t.high_rewards) os << r << ',';
    for (double r : t.low_rewards) os << r << ',';
    return os.str();
}

Outcome ablation_identity(const RunConfig& config) {
    const auto vanilla = apply_arm(config.hier, Arm::Vanilla);
    auto disabled = vanilla;
    disabled.graph_enabled = false;
    std::size_t episodes = 0;
    std::size_t codec_phases = 0;
    for (std::uint64_t seed : {0, 1, 2}) {
        MazeEnv env_a(config.maze);
        MazeEnv env_b(config.maze);
        HierarchicalAgent a(vanilla, env_a, seed);
        HierarchicalAgent b(disabled, env_b, seed);
        for (std::size_t e = 0; e < config.episodes; ++e) {
            EpisodeTrace ta, tb;
            a.run_episode(env_a, EpisodeOptions{true, true, &ta});
            b.run_episode(env_b, EpisodeOptions{true, true, &tb});
            if (serialize(ta) != serialize(tb)) {
                return {false, "seed " + std::to_string(seed) + " diverges at episode " + std::to_string(e)};
            }
            ++episodes;
        }
        if (!(a.high().online() == b.high().online() && a.low().online() == b.low().online())) {
            return {false, "policy parameters differ for seed " + std::to_string(seed)};
        }
        codec_phases += a.codec().trained_phases();
    }
    return {true, std::to_string(episodes) + " episodes identical over 3 seeds while the vanilla arm ran " +
                      std::to_string(codec_phases) + " codec phases"};
}

// ---------------------------------------------------------------- 7 and 8

struct SweepOutcome {
    Outcome replication;
    std::optional<RunSummary> summary;
};

Outcome directional_replication(const RunSummary& s, double seconds) {
    const double full = s.arms.at(Arm::Full).mean;
    const double high = s.arms.at(Arm::HighOnly).mean;
    const double low = s.arms.at(Arm::LowOnly).mean;
    const double van = s.arms.at(Arm::Vanilla).mean;
    const bool ordering = full >= high && high >= van && full >= low && low >= van;
    const auto& t = *s.full_vs_vanilla;
    const bool significant = t.p_value < 0.05 && t.mean_difference > 0.0;
    const bool weak = full >= van;
    std::string detail = "full " + fmt(full) + ", high_only " + fmt(high) + ", low_only " + fmt(low) + ", vanilla " +
                         fmt(van) + "; paired t " + fmt(t.t_statistic) + ", one-sided p " + fmt(t.p_value) + "; " +
                         fmt(seconds, 3) + " s";
    if (!ordering) return {false, "ordering violated: " + detail};
    if (significant) return {true, detail};
    if (weak) return {true, "paired test NOT significant, weak gate full >= vanilla holds: " + detail};
    return {false, detail};
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    return std::string(std::istreambuf_iterator<char>(fa), {}) == std::string(std::istreambuf_iterator<char>(fb), {});
}

Outcome determinism(const RunConfig& config, const fs::path& first, const fs::path& second) {
    auto rerun = config;
    rerun.out_dir = second;
    rerun.jobs = std::max<std::size_t>(2, config.jobs);  // also exercises the parallel runner
    fs::remove_all(second);
    run(rerun);
    std::size_t compared = 0;
    for (Arm arm : config.arms) {
        for (auto seed : config.seeds) {
            const auto rel = seed_dir("", arm, seed) / "metrics.csv";
            if (!same_bytes(first / rel, second / rel)) return {false, "differs: " + rel.string()};
            ++compared;
        }
    }
    const bool summary_same = same_bytes(first / "summary.json", second / "summary.json");
    return {summary_same, std::to_string(compared) + " metrics CSVs byte-identical" +
                              (summary_same ? ", summary.json identical" : ", summary.json differs")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    fs::path out = "acceptance_runs";
    fs::path config_path = fs::path(G4RL_SOURCE_DIR) / "configs" / "sparse_maze.json";
    std::string only;
    std::size_t jobs = 1;
    app.add_option("--out", out, "Directory for the training sweeps");
    app.add_option("--config", config_path, "Run config for criteria 6-8");
    app.add_option("--only", only, "Comma-separated criterion numbers");
    app.add_option("--jobs", jobs, "Parallel workers for the sweep");
    CLI11_PARSE(app, argc, argv);

    std::set<int> selected;
    if (only.empty()) {
        for (int i = 1; i <= 8; ++i) selected.insert(i);
    } else {
        std::stringstream ss(only);
        for (std::string item; std::getline(ss, item, ',');) selected.insert(std::stoi(item));
    }

    const RunConfig config = [&] {
        auto c = load_run_config(config_path);
        c.out_dir = out / "sweep";
        c.jobs = jobs;
        return c;
    }();

    int failures = 0;
    auto report = [&](int id, const std::string& name, double limit_s, const std::function<Outcome()>& fn) {
        if (!selected.count(id)) return;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = seconds_since(t0);
        if (limit_s > 0 && s >= limit_s) {
            o.pass = false;
            o.detail += " [over the " + fmt(limit_s) + " s limit]";
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << " (" << fmt(s, 3) << " s): " << o.detail
                  << std::endl;
    };

    report(1, "graph invariants under random rollouts", 10.0, graph_invariants);
    report(2, "maze-graph fidelity vs BFS", 30.0, maze_graph_fidelity);
    report(3, "codec reconstruction vs PSD oracle", 10.0, codec_vs_oracle);
    report(4, "codec gradient vs finite differences", 30.0, codec_gradients);
    report(5, "training schedule arithmetic", 1.0, schedule_arithmetic);
    report(6, "vanilla arm equals disabled graph", 0.0, [&] { return ablation_identity(config); });

    bool swept = false;
    report(7, "directional ablation ordering", 1800.0, [&] {
        const auto t0 = Clock::now();
        fs::remove_all(config.out_dir);
        const auto summary = run(config);
        swept = true;
        return directional_replication(summary, seconds_since(t0));
    });
    report(8, "sweep determinism", 0.0, [&] {
        if (!swept) {
            fs::remove_all(config.out_dir);
            run(config);
        }
        return determinism(config, config.out_dir, out / "sweep_rerun");
    });

    std::cout << (failures == 0 ? "all selected criteria passed" : std::to_string(failures) + " criterion/criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
