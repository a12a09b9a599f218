#include "g4rl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "g4rl/errors.hpp"
#include "g4rl/pca.hpp"

namespace g4rl {

namespace fs = std::filesystem;

std::string to_string(Arm arm) {
    switch (arm) {
        case Arm::Full:
            return "full";
        case Arm::HighOnly:
            return "high_only";
        case Arm::LowOnly:
            return "low_only";
        case Arm::Vanilla:
            return "vanilla";
    }
    return "unknown";
}

Arm arm_from_string(const std::string& name) {
    for (Arm a : all_arms()) {
        if (to_string(a) == name) return a;
    }
    throw ConfigError("unknown arm '" + name + "' (expected full|high_only|low_only|vanilla)");
}

const std::vector<Arm>& all_arms() {
    static const std::vector<Arm> arms{Arm::Full, Arm::HighOnly, Arm::LowOnly, Arm::Vanilla};
    return arms;
}

HierConfig apply_arm(HierConfig config, Arm arm) {
    if (arm == Arm::LowOnly || arm == Arm::Vanilla) config.alpha_high = 0.0;
    if (arm == Arm::HighOnly || arm == Arm::Vanilla) config.alpha_low = 0.0;
    return config;
}

void RunConfig::validate() const {
    hier.validate();
    maze.validate();
    if (arms.empty()) throw ConfigError("run config lists no arms");
    if (seeds.empty()) throw ConfigError("run config lists no seeds");
    if (episodes == 0) throw ConfigError("episodes must be positive");
    if (trailing_window == 0) throw ConfigError("trailing_window must be positive");
    if (jobs == 0) throw ConfigError("jobs must be positive");
}

RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    try {
        static const std::vector<std::string> keys{"maze", "maze_file", "hierarchy", "arms", "seeds", "episodes",
                                                   "trailing_window", "out", "jobs", "record_wall_clock"};
        for (const auto& [key, value] : j.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                throw ConfigError("unknown run config key '" + key + "'");
            }
        }
        RunConfig c;
        if (j.contains("maze") == j.contains("maze_file")) throw ConfigError("give exactly one of maze or maze_file");
        if (j.contains("maze")) {
            c.maze = j.at("maze").get<MazeSpec>();
        } else {
            fs::path p = j.at("maze_file").get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            std::ifstream in(p);
            if (!in) throw ConfigError("cannot open maze file " + p.string());
            c.maze = nlohmann::json::parse(in).get<MazeSpec>();
        }
        if (j.contains("hierarchy")) c.hier = j.at("hierarchy").get<HierConfig>();
        if (j.contains("arms")) {
            c.arms.clear();
            for (const auto& a : j.at("arms")) c.arms.push_back(arm_from_string(a.get<std::string>()));
        }
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.episodes = j.value("episodes", c.episodes);
        c.trailing_window = j.value("trailing_window", c.trailing_window);
        if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
        c.jobs = j.value("jobs", c.jobs);
        c.record_wall_clock = j.value("record_wall_clock", c.record_wall_clock);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
}

nlohmann::json run_config_to_json(const RunConfig& c) {
    auto arms = nlohmann::json::array();
    for (Arm a : c.arms) arms.push_back(to_string(a));
    return nlohmann::json{{"maze", c.maze},
                          {"hierarchy", c.hier},
                          {"arms", std::move(arms)},
                          {"seeds", c.seeds},
                          {"episodes", c.episodes},
                          {"trailing_window", c.trailing_window},
                          {"out", c.out_dir.string()},
                          {"jobs", c.jobs},
                          {"record_wall_clock", c.record_wall_clock}};
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j, path.parent_path());
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("float formatting failed");
    return std::string(buf, end);
}

std::string metrics_row(const EpisodeStats& s) {
    std::ostringstream os;
    os << s.episode << ',' << s.steps << ',' << format_double(s.external_return) << ',' << (s.success ? 1 : 0) << ','
       << s.graph_occupancy << ',' << s.codec_phases << ',' << format_double(s.last_codec_loss) << ','
       << format_double(s.wall_ms);
    return os.str();
}

double trailing_success(const std::vector<EpisodeStats>& stats, std::size_t window) {
    if (stats.empty()) return 0.0;
    const std::size_t n = std::min(window, stats.size());
    double sum = 0.0;
    for (std::size_t i = stats.size() - n; i < stats.size(); ++i) sum += stats[i].success ? 1.0 : 0.0;
    return sum / static_cast<double>(n);
}

ArmSummary summarize(const std::vector<double>& values, const std::vector<std::uint64_t>& seeds) {
    ArmSummary s;
    s.values = values;
    s.seeds = seeds;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

PairedTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw PreconditionError("paired test needs equally many observations");
    PairedTest t;
    t.n = a.size();
    if (t.n < 2) return t;
    std::vector<double> d(t.n);
    for (std::size_t i = 0; i < t.n; ++i) d[i] = a[i] - b[i];
    const auto s = summarize(d, {});
    t.mean_difference = s.mean;
    if (s.std == 0.0) {
        t.t_statistic = s.mean > 0.0 ? INFINITY : (s.mean < 0.0 ? -INFINITY : 0.0);
        t.p_value = s.mean > 0.0 ? 0.0 : (s.mean < 0.0 ? 1.0 : 0.5);
        return t;
    }
    t.t_statistic = s.mean / (s.std / std::sqrt(static_cast<double>(t.n)));
    boost::math::students_t dist(static_cast<double>(t.n - 1));
    t.p_value = boost::math::cdf(boost::math::complement(dist, t.t_statistic));
    return t;
}

nlohmann::json RunSummary::to_json(std::size_t trailing_window) const {
    nlohmann::json arms_json = nlohmann::json::object();
    for (const auto& [arm, s] : arms) {
        auto per_seed = nlohmann::json::array();
        for (std::size_t i = 0; i < s.values.size(); ++i) per_seed.push_back({{"seed", s.seeds[i]}, {"trailing_success", s.values[i]}});
        arms_json[to_string(arm)] = {{"mean", s.mean}, {"std", s.std}, {"n", s.values.size()}, {"per_seed", std::move(per_seed)}};
    }
    nlohmann::json j{{"trailing_window", trailing_window}, {"arms", std::move(arms_json)}};
    if (full_vs_vanilla) {
        j["full_vs_vanilla"] = {{"mean_difference", full_vs_vanilla->mean_difference},
                                {"t_statistic", full_vs_vanilla->t_statistic},
                                {"p_value_one_sided", full_vs_vanilla->p_value},
                                {"n", full_vs_vanilla->n}};
    }
    return j;
}

fs::path seed_dir(const fs::path& out, Arm arm, std::uint64_t seed) {
    return out / to_string(arm) / ("seed_" + std::to_string(seed));
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing run artifact " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace

SeedResult train_seed(const RunConfig& config, Arm arm, std::uint64_t seed,
                      const std::optional<fs::path>& artifacts) {
    const HierConfig hier = apply_arm(config.hier, arm);
    MazeEnv env(config.maze);
    HierarchicalAgent agent(hier, env, seed);
    SeedResult result;
    result.arm = arm;
    result.seed = seed;
    result.episodes.reserve(config.episodes);
    for (std::size_t e = 0; e < config.episodes; ++e) {
        auto stats = agent.run_episode(env);
        if (!config.record_wall_clock) stats.wall_ms = 0.0;
        result.episodes.push_back(stats);
    }
    result.trailing_success = trailing_success(result.episodes, config.trailing_window);

    if (artifacts) {
        fs::create_directories(*artifacts);
        std::string csv = std::string(kMetricsHeader) + "\n";
        for (const auto& s : result.episodes) csv += metrics_row(s) + "\n";
        write_text(*artifacts / "metrics.csv", csv);
        RunConfig echo = config;
        echo.hier = hier;
        echo.arms = {arm};
        echo.seeds = {seed};
        write_json(*artifacts / "config.json", run_config_to_json(echo));
        if (const auto* g = agent.graph()) write_json(*artifacts / "graph.json", *g);
        write_json(*artifacts / "codec.json", agent.codec());
        write_json(*artifacts / "high_q.json", agent.high().online());
        write_json(*artifacts / "low_q.json", agent.low().online());
    }
    return result;
}

RunSummary run(const RunConfig& config) {
    config.validate();
    fs::create_directories(config.out_dir);

    struct Task {
        Arm arm;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (Arm a : config.arms) {
        for (auto s : config.seeds) tasks.push_back({a, s});
    }
    std::vector<SeedResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                results[i] = train_seed(config, tasks[i].arm, tasks[i].seed,
                                        seed_dir(config.out_dir, tasks[i].arm, tasks[i].seed));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min(config.jobs, tasks.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    RunSummary summary;
    for (Arm a : config.arms) {
        std::vector<double> values;
        std::vector<std::uint64_t> seeds;
        for (const auto& r : results) {
            if (r.arm == a) {
                values.push_back(r.trailing_success);
                seeds.push_back(r.seed);
            }
        }
        summary.arms[a] = summarize(values, seeds);
    }
    if (summary.arms.count(Arm::Full) && summary.arms.count(Arm::Vanilla)) {
        summary.full_vs_vanilla = paired_t_test(summary.arms[Arm::Full].values, summary.arms[Arm::Vanilla].values);
    }
    summary.results = std::move(results);
    write_json(config.out_dir / "summary.json", summary.to_json(config.trailing_window));
    return summary;
}

EvalResult evaluate_run(const fs::path& run_dir, std::size_t episodes) {
    if (!fs::is_directory(run_dir)) throw std::runtime_error("run directory not found: " + run_dir.string());
    const RunConfig config = run_config_from_json(read_json(run_dir / "config.json"));
    MazeEnv env(config.maze);
    HierarchicalAgent agent(config.hier, env, config.seeds.front());
    agent.high().load_online(read_json(run_dir / "high_q.json").get<nn::DenseNet>());
    agent.low().load_online(read_json(run_dir / "low_q.json").get<nn::DenseNet>());
    EvalResult r;
    r.episodes = episodes;
    for (std::size_t e = 0; e < episodes; ++e) {
        const auto s = agent.run_episode(env, EpisodeOptions{false, false, nullptr});
        r.success_rate += s.success ? 1.0 : 0.0;
        r.mean_return += s.external_return;
        r.mean_steps += static_cast<double>(s.steps);
    }
    if (episodes > 0) {
        r.success_rate /= static_cast<double>(episodes);
        r.mean_return /= static_cast<double>(episodes);
        r.mean_steps /= static_cast<double>(episodes);
    }
    return r;
}

nlohmann::json dump_graph(const fs::path& run_dir) {
    if (!fs::is_directory(run_dir)) throw std::runtime_error("run directory not found: " + run_dir.string());
    return nlohmann::json(state_graph_from_json(read_json(run_dir / "graph.json")));
}

std::string embeddings_csv(const GraphCodec& codec, const StateGraph& graph, bool project, std::string* warning) {
    const auto slots = graph.filled_slots();
    std::vector<std::vector<double>> embeddings;
    embeddings.reserve(slots.size());
    for (auto s : slots) embeddings.push_back(codec.encode(graph.slot(s)->feature));

    PcaResult pca;
    if (project) {
        pca = pca_2d(embeddings);
        if (!pca.projected && warning) *warning = pca.warning;
    }
    std::ostringstream os;
    os << "slot";
    for (std::size_t i = 0; i < graph.dim(); ++i) os << ",phi_" << i;
    for (std::size_t i = 0; i < codec.latent_dim(); ++i) os << ",g_" << i;
    if (pca.projected) os << ",pc1,pc2";
    os << '\n';
    for (std::size_t r = 0; r < slots.size(); ++r) {
        os << slots[r];
        for (double x : graph.slot(slots[r])->feature) os << ',' << format_double(x);
        for (double x : embeddings[r]) os << ',' << format_double(x);
        if (pca.projected) os << ',' << format_double(pca.coordinates[r][0]) << ',' << format_double(pca.coordinates[r][1]);
        os << '\n';
    }
    return os.str();
}

std::string dump_embeddings(const fs::path& run_dir, bool project, std::string* warning) {
    if (!fs::is_directory(run_dir)) throw std::runtime_error("run directory not found: " + run_dir.string());
    const auto codec = codec_from_json(read_json(run_dir / "codec.json"));
    const auto graph = state_graph_from_json(read_json(run_dir / "graph.json"));
    return embeddings_csv(codec, graph, project, warning);
}

}  // namespace g4rl
