#pragma once

// Experiment runner: configuration loading, seeded multi-run execution and
// artifact export (metrics CSV, summary JSON, graph and codec dumps).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "g4rl/hierarchy.hpp"
#include "g4rl/maze.hpp"

namespace g4rl {

enum class Arm { Full, HighOnly, LowOnly, Vanilla };

std::string to_string(Arm arm);
Arm arm_from_string(const std::string& name);
const std::vector<Arm>& all_arms();

/// Masks the shaping weights: full keeps both, high_only zeroes alpha_low,
/// low_only zeroes alpha_high, vanilla zeroes both.
HierConfig apply_arm(HierConfig config, Arm arm);

struct RunConfig {
    HierConfig hier;
    MazeSpec maze;
    std::vector<Arm> arms{Arm::Full};
    std::vector<std::uint64_t> seeds{0};
    std::size_t episodes = 500;
    std::size_t trailing_window = 100;
    std::filesystem::path out_dir = "runs/default";
    std::size_t jobs = 1;
    /// Wall-clock timings make metrics non-reproducible, so they are written
    /// as 0 unless requested.
    bool record_wall_clock = false;

    void validate() const;
};

/// Parses a run config; relative `maze_file` paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

inline constexpr const char* kMetricsHeader =
    "episode,steps,external_return,success,graph_occupancy,codec_phases,last_codec_loss,wall_ms";

std::string metrics_row(const EpisodeStats& stats);
std::string format_double(double v);

/// Mean success over the last `window` episodes (all when fewer).
double trailing_success(const std::vector<EpisodeStats>& stats, std::size_t window);

struct SeedResult {
    Arm arm = Arm::Full;
    std::uint64_t seed = 0;
    std::vector<EpisodeStats> episodes;
    double trailing_success = 0.0;
};

struct ArmSummary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1)
    std::vector<std::uint64_t> seeds;
    std::vector<double> values;
};

/// One-sided paired t-test of mean(a - b) > 0.
struct PairedTest {
    double mean_difference = 0.0;
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

PairedTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);
ArmSummary summarize(const std::vector<double>& values, const std::vector<std::uint64_t>& seeds);

struct RunSummary {
    std::map<Arm, ArmSummary> arms;
    std::vector<SeedResult> results;
    std::optional<PairedTest> full_vs_vanilla;
    nlohmann::json to_json(std::size_t trailing_window) const;
};

std::filesystem::path seed_dir(const std::filesystem::path& out, Arm arm, std::uint64_t seed);

/// Trains one (arm, seed) run in memory. With `artifacts` set, writes
/// metrics.csv, config.json, graph.json, codec.json, high_q.json, low_q.json.
SeedResult train_seed(const RunConfig& config, Arm arm, std::uint64_t seed,
                      const std::optional<std::filesystem::path>& artifacts);

/// Runs every (arm, seed), in parallel when `jobs` > 1, and writes
/// summary.json into the output directory.
RunSummary run(const RunConfig& config);

struct EvalResult {
    std::size_t episodes = 0;
    double success_rate = 0.0;
    double mean_return = 0.0;
    double mean_steps = 0.0;
};

/// Greedy rollouts of a trained (arm, seed) run directory; no learning.
EvalResult evaluate_run(const std::filesystem::path& run_dir, std::size_t episodes);

/// Re-serialized graph of a run directory.
nlohmann::json dump_graph(const std::filesystem::path& run_dir);

/// CSV rows "slot, phi_*, g_*" plus pc1, pc2 when `project` is set and the
/// projection is defined. Warnings go to `warning` when non-null.
std::string dump_embeddings(const std::filesystem::path& run_dir, bool project, std::string* warning = nullptr);
std::string embeddings_csv(const GraphCodec& codec, const StateGraph& graph, bool project, std::string* warning);

}  // namespace g4rl
