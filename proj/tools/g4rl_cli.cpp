// Command-line front end: train, eval, dump-graph, dump-embeddings.
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "g4rl/errors.hpp"
#include "g4rl/harness.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    // "0:20" is a half-open range; otherwise a comma-separated list.
    std::vector<std::uint64_t> seeds;
    if (auto colon = text.find(':'); colon != std::string::npos) {
        const auto lo = std::stoull(text.substr(0, colon));
        const auto hi = std::stoull(text.substr(colon + 1));
        if (hi <= lo) throw g4rl::ConfigError("empty seed range " + text);
        for (auto s = lo; s < hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (item.empty()) throw g4rl::ConfigError("bad seed list " + text);
        seeds.push_back(std::stoull(item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return seeds;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-guided subgoal representation laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string seeds_text;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> arm_names;
    std::string out_dir;
    std::optional<std::size_t> episodes;
    std::optional<std::size_t> jobs;
    auto* train = app.add_subcommand("train", "Train every (arm, seed) and write metrics, artifacts and a summary");
    train->add_option("--config", config_path, "Run config JSON")->required();
    train->add_option("--seed", seed, "Single seed");
    train->add_option("--seeds", seeds_text, "Seed list '0,1,2' or half-open range '0:20'");
    train->add_option("--arm", arm_names, "Arm(s): full, high_only, low_only, vanilla");
    train->add_option("--out", out_dir, "Output directory");
    train->add_option("--episodes", episodes, "Episodes per run");
    train->add_option("--jobs", jobs, "Parallel workers");

    std::string run_dir;
    std::size_t eval_episodes = 10;
    auto* eval = app.add_subcommand("eval", "Greedy rollouts of a trained run directory");
    eval->add_option("--run", run_dir, "Run directory (<out>/<arm>/seed_<n>)")->required();
    eval->add_option("--episodes", eval_episodes, "Evaluation episodes");

    std::string dump_out;
    auto* dump_graph = app.add_subcommand("dump-graph", "Print the state graph of a run as JSON");
    dump_graph->add_option("--run", run_dir, "Run directory")->required();
    dump_graph->add_option("--out", dump_out, "Output file (default stdout)");

    bool project = false;
    auto* dump_emb = app.add_subcommand("dump-embeddings", "Print node features and codec embeddings as CSV");
    dump_emb->add_option("--run", run_dir, "Run directory")->required();
    dump_emb->add_flag("--project", project, "Append a 2-D PCA projection");
    dump_emb->add_option("--out", dump_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*train) {
            auto config = g4rl::load_run_config(config_path);
            if (seed && !seeds_text.empty()) throw g4rl::ConfigError("use either --seed or --seeds");
            if (seed) config.seeds = {*seed};
            if (!seeds_text.empty()) config.seeds = parse_seeds(seeds_text);
            if (!arm_names.empty()) {
                config.arms.clear();
                for (const auto& a : arm_names) config.arms.push_back(g4rl::arm_from_string(a));
            }
            if (!out_dir.empty()) config.out_dir = out_dir;
            if (episodes) config.episodes = *episodes;
            if (jobs) config.jobs = *jobs;
            config.validate();
            const auto summary = g4rl::run(config);
            for (const auto& [arm, s] : summary.arms) {
                std::cout << g4rl::to_string(arm) << ": trailing success " << s.mean << " +/- " << s.std << " over "
                          << s.values.size() << " seed(s)\n";
            }
            std::cout << "wrote " << (config.out_dir / "summary.json").string() << "\n";
        } else if (*eval) {
            const auto r = g4rl::evaluate_run(run_dir, eval_episodes);
            const nlohmann::json j{{"episodes", r.episodes},
                                   {"success_rate", r.success_rate},
                                   {"mean_return", r.mean_return},
                                   {"mean_steps", r.mean_steps}};
            std::cout << j.dump(2) << "\n";
        } else if (*dump_graph) {
            emit(g4rl::dump_graph(run_dir).dump(2) + "\n", dump_out);
        } else if (*dump_emb) {
            std::string warning;
            emit(g4rl::dump_embeddings(run_dir, project, &warning), dump_out);
            if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
        }
    } catch (const g4rl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
