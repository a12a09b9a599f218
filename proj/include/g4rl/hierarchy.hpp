#pragma once

// Two-level goal-conditioned agent: a high-level learner issues a subgoal
// every K steps, a low-level learner pursues it. The state graph and the
// graph codec are updated online while the agents act, and the codec shapes
// the rewards of both levels.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "g4rl/graph_codec.hpp"
#include "g4rl/maze.hpp"
#include "g4rl/q_learner.hpp"
#include "g4rl/reward.hpp"
#include "g4rl/rng.hpp"
#include "g4rl/state_graph.hpp"

namespace g4rl {

enum class UpdateMode { Streaming, EpisodeEnd };

struct HierConfig {
    // Hierarchy
    std::size_t subgoal_period = 10;  // K
    double gamma_high = 0.99;
    double gamma_low = 0.99;
    std::size_t replay_capacity = 20000;
    std::size_t batch_size = 128;
    double high_learning_rate = 1e-3;
    double low_learning_rate = 1e-3;
    std::size_t q_hidden = 64;
    std::size_t q_hidden_layers = 2;
    std::size_t target_sync_period = 250;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    std::size_t high_epsilon_decay = 2000;   // subgoal selections
    std::size_t low_epsilon_decay = 20000;   // action selections
    std::vector<double> subgoal_magnitudes{1.0, 3.0};
    UpdateMode update_mode = UpdateMode::Streaming;

    // State graph
    bool graph_enabled = true;
    std::size_t graph_capacity = 200;  // N
    double match_threshold = 0.1;      // epsilon_d
    double beta = 0.2;
    EvictionPolicy eviction = EvictionPolicy::Oldest;
    std::size_t sample_interval = 1;  // t_c
    std::vector<double> distance_weights;

    // Codec
    std::size_t latent_dim = 16;
    std::size_t codec_hidden = 128;
    std::size_t codec_hidden_layers = 3;
    double codec_learning_rate = 1e-4;
    double pair_fraction = 1.0;

    // Shaping
    double alpha_high = 0.1;
    double alpha_low = 0.1;
    /// When false, intrinsic terms stay zero until the codec finished its
    /// first training phase.
    bool shape_untrained_codec = false;

    void validate() const;
};

void to_json(nlohmann::json& j, const HierConfig& c);
void from_json(const nlohmann::json& j, HierConfig& c);

/// Subgoal displacement lattice: index 0 stays, then 8 compass directions for
/// each magnitude.
std::vector<std::array<double, 2>> subgoal_lattice(const std::vector<double>& magnitudes);

struct LowTransition {
    StateRepr phi;
    StateRepr subgoal;
    std::size_t action = 0;
    double reward = 0.0;
    StateRepr phi_next;
    StateRepr subgoal_next;
    bool terminal = false;
};

struct HighTransition {
    StateRepr phi;        // at subgoal issue time
    std::size_t action = 0;  // lattice index
    StateRepr subgoal;
    double return_high = 0.0;  // gamma-discounted sum of per-step high rewards
    StateRepr phi_end;
    std::size_t length = 0;
    bool terminal = false;
};

struct EpisodeStats {
    std::size_t episode = 0;
    std::size_t steps = 0;
    double external_return = 0.0;
    bool success = false;
    std::size_t graph_occupancy = 0;
    std::size_t codec_phases = 0;
    double last_codec_loss = 0.0;
    double wall_ms = 0.0;
    std::uint64_t trajectory_digest = 0;  // FNV-1a over positions, actions and subgoals
};

/// Optional per-step log for inspection and tests.
struct EpisodeTrace {
    std::vector<StateRepr> positions;  // phi_0 .. phi_T
    std::vector<std::size_t> actions;
    std::vector<StateRepr> subgoals;  // subgoal in force at each step
    std::vector<std::size_t> subgoal_steps;  // steps at which a subgoal was issued
    std::vector<double> external_rewards;
    std::vector<double> high_rewards;
    std::vector<double> low_rewards;
    std::vector<HighTransition> high_transitions;
};

struct EpisodeOptions {
    bool learn = true;    // push transitions, update the graph, train
    bool explore = true;  // epsilon-greedy action selection
    EpisodeTrace* trace = nullptr;
};

class HierarchicalAgent {
public:
    HierarchicalAgent(const HierConfig& config, const MazeEnv& env, std::uint64_t seed);

    const HierConfig& config() const { return config_; }
    QLearner& high() { return high_; }
    QLearner& low() { return low_; }
    const QLearner& high() const { return high_; }
    const QLearner& low() const { return low_; }
    const ReplayBuffer<LowTransition>& low_buffer() const { return low_buffer_; }
    const ReplayBuffer<HighTransition>& high_buffer() const { return high_buffer_; }
    const StateGraph* graph() const { return graph_ ? &*graph_ : nullptr; }
    const GraphCodec& codec() const { return codec_; }
    std::uint64_t global_step() const { return global_step_; }
    std::size_t episodes() const { return episodes_; }

    /// Picks a lattice displacement and returns (index, absolute subgoal
    /// clipped to the environment bounds).
    std::pair<std::size_t, StateRepr> select_subgoal(const StateRepr& phi, bool explore);
    std::size_t select_action(const StateRepr& phi, const StateRepr& subgoal, bool explore);
    StateRepr subgoal_for(const StateRepr& phi, std::size_t lattice_index) const;

    double effective_alpha_high() const;
    double effective_alpha_low() const;

    /// Runs one episode of the interleaved act / graph / codec / policy loop.
    EpisodeStats run_episode(MazeEnv& env, const EpisodeOptions& options = {});

    QSample low_sample(const LowTransition& t) const;
    QSample high_sample(const HighTransition& t) const;

private:
    void observe_graph(const StateRepr& phi);
    void update_policies();

    HierConfig config_;
    std::array<double, 2> lower_;
    std::array<double, 2> upper_;
    std::vector<std::array<double, 2>> lattice_;
    Rng init_rng_;
    Rng act_rng_;
    Rng replay_rng_;
    Rng codec_rng_;
    Rng env_rng_;
    QLearner high_;
    QLearner low_;
    ReplayBuffer<LowTransition> low_buffer_;
    ReplayBuffer<HighTransition> high_buffer_;
    std::optional<StateGraph> graph_;
    GraphCodec codec_;
    std::optional<StateRepr> last_sampled_;
    std::uint64_t global_step_ = 0;
    std::size_t episodes_ = 0;
};

}  // namespace g4rl
