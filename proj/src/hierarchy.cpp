#include "g4rl/hierarchy.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

#include "g4rl/errors.hpp"

namespace g4rl {

namespace {

constexpr std::array<std::array<double, 2>, 8> kCompass{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

class Fnv1a {
public:
    void add(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            hash_ ^= (v >> (8 * i)) & 0xffU;
            hash_ *= 0x100000001b3ULL;
        }
    }
    void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
    void add(const StateRepr& v) {
        for (double x : v) add(x);
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

StateRepr concat(const StateRepr& a, const StateRepr& b) {
    StateRepr out(a);
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

std::vector<double> uniform_scale(std::size_t n, double bound) { return std::vector<double>(n, 1.0 / std::max(bound, 1.0)); }

}  // namespace

void HierConfig::validate() const {
    if (subgoal_period == 0) throw ConfigError("subgoal_period (K) must be positive");
    for (double g : {gamma_high, gamma_low}) {
        if (!(g >= 0.0 && g < 1.0)) throw ConfigError("discount factors must lie in [0, 1)");
    }
    if (replay_capacity == 0 || batch_size == 0) throw ConfigError("replay capacity and batch size must be positive");
    if (q_hidden == 0 || codec_hidden == 0 || latent_dim == 0) throw ConfigError("network widths must be positive");
    if (target_sync_period == 0) throw ConfigError("target_sync_period must be positive");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
        throw ConfigError("exploration rates must lie in [0, 1]");
    }
    if (subgoal_magnitudes.empty()) throw ConfigError("subgoal_magnitudes must not be empty");
    for (double m : subgoal_magnitudes) {
        if (!(m > 0.0)) throw ConfigError("subgoal magnitudes must be positive");
    }
    if (graph_capacity < 2) throw ConfigError("graph_capacity (N) must be at least 2");
    if (!(match_threshold >= 0.0)) throw ConfigError("match_threshold must be non-negative");
    if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
    if (sample_interval == 0) throw ConfigError("sample_interval (t_c) must be positive");
    if (!(pair_fraction > 0.0 && pair_fraction <= 1.0)) throw ConfigError("pair_fraction must lie in (0, 1]");
    if (!(alpha_high >= 0.0 && alpha_low >= 0.0)) throw ConfigError("shaping weights must be non-negative");
    for (double lr : {high_learning_rate, low_learning_rate, codec_learning_rate}) {
        if (!(lr >= 0.0)) throw ConfigError("learning rates must be non-negative");
    }
}

void to_json(nlohmann::json& j, const HierConfig& c) {
    j = nlohmann::json{{"subgoal_period", c.subgoal_period},
                       {"gamma_high", c.gamma_high},
                       {"gamma_low", c.gamma_low},
                       {"replay_capacity", c.replay_capacity},
                       {"batch_size", c.batch_size},
                       {"high_learning_rate", c.high_learning_rate},
                       {"low_learning_rate", c.low_learning_rate},
                       {"q_hidden", c.q_hidden},
                       {"q_hidden_layers", c.q_hidden_layers},
                       {"target_sync_period", c.target_sync_period},
                       {"epsilon_start", c.epsilon_start},
                       {"epsilon_end", c.epsilon_end},
                       {"high_epsilon_decay", c.high_epsilon_decay},
                       {"low_epsilon_decay", c.low_epsilon_decay},
                       {"subgoal_magnitudes", c.subgoal_magnitudes},
                       {"update_mode", c.update_mode == UpdateMode::Streaming ? "streaming" : "episode_end"},
                       {"graph_enabled", c.graph_enabled},
                       {"graph_capacity", c.graph_capacity},
                       {"match_threshold", c.match_threshold},
                       {"beta", c.beta},
                       {"eviction", to_string(c.eviction)},
                       {"sample_interval", c.sample_interval},
                       {"distance_weights", c.distance_weights},
                       {"latent_dim", c.latent_dim},
                       {"codec_hidden", c.codec_hidden},
                       {"codec_hidden_layers", c.codec_hidden_layers},
                       {"codec_learning_rate", c.codec_learning_rate},
                       {"pair_fraction", c.pair_fraction},
                       {"alpha_high", c.alpha_high},
                       {"alpha_low", c.alpha_low},
                       {"shape_untrained_codec", c.shape_untrained_codec}};
}

void from_json(const nlohmann::json& j, HierConfig& c) {
    try {
        if (!j.is_object()) throw ConfigError("hierarchy config must be a JSON object");
        const HierConfig defaults;
        HierConfig out;
        const nlohmann::json known = defaults;
        for (const auto& [key, value] : j.items()) {
            if (!known.contains(key)) throw ConfigError("unknown hierarchy config key '" + key + "'");
        }
        auto read = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        read("subgoal_period", out.subgoal_period);
        read("gamma_high", out.gamma_high);
        read("gamma_low", out.gamma_low);
        read("replay_capacity", out.replay_capacity);
        read("batch_size", out.batch_size);
        read("high_learning_rate", out.high_learning_rate);
        read("low_learning_rate", out.low_learning_rate);
        read("q_hidden", out.q_hidden);
        read("q_hidden_layers", out.q_hidden_layers);
        read("target_sync_period", out.target_sync_period);
        read("epsilon_start", out.epsilon_start);
        read("epsilon_end", out.epsilon_end);
        read("high_epsilon_decay", out.high_epsilon_decay);
        read("low_epsilon_decay", out.low_epsilon_decay);
        read("subgoal_magnitudes", out.subgoal_magnitudes);
        if (j.contains("update_mode")) {
            const auto mode = j.at("update_mode").get<std::string>();
            if (mode == "streaming") {
                out.update_mode = UpdateMode::Streaming;
            } else if (mode == "episode_end") {
                out.update_mode = UpdateMode::EpisodeEnd;
            } else {
                throw ConfigError("update_mode must be streaming or episode_end");
            }
        }
        read("graph_enabled", out.graph_enabled);
        read("graph_capacity", out.graph_capacity);
        read("match_threshold", out.match_threshold);
        read("beta", out.beta);
        if (j.contains("eviction")) out.eviction = eviction_policy_from_string(j.at("eviction").get<std::string>());
        read("sample_interval", out.sample_interval);
        read("distance_weights", out.distance_weights);
        read("latent_dim", out.latent_dim);
        read("codec_hidden", out.codec_hidden);
        read("codec_hidden_layers", out.codec_hidden_layers);
        read("codec_learning_rate", out.codec_learning_rate);
        read("pair_fraction", out.pair_fraction);
        read("alpha_high", out.alpha_high);
        read("alpha_low", out.alpha_low);
        read("shape_untrained_codec", out.shape_untrained_codec);
        out.validate();
        c = std::move(out);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("hierarchy config: ") + e.what());
    }
}

std::vector<std::array<double, 2>> subgoal_lattice(const std::vector<double>& magnitudes) {
    std::vector<std::array<double, 2>> lattice{{0.0, 0.0}};
    for (double m : magnitudes) {
        for (const auto& d : kCompass) lattice.push_back({m * d[0], m * d[1]});
    }
    return lattice;
}

namespace {

QLearnerConfig high_config(const HierConfig& c, double bound) {
    QLearnerConfig q;
    q.input_dim = 2;
    q.action_count = 1 + 8 * c.subgoal_magnitudes.size();
    q.hidden = c.q_hidden;
    q.hidden_layers = c.q_hidden_layers;
    q.learning_rate = c.high_learning_rate;
    q.batch_size = c.batch_size;
    q.target_sync_period = c.target_sync_period;
    q.epsilon_start = c.epsilon_start;
    q.epsilon_end = c.epsilon_end;
    q.epsilon_decay_steps = c.high_epsilon_decay;
    q.input_scale = uniform_scale(2, bound);
    return q;
}

QLearnerConfig low_config(const HierConfig& c, std::size_t actions, double bound) {
    QLearnerConfig q = high_config(c, bound);
    q.input_dim = 4;
    q.action_count = actions;
    q.learning_rate = c.low_learning_rate;
    q.epsilon_decay_steps = c.low_epsilon_decay;
    q.input_scale = uniform_scale(4, bound);
    return q;
}

CodecConfig codec_config(const HierConfig& c, double bound) {
    CodecConfig cc;
    cc.input_dim = 2;
    cc.latent_dim = c.latent_dim;
    cc.hidden = c.codec_hidden;
    cc.hidden_layers = c.codec_hidden_layers;
    cc.learning_rate = c.codec_learning_rate;
    cc.input_scale = uniform_scale(2, bound);
    cc.pair_fraction = c.pair_fraction;
    return cc;
}

double coordinate_bound(const MazeEnv& env) {
    const auto hi = env.upper_bound();
    return std::max(hi[0], hi[1]);
}

}  // namespace

HierarchicalAgent::HierarchicalAgent(const HierConfig& config, const MazeEnv& env, std::uint64_t seed)
    : config_((config.validate(), config)),
      lower_(env.lower_bound()),
      upper_(env.upper_bound()),
      lattice_(subgoal_lattice(config.subgoal_magnitudes)),
      init_rng_(Rng(seed).split(0)),
      act_rng_(Rng(seed).split(1)),
      replay_rng_(Rng(seed).split(2)),
      codec_rng_(Rng(seed).split(3)),
      env_rng_(Rng(seed).split(4)),
      high_(high_config(config, coordinate_bound(env)), init_rng_),
      low_(low_config(config, env.action_count(), coordinate_bound(env)), init_rng_),
      low_buffer_(config.replay_capacity),
      high_buffer_(config.replay_capacity),
      codec_(codec_config(config, coordinate_bound(env)), codec_rng_) {
    if (config_.graph_enabled) {
        StateGraphConfig gc;
        gc.capacity = config_.graph_capacity;
        gc.dim = 2;
        gc.match_threshold = config_.match_threshold;
        gc.beta = config_.beta;
        gc.eviction = config_.eviction;
        gc.distance_weights = config_.distance_weights;
        graph_.emplace(std::move(gc));
    }
}

StateRepr HierarchicalAgent::subgoal_for(const StateRepr& phi, std::size_t lattice_index) const {
    const auto& d = lattice_.at(lattice_index);
    return {std::clamp(phi[0] + d[0], lower_[0], upper_[0]), std::clamp(phi[1] + d[1], lower_[1], upper_[1])};
}

std::pair<std::size_t, StateRepr> HierarchicalAgent::select_subgoal(const StateRepr& phi, bool explore) {
    const auto idx = high_.act(phi, explore, act_rng_);
    return {idx, subgoal_for(phi, idx)};
}

std::size_t HierarchicalAgent::select_action(const StateRepr& phi, const StateRepr& subgoal, bool explore) {
    return low_.act(concat(phi, subgoal), explore, act_rng_);
}

double HierarchicalAgent::effective_alpha_high() const {
    if (!config_.shape_untrained_codec && codec_.trained_phases() == 0) return 0.0;
    return config_.alpha_high;
}

double HierarchicalAgent::effective_alpha_low() const {
    if (!config_.shape_untrained_codec && codec_.trained_phases() == 0) return 0.0;
    return config_.alpha_low;
}

QSample HierarchicalAgent::low_sample(const LowTransition& t) const {
    return QSample{concat(t.phi, t.subgoal), t.action, t.reward, concat(t.phi_next, t.subgoal_next), config_.gamma_low,
                   t.terminal};
}

QSample HierarchicalAgent::high_sample(const HighTransition& t) const {
    return QSample{t.phi, t.action, t.return_high, t.phi_end,
                   std::pow(config_.gamma_high, static_cast<double>(t.length)), t.terminal};
}

void HierarchicalAgent::observe_graph(const StateRepr& phi) {
    graph_->observe_transition(last_sampled_, phi, global_step_);
    last_sampled_ = phi;
    if (graph_->consume_training_trigger()) codec_.train_phase(*graph_, codec_rng_);
}

void HierarchicalAgent::update_policies() {
    q_update(low_, low_buffer_, replay_rng_, [this](const LowTransition& t) { return low_sample(t); });
    q_update(high_, high_buffer_, replay_rng_, [this](const HighTransition& t) { return high_sample(t); });
}

EpisodeStats HierarchicalAgent::run_episode(MazeEnv& env, const EpisodeOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    EpisodeStats stats;
    stats.episode = episodes_;
    Fnv1a digest;
    EpisodeTrace* trace = options.trace;

    StateRepr phi = env.reset(env_rng_);
    digest.add(phi);
    if (trace) trace->positions.push_back(phi);

    const bool use_graph = options.learn && graph_.has_value();
    const std::size_t t_c = config_.sample_interval;
    if (use_graph) {
        last_sampled_.reset();
        observe_graph(phi);
    }

    auto [lattice_index, subgoal] = select_subgoal(phi, options.explore);
    if (trace) trace->subgoal_steps.push_back(0);
    StateRepr window_phi = phi;
    double window_return = 0.0;
    double window_discount = 1.0;
    std::size_t window_length = 0;

    const std::size_t K = config_.subgoal_period;
    std::size_t t = 0;
    bool done = false;
    while (!done) {
        const std::size_t action = select_action(phi, subgoal, options.explore);
        const StepResult res = env.step(action);
        done = res.done;

        // Rewards use the codec as it stands before this step's graph update.
        const double r_high = high_reward(res.reward, phi, subgoal, codec_, effective_alpha_high());
        const double r_low = low_reward(res.phi, subgoal, codec_, effective_alpha_low());

        stats.external_return += res.reward;
        window_return += window_discount * r_high;
        window_discount *= config_.gamma_high;
        ++window_length;

        digest.add(static_cast<std::uint64_t>(action));
        digest.add(subgoal);
        digest.add(res.phi);
        if (trace) {
            trace->actions.push_back(action);
            trace->subgoals.push_back(subgoal);
            trace->positions.push_back(res.phi);
            trace->external_rewards.push_back(res.reward);
            trace->high_rewards.push_back(r_high);
            trace->low_rewards.push_back(r_low);
        }

        StateRepr next_subgoal = subgoal;
        std::size_t next_index = lattice_index;
        const bool boundary = (t + 1) % K == 0;
        if (done || boundary) {
            HighTransition ht{window_phi, lattice_index, subgoal, window_return, res.phi, window_length, res.success};
            if (trace) trace->high_transitions.push_back(ht);
            if (options.learn) high_buffer_.push(std::move(ht));
            if (!done) {
                std::tie(next_index, next_subgoal) = select_subgoal(res.phi, options.explore);
                if (trace) trace->subgoal_steps.push_back(t + 1);
                window_phi = res.phi;
                window_return = 0.0;
                window_discount = 1.0;
                window_length = 0;
            }
        }

        if (options.learn) {
            low_buffer_.push(LowTransition{phi, subgoal, action, r_low, res.phi, next_subgoal, res.success});
            if (use_graph && (t + 1) % t_c == 0) observe_graph(res.phi);
            if (config_.update_mode == UpdateMode::Streaming) update_policies();
        }

        phi = res.phi;
        subgoal = std::move(next_subgoal);
        lattice_index = next_index;
        ++t;
        ++global_step_;
    }

    if (options.learn && config_.update_mode == UpdateMode::EpisodeEnd) {
        for (std::size_t i = 0; i < t; ++i) update_policies();
    }

    ++episodes_;
    stats.steps = t;
    stats.success = env.state().success;
    stats.graph_occupancy = graph_ ? graph_->occupancy() : 0;
    stats.codec_phases = codec_.trained_phases();
    stats.last_codec_loss = codec_.last_loss();
    stats.trajectory_digest = digest.value();
    stats.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return stats;
}

}  // namespace g4rl
