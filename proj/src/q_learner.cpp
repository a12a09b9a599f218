#include "g4rl/q_learner.hpp"

#include <algorithm>

#include "g4rl/errors.hpp"

namespace g4rl {

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

QLearner::QLearner(QLearnerConfig config, Rng& rng) : config_(std::move(config)) {
    if (config_.input_dim == 0 || config_.action_count == 0) throw ConfigError("Q-learner needs inputs and actions");
    if (config_.batch_size == 0) throw ConfigError("Q-learner batch size must be positive");
    if (config_.target_sync_period == 0) throw ConfigError("target sync period must be positive");
    if (config_.input_scale.empty()) config_.input_scale.assign(config_.input_dim, 1.0);
    if (config_.input_scale.size() != config_.input_dim) throw ConfigError("input_scale length differs from input_dim");
    online_ = nn::DenseNet::he_uniform(
        nn::DenseNet::mlp_dims(config_.input_dim, config_.hidden, config_.hidden_layers, config_.action_count), rng);
    target_ = online_;
    adam_ = nn::AdamState::for_net(online_, config_.learning_rate);
}

void QLearner::load_online(nn::DenseNet net) {
    if (!net.same_shape(online_)) throw ConfigError("loaded Q-network shape differs from the learner's");
    online_ = std::move(net);
    target_ = online_;
    adam_ = nn::AdamState::for_net(online_, adam_.learning_rate);
}

std::vector<double> QLearner::scaled(std::span<const double> raw) const {
    if (raw.size() != config_.input_dim) throw ShapeError("Q-learner input has the wrong dimension");
    std::vector<double> x(raw.begin(), raw.end());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= config_.input_scale[i];
    return x;
}

std::vector<double> QLearner::q_values(std::span<const double> raw_input) const {
    return nn::forward(online_, scaled(raw_input));
}

double QLearner::epsilon() const {
    if (config_.epsilon_decay_steps == 0 || explore_steps_ >= config_.epsilon_decay_steps) return config_.epsilon_end;
    const double frac = static_cast<double>(explore_steps_) / static_cast<double>(config_.epsilon_decay_steps);
    return config_.epsilon_start + frac * (config_.epsilon_end - config_.epsilon_start);
}

std::size_t QLearner::act_with_epsilon(std::span<const double> raw_input, double eps, Rng& rng) const {
    if (eps > 0.0 && rng.uniform() < eps) return static_cast<std::size_t>(rng.below(config_.action_count));
    return argmax(q_values(raw_input));
}

std::size_t QLearner::act(std::span<const double> raw_input, bool explore, Rng& rng) {
    if (!explore) return argmax(q_values(raw_input));
    const double eps = epsilon();
    ++explore_steps_;
    return act_with_epsilon(raw_input, eps, rng);
}

double QLearner::update(std::span<const QSample* const> batch) {
    if (batch.empty()) throw PreconditionError("Q update on an empty batch");
    auto grads = online_.zeros_like();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<double> dy(config_.action_count, 0.0);
    double loss = 0.0;
    for (const QSample* s : batch) {
        if (s->action >= config_.action_count) throw ShapeError("Q sample action out of range");
        double y = s->reward;
        if (!s->terminal) {
            const auto next = scaled(s->next_input);
            const auto a_star = argmax(nn::forward(online_, next));
            y += s->discount * nn::forward(target_, next)[a_star];
        }
        const auto trace = nn::forward_trace(online_, scaled(s->input));
        const double err = trace.output[s->action] - y;
        loss += err * err * inv_n;
        std::fill(dy.begin(), dy.end(), 0.0);
        dy[s->action] = 2.0 * err * inv_n;
        nn::accumulate_gradient(online_, trace, dy, grads);
    }
    nn::adam_step(online_, grads, adam_);
    ++updates_;
    if (updates_ % config_.target_sync_period == 0) sync_target();
    return loss;
}

}  // namespace g4rl
