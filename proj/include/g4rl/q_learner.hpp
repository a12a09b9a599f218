#pragma once

// Discrete double-Q learner with a target network, plus the replay buffer
// both hierarchy levels draw from.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "g4rl/nn.hpp"
#include "g4rl/rng.hpp"

namespace g4rl {

/// Fixed-capacity ring buffer with FIFO eviction and uniform sampling.
template <typename T>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
        items_.reserve(capacity_);
    }

    void push(T item) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(item));
        } else {
            items_[head_] = std::move(item);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }

    /// i-th oldest stored item.
    const T& at(std::size_t i) const { return items_.at((head_ + i) % items_.size()); }

    /// Uniform draws with replacement.
    std::vector<const T*> sample(std::size_t n, Rng& rng) const {
        std::vector<const T*> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[rng.below(items_.size())]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<T> items_;
};

/// One regression sample for a Q-learner, already in network input space.
/// `discount` is the bootstrap factor (gamma^n for an n-step transition).
struct QSample {
    std::vector<double> input;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_input;
    double discount = 0.99;
    bool terminal = false;
};

struct QLearnerConfig {
    std::size_t input_dim = 2;
    std::size_t action_count = 4;
    std::size_t hidden = 64;
    std::size_t hidden_layers = 2;
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    std::size_t target_sync_period = 250;  // in updates
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    std::size_t epsilon_decay_steps = 20000;  // exploratory action selections
    /// Per-coordinate multiplier applied to raw inputs before the network.
    std::vector<double> input_scale;
};

class QLearner {
public:
    QLearner(QLearnerConfig config, Rng& rng);

    const QLearnerConfig& config() const { return config_; }
    std::size_t action_count() const { return config_.action_count; }
    const nn::DenseNet& online() const { return online_; }
    const nn::DenseNet& target() const { return target_; }
    nn::DenseNet& online() { return online_; }
    std::size_t updates() const { return updates_; }
    std::size_t explore_steps() const { return explore_steps_; }

    std::vector<double> q_values(std::span<const double> raw_input) const;

    /// Current exploration rate (linear decay over exploratory selections).
    double epsilon() const;

    /// Epsilon-greedy when `explore` is set, otherwise greedy. Greedy ties go
    /// to the lowest action index.
    std::size_t act(std::span<const double> raw_input, bool explore, Rng& rng);

    /// Fixed-epsilon variant used by tests of the exploration contract.
    std::size_t act_with_epsilon(std::span<const double> raw_input, double epsilon, Rng& rng) const;

    /// One Adam step on the mean squared double-Q TD error of the batch;
    /// syncs the target network every `target_sync_period` updates. Returns
    /// the loss before the step.
    double update(std::span<const QSample* const> batch);

    void set_learning_rate(double lr) { adam_.learning_rate = lr; }
    void sync_target() { target_ = online_; }
    void load_online(nn::DenseNet net);

private:
    std::vector<double> scaled(std::span<const double> raw) const;

    QLearnerConfig config_;
    nn::DenseNet online_;
    nn::DenseNet target_;
    nn::AdamState adam_;
    std::size_t updates_ = 0;
    std::size_t explore_steps_ = 0;
};

/// Greedy argmax with lowest-index tie-break.
std::size_t argmax(std::span<const double> values);

/// Samples a batch from `buffer`, converts it with `to_sample` and updates the
/// learner. Returns nothing when the buffer holds fewer items than a batch.
template <typename T, typename Convert>
std::optional<double> q_update(QLearner& learner, const ReplayBuffer<T>& buffer, Rng& rng, Convert&& to_sample) {
    const auto batch = learner.config().batch_size;
    if (buffer.size() < batch) return std::nullopt;
    std::vector<QSample> samples;
    samples.reserve(batch);
    for (const T* item : buffer.sample(batch, rng)) samples.push_back(to_sample(*item));
    std::vector<const QSample*> ptrs;
    ptrs.reserve(batch);
    for (const auto& s : samples) ptrs.push_back(&s);
    return learner.update(ptrs);
}

/// A buffer whose items already are QSamples.
inline std::optional<double> q_update(QLearner& learner, const ReplayBuffer<QSample>& buffer, Rng& rng) {
    return q_update(learner, buffer, rng, [](const QSample& s) -> const QSample& { return s; });
}

}  // namespace g4rl
