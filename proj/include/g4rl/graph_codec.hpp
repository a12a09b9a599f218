#pragma once

// Graph encoder-decoder. The encoder is a dense network from state features
// to subgoal representations; the decoder is the inner product of two
// representations. Training regresses decoded scores onto the normalized
// adjacency of the state graph.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "g4rl/nn.hpp"
#include "g4rl/rng.hpp"
#include "g4rl/state_graph.hpp"

namespace g4rl {

using SubgoalRepr = std::vector<double>;

struct CodecConfig {
    std::size_t input_dim = 2;
    std::size_t latent_dim = 16;
    std::size_t hidden = 128;
    std::size_t hidden_layers = 3;
    double learning_rate = 1e-4;
    double pair_fraction = 1.0;  // share of node pairs used per training phase
    /// Per-coordinate multiplier applied to features before the encoder;
    /// empty means unscaled.
    std::vector<double> input_scale;
};

class GraphCodec {
public:
    /// He-initialized encoder.
    GraphCodec(const CodecConfig& config, Rng& rng);
    /// Wraps an existing encoder.
    GraphCodec(nn::DenseNet encoder, double learning_rate, double pair_fraction,
               std::vector<double> input_scale = {});

    SubgoalRepr encode(std::span<const double> feature) const;

    const nn::DenseNet& encoder() const { return encoder_; }
    nn::DenseNet& encoder() { return encoder_; }
    const nn::AdamState& adam() const { return adam_; }
    std::size_t latent_dim() const { return encoder_.out_dim(); }
    std::size_t input_dim() const { return encoder_.in_dim(); }
    double pair_fraction() const { return pair_fraction_; }
    const std::vector<double>& input_scale() const { return input_scale_; }
    std::size_t trained_phases() const { return trained_phases_; }
    double last_loss() const { return last_loss_; }

    void set_learning_rate(double lr) { adam_.learning_rate = lr; }

    /// One warm-started Adam step on the reconstruction objective over a
    /// random subset of ceil(fraction * P) unordered node pairs (all pairs
    /// when the fraction is 1). Requires a full graph. Returns the loss of the
    /// sampled objective before the step.
    double train_phase(const StateGraph& graph, Rng& rng);

    /// Same update without the fullness precondition; used by tests that
    /// train on small frozen graphs.
    double train_step(const StateGraph& graph, Rng& rng);

    friend void to_json(nlohmann::json& j, const GraphCodec& codec);
    friend GraphCodec codec_from_json(const nlohmann::json& j);

private:
    nn::DenseNet encoder_;
    nn::AdamState adam_;
    double pair_fraction_;
    std::vector<double> input_scale_;
    std::size_t trained_phases_ = 0;
    double last_loss_ = 0.0;
};

/// Inner product; symmetric in its arguments.
double decode(std::span<const double> a, std::span<const double> b);

/// Sum over unordered filled pairs u < v of (decode(E(phi_u), E(phi_v)) - Ahat_uv)^2.
double reconstruction_loss(const GraphCodec& codec, const StateGraph& graph);

/// Loss and exact encoder gradient over an explicit list of slot pairs.
/// Node features are multiplied by `input_scale` (when non-empty) first.
nn::LossAndGradient reconstruction_gradient(const nn::DenseNet& encoder, const StateGraph& graph,
                                            std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                            std::span<const double> input_scale = {});

/// Every unordered pair (u, v), u < v, of filled slots in slot order.
std::vector<std::pair<std::size_t, std::size_t>> filled_pairs(const StateGraph& graph);

/// Number of pairs a training phase draws from `total` pairs.
std::size_t sampled_pair_count(double fraction, std::size_t total);

GraphCodec codec_from_json(const nlohmann::json& j);

}  // namespace g4rl
