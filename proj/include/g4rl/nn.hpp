#pragma once

// Dense feed-forward networks with exact backpropagation and Adam.
//
// A DenseNet is a chain of affine layers; every layer except the last is
// followed by ReLU. Gradients and Adam moments reuse the DenseNet type so
// that "shaped like the parameters" is enforced by construction.

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

#include "g4rl/rng.hpp"

namespace g4rl::nn {

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // row-major, out x in
    std::vector<double> bias;     // out

    double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
    double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

class DenseNet {
public:
    DenseNet() = default;

    /// Zero-initialized network with the given layer widths, e.g. {2, 128, 128, 128, 16}.
    explicit DenseNet(std::span<const std::size_t> dims);
    DenseNet(std::initializer_list<std::size_t> dims);

    /// Uniform He-style fan-in initialization: W ~ U(-sqrt(6/in), sqrt(6/in)), b = 0.
    static DenseNet he_uniform(std::span<const std::size_t> dims, Rng& rng);
    static DenseNet he_uniform(std::initializer_list<std::size_t> dims, Rng& rng);

    /// Architecture used across the project: `hidden_layers` ReLU layers of
    /// width `hidden` followed by a linear output.
    static std::vector<std::size_t> mlp_dims(std::size_t in, std::size_t hidden,
                                             std::size_t hidden_layers, std::size_t out);

    std::size_t in_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
    std::size_t out_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
    std::size_t parameter_count() const;
    std::vector<std::size_t> dims() const;

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    /// Same architecture, all parameters zero.
    DenseNet zeros_like() const;
    bool same_shape(const DenseNet& other) const;
    bool all_finite() const;

    /// Flat views over every parameter, layer by layer (weights then bias).
    template <typename Fn>
    void for_each_parameter(Fn&& fn) {
        for (auto& layer : layers_) {
            for (auto& p : layer.weights) fn(p);
            for (auto& p : layer.bias) fn(p);
        }
    }
    template <typename Fn>
    void for_each_parameter(Fn&& fn) const {
        for (const auto& layer : layers_) {
            for (const auto& p : layer.weights) fn(p);
            for (const auto& p : layer.bias) fn(p);
        }
    }

    friend bool operator==(const DenseNet&, const DenseNet&) = default;

private:
    std::vector<DenseLayer> layers_;
};

/// Pre- and post-activation values of one forward pass, kept for backprop.
struct ForwardTrace {
    std::vector<std::vector<double>> inputs;  // input to each layer
    std::vector<std::vector<double>> pre;     // affine output of each layer
    std::vector<double> output;
};

std::vector<double> forward(const DenseNet& net, std::span<const double> x);
ForwardTrace forward_trace(const DenseNet& net, std::span<const double> x);

/// Accumulates d(output . output_grad)/d(params) into `grads`, i.e. the
/// vector-Jacobian product for one sample. Returns the gradient w.r.t. the input.
std::vector<double> accumulate_gradient(const DenseNet& net, const ForwardTrace& trace,
                                        std::span<const double> output_grad, DenseNet& grads);

struct TrainingExample {
    std::vector<double> input;
    std::vector<double> target;
    double weight = 1.0;
};

struct LossAndGradient {
    double loss = 0.0;
    DenseNet gradient;
};

/// Loss = sum_i weight_i * ||net(x_i) - target_i||^2 and its exact gradient.
LossAndGradient backward(const DenseNet& net, std::span<const TrainingExample> batch);

/// Weighted sum of squared errors without the gradient.
double batch_loss(const DenseNet& net, std::span<const TrainingExample> batch);

struct AdamState {
    DenseNet first_moment;
    DenseNet second_moment;
    std::size_t step = 0;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_net(const DenseNet& net, double learning_rate);
};

/// One bias-corrected Adam update of `net` in place.
void adam_step(DenseNet& net, const DenseNet& grads, AdamState& state);

void to_json(nlohmann::json& j, const DenseNet& net);
void from_json(const nlohmann::json& j, DenseNet& net);

}  // namespace g4rl::nn
