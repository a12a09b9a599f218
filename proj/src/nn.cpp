#include "g4rl/nn.hpp"

#include <cmath>
#include <string>

#include "g4rl/errors.hpp"

namespace g4rl::nn {

namespace {

void check_dims(std::span<const std::size_t> dims) {
    if (dims.size() < 2) throw ShapeError("DenseNet needs at least an input and an output width");
    for (auto d : dims) {
        if (d == 0) throw ShapeError("DenseNet layer widths must be positive");
    }
}

std::string shape_message(const char* what, std::size_t expected, std::size_t got) {
    return std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
           std::to_string(got);
}

}  // namespace

DenseNet::DenseNet(std::span<const std::size_t> dims) {
    check_dims(dims);
    layers_.reserve(dims.size() - 1);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer layer;
        layer.in = dims[i];
        layer.out = dims[i + 1];
        layer.weights.assign(layer.in * layer.out, 0.0);
        layer.bias.assign(layer.out, 0.0);
        layers_.push_back(std::move(layer));
    }
}

DenseNet::DenseNet(std::initializer_list<std::size_t> dims)
    : DenseNet(std::span<const std::size_t>(dims.begin(), dims.size())) {}

DenseNet DenseNet::he_uniform(std::span<const std::size_t> dims, Rng& rng) {
    DenseNet net(dims);
    for (auto& layer : net.layers_) {
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.in));
        for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
    }
    return net;
}

DenseNet DenseNet::he_uniform(std::initializer_list<std::size_t> dims, Rng& rng) {
    return he_uniform(std::span<const std::size_t>(dims.begin(), dims.size()), rng);
}

std::vector<std::size_t> DenseNet::mlp_dims(std::size_t in, std::size_t hidden,
                                            std::size_t hidden_layers, std::size_t out) {
    std::vector<std::size_t> dims{in};
    for (std::size_t i = 0; i < hidden_layers; ++i) dims.push_back(hidden);
    dims.push_back(out);
    return dims;
}

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
    return n;
}

std::vector<std::size_t> DenseNet::dims() const {
    std::vector<std::size_t> d;
    if (layers_.empty()) return d;
    d.push_back(layers_.front().in);
    for (const auto& layer : layers_) d.push_back(layer.out);
    return d;
}

DenseNet DenseNet::zeros_like() const {
    DenseNet z = *this;
    z.for_each_parameter([](double& p) { p = 0.0; });
    return z;
}

bool DenseNet::same_shape(const DenseNet& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].in != other.layers_[i].in || layers_[i].out != other.layers_[i].out) {
            return false;
        }
    }
    return true;
}

bool DenseNet::all_finite() const {
    bool ok = true;
    for_each_parameter([&](double p) { ok = ok && std::isfinite(p); });
    return ok;
}

ForwardTrace forward_trace(const DenseNet& net, std::span<const double> x) {
    if (x.size() != net.in_dim()) throw ShapeError(shape_message("forward input", net.in_dim(), x.size()));
    const auto& layers = net.layers();
    ForwardTrace trace;
    trace.inputs.reserve(layers.size());
    trace.pre.reserve(layers.size());
    std::vector<double> a(x.begin(), x.end());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        std::vector<double> z(layer.bias);
        for (std::size_t r = 0; r < layer.out; ++r) {
            const double* row = layer.weights.data() + r * layer.in;
            double acc = 0.0;
            for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * a[c];
            z[r] += acc;
        }
        trace.inputs.push_back(std::move(a));
        a = z;
        if (l + 1 < layers.size()) {
            for (auto& v : a) v = v > 0.0 ? v : 0.0;
        }
        trace.pre.push_back(std::move(z));
    }
    trace.output = std::move(a);
    return trace;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> x) {
    return forward_trace(net, x).output;
}

std::vector<double> accumulate_gradient(const DenseNet& net, const ForwardTrace& trace,
                                        std::span<const double> output_grad, DenseNet& grads) {
    if (output_grad.size() != net.out_dim()) {
        throw ShapeError(shape_message("output gradient", net.out_dim(), output_grad.size()));
    }
    if (!grads.same_shape(net)) throw ShapeError("gradient buffer shape differs from network");
    const auto& layers = net.layers();
    std::vector<double> delta(output_grad.begin(), output_grad.end());
    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& layer = layers[l];
        auto& g = grads.layers()[l];
        if (l + 1 < layers.size()) {
            // ReLU derivative, taken as 0 at the kink.
            for (std::size_t r = 0; r < layer.out; ++r) {
                if (trace.pre[l][r] <= 0.0) delta[r] = 0.0;
            }
        }
        const auto& in = trace.inputs[l];
        std::vector<double> prev(layer.in, 0.0);
        for (std::size_t r = 0; r < layer.out; ++r) {
            const double d = delta[r];
            if (d == 0.0) continue;
            g.bias[r] += d;
            double* grow = g.weights.data() + r * layer.in;
            const double* wrow = layer.weights.data() + r * layer.in;
            for (std::size_t c = 0; c < layer.in; ++c) {
                grow[c] += d * in[c];
                prev[c] += d * wrow[c];
            }
        }
        delta = std::move(prev);
    }
    return delta;
}

LossAndGradient backward(const DenseNet& net, std::span<const TrainingExample> batch) {
    if (batch.empty()) throw PreconditionError("backward: empty batch");
    LossAndGradient out{0.0, net.zeros_like()};
    std::vector<double> dy(net.out_dim());
    for (const auto& ex : batch) {
        if (ex.target.size() != net.out_dim()) {
            throw ShapeError(shape_message("backward target", net.out_dim(), ex.target.size()));
        }
        auto trace = forward_trace(net, ex.input);
        for (std::size_t i = 0; i < dy.size(); ++i) {
            const double e = trace.output[i] - ex.target[i];
            out.loss += ex.weight * e * e;
            dy[i] = 2.0 * ex.weight * e;
        }
        accumulate_gradient(net, trace, dy, out.gradient);
    }
    return out;
}

double batch_loss(const DenseNet& net, std::span<const TrainingExample> batch) {
    double loss = 0.0;
    for (const auto& ex : batch) {
        if (ex.target.size() != net.out_dim()) {
            throw ShapeError(shape_message("batch_loss target", net.out_dim(), ex.target.size()));
        }
        auto y = forward(net, ex.input);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double e = y[i] - ex.target[i];
            loss += ex.weight * e * e;
        }
    }
    return loss;
}

AdamState AdamState::for_net(const DenseNet& net, double learning_rate) {
    AdamState s;
    s.first_moment = net.zeros_like();
    s.second_moment = net.zeros_like();
    s.learning_rate = learning_rate;
    return s;
}

void adam_step(DenseNet& net, const DenseNet& grads, AdamState& state) {
    if (!grads.same_shape(net) || !state.first_moment.same_shape(net) ||
        !state.second_moment.same_shape(net)) {
        throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                          std::vector<double>& v) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
                v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
                const double mhat = m[i] / c1;
                const double vhat = v[i] / c2;
                p[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
            }
        };
        auto& m = state.first_moment.layers()[l];
        auto& v = state.second_moment.layers()[l];
        const auto& g = grads.layers()[l];
        update(layers[l].weights, g.weights, m.weights, v.weights);
        update(layers[l].bias, g.bias, m.bias, v.bias);
    }
}

void to_json(nlohmann::json& j, const DenseNet& net) {
    j = nlohmann::json::object();
    j["dims"] = net.dims();
    auto layers = nlohmann::json::array();
    for (const auto& layer : net.layers()) {
        auto rows = nlohmann::json::array();
        for (std::size_t r = 0; r < layer.out; ++r) {
            rows.push_back(std::vector<double>(layer.weights.begin() + static_cast<std::ptrdiff_t>(r * layer.in),
                                               layer.weights.begin() + static_cast<std::ptrdiff_t>((r + 1) * layer.in)));
        }
        layers.push_back({{"weights", std::move(rows)}, {"bias", layer.bias}});
    }
    j["layers"] = std::move(layers);
}

void from_json(const nlohmann::json& j, DenseNet& net) {
    try {
        const auto dims = j.at("dims").get<std::vector<std::size_t>>();
        DenseNet parsed(dims);
        const auto& layers = j.at("layers");
        if (layers.size() != parsed.layers().size()) throw ConfigError("network JSON: layer count mismatch");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& layer = parsed.layers()[l];
            const auto& rows = layers[l].at("weights");
            if (rows.size() != layer.out) throw ConfigError("network JSON: weight rows mismatch");
            for (std::size_t r = 0; r < layer.out; ++r) {
                const auto row = rows[r].get<std::vector<double>>();
                if (row.size() != layer.in) throw ConfigError("network JSON: weight columns mismatch");
                std::copy(row.begin(), row.end(), layer.weights.begin() + static_cast<std::ptrdiff_t>(r * layer.in));
            }
            layer.bias = layers[l].at("bias").get<std::vector<double>>();
            if (layer.bias.size() != layer.out) throw ConfigError("network JSON: bias length mismatch");
        }
        net = std::move(parsed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("network JSON: ") + e.what());
    } catch (const ShapeError& e) {
        throw ConfigError(std::string("network JSON: ") + e.what());
    }
}

}  // namespace g4rl::nn
