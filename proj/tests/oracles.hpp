#pragma once

// Test-only reference computations. Nothing here calls the backpropagation
// or training code it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "g4rl/nn.hpp"
#include "g4rl/rng.hpp"

namespace oracle {

/// Central differences of `loss` w.r.t. every parameter of `net`, in
/// for_each_parameter order.
inline std::vector<double> numeric_gradient(g4rl::nn::DenseNet net,
                                            const std::function<double(const g4rl::nn::DenseNet&)>& loss,
                                            double h = 1e-5) {
    std::vector<double*> params;
    net.for_each_parameter([&](double& p) { params.push_back(&p); });
    std::vector<double> grad;
    grad.reserve(params.size());
    for (double* p : params) {
        const double saved = *p;
        *p = saved + h;
        const double up = loss(net);
        *p = saved - h;
        const double down = loss(net);
        *p = saved;
        grad.push_back((up - down) / (2.0 * h));
    }
    return grad;
}

/// Central differences for a subset of parameters (indices into the
/// for_each_parameter order).
inline std::vector<double> numeric_partials(g4rl::nn::DenseNet net,
                                            const std::function<double(const g4rl::nn::DenseNet&)>& loss,
                                            const std::vector<std::size_t>& indices, double h = 1e-5) {
    std::vector<double*> params;
    net.for_each_parameter([&](double& p) { params.push_back(&p); });
    std::vector<double> grad;
    grad.reserve(indices.size());
    for (auto i : indices) {
        double* p = params.at(i);
        const double saved = *p;
        *p = saved + h;
        const double up = loss(net);
        *p = saved - h;
        const double down = loss(net);
        *p = saved;
        grad.push_back((up - down) / (2.0 * h));
    }
    return grad;
}

inline std::vector<double> flatten(const g4rl::nn::DenseNet& net) {
    std::vector<double> out;
    net.for_each_parameter([&](double p) { out.push_back(p); });
    return out;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor).
inline double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                                 double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

/// Plain triple-loop evaluation of a ReLU MLP, independent of nn::forward.
inline std::vector<double> reference_forward(const g4rl::nn::DenseNet& net, std::vector<double> x) {
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        std::vector<double> y(layers[l].out);
        for (std::size_t r = 0; r < layers[l].out; ++r) {
            double acc = layers[l].bias[r];
            for (std::size_t c = 0; c < layers[l].in; ++c) acc += layers[l].weights[r * layers[l].in + c] * x[c];
            y[r] = (l + 1 < layers.size() && acc < 0.0) ? 0.0 : acc;
        }
        x = std::move(y);
    }
    return x;
}

}  // namespace oracle
