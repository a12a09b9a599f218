#include "g4rl/graph_codec.hpp"

#include <cmath>
#include <map>

#include "g4rl/errors.hpp"

namespace g4rl {

namespace {

void check_fraction(double f) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("pair fraction must lie in (0, 1]");
}

std::vector<double> scaled(std::span<const double> x, std::span<const double> scale) {
    if (x.size() != scale.size()) throw ShapeError("codec input has the wrong dimension");
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= scale[i];
    return out;
}

}  // namespace

GraphCodec::GraphCodec(const CodecConfig& config, Rng& rng)
    : GraphCodec(nn::DenseNet::he_uniform(
                     nn::DenseNet::mlp_dims(config.input_dim, config.hidden, config.hidden_layers, config.latent_dim),
                     rng),
                 config.learning_rate, config.pair_fraction, config.input_scale) {}

GraphCodec::GraphCodec(nn::DenseNet encoder, double learning_rate, double pair_fraction, std::vector<double> input_scale)
    : encoder_(std::move(encoder)),
      adam_(nn::AdamState::for_net(encoder_, learning_rate)),
      pair_fraction_(pair_fraction),
      input_scale_(std::move(input_scale)) {
    check_fraction(pair_fraction_);
    if (!input_scale_.empty() && input_scale_.size() != encoder_.in_dim()) {
        throw ConfigError("codec input_scale length differs from the encoder input width");
    }
}

SubgoalRepr GraphCodec::encode(std::span<const double> feature) const {
    if (input_scale_.empty()) return nn::forward(encoder_, feature);
    return nn::forward(encoder_, scaled(feature, input_scale_));
}

double decode(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("decode: representations differ in dimension");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<std::pair<std::size_t, std::size_t>> filled_pairs(const StateGraph& graph) {
    const auto slots = graph.filled_slots();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(slots.size() * (slots.size() - (slots.empty() ? 0 : 1)) / 2);
    for (std::size_t i = 0; i < slots.size(); ++i) {
        for (std::size_t j = i + 1; j < slots.size(); ++j) pairs.emplace_back(slots[i], slots[j]);
    }
    return pairs;
}

std::size_t sampled_pair_count(double fraction, std::size_t total) {
    check_fraction(fraction);
    if (fraction == 1.0) return total;
    const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total) - 1e-12));
    return std::min(n, total);
}

double reconstruction_loss(const GraphCodec& codec, const StateGraph& graph) {
    if (graph.occupancy() < 2) throw PreconditionError("reconstruction loss needs at least two nodes");
    const auto slots = graph.filled_slots();
    const auto target = graph.normalized_adjacency();
    const auto n = graph.capacity();
    std::vector<SubgoalRepr> emb;
    emb.reserve(slots.size());
    for (auto s : slots) emb.push_back(codec.encode(graph.slot(s)->feature));
    double loss = 0.0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        for (std::size_t j = i + 1; j < slots.size(); ++j) {
            const double r = decode(emb[i], emb[j]) - target[slots[i] * n + slots[j]];
            loss += r * r;
        }
    }
    return loss;
}

nn::LossAndGradient reconstruction_gradient(const nn::DenseNet& encoder, const StateGraph& graph,
                                            std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                            std::span<const double> input_scale) {
    const auto target = graph.normalized_adjacency();
    const auto n = graph.capacity();

    // Encode each node touched by the sample once.
    std::map<std::size_t, std::size_t> index;
    std::vector<nn::ForwardTrace> traces;
    for (const auto& [u, v] : pairs) {
        for (auto s : {u, v}) {
            if (!graph.slot(s)) throw PreconditionError("reconstruction pair touches an empty slot");
            if (!index.try_emplace(s, traces.size()).second) continue;
            const auto& feature = graph.slot(s)->feature;
            traces.push_back(input_scale.empty() ? nn::forward_trace(encoder, feature)
                                                 : nn::forward_trace(encoder, scaled(feature, input_scale)));
        }
    }

    const auto k = encoder.out_dim();
    std::vector<std::vector<double>> emb_grad(traces.size(), std::vector<double>(k, 0.0));
    nn::LossAndGradient out{0.0, encoder.zeros_like()};
    for (const auto& [u, v] : pairs) {
        const auto iu = index.at(u);
        const auto iv = index.at(v);
        const auto& gu = traces[iu].output;
        const auto& gv = traces[iv].output;
        const double r = decode(gu, gv) - target[u * n + v];
        out.loss += r * r;
        for (std::size_t d = 0; d < k; ++d) {
            emb_grad[iu][d] += 2.0 * r * gv[d];
            emb_grad[iv][d] += 2.0 * r * gu[d];
        }
    }
    for (std::size_t i = 0; i < traces.size(); ++i) nn::accumulate_gradient(encoder, traces[i], emb_grad[i], out.gradient);
    return out;
}

double GraphCodec::train_step(const StateGraph& graph, Rng& rng) {
    if (graph.occupancy() < 2) throw PreconditionError("codec training needs at least two nodes");
    auto pairs = filled_pairs(graph);
    const auto m = sampled_pair_count(pair_fraction_, pairs.size());
    if (m < pairs.size()) {
        // Partial Fisher-Yates: the first m entries become a uniform sample without replacement.
        for (std::size_t i = 0; i < m; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(pairs.size() - i));
            std::swap(pairs[i], pairs[j]);
        }
        pairs.resize(m);
    }
    auto lg = reconstruction_gradient(encoder_, graph, pairs, input_scale_);
    nn::adam_step(encoder_, lg.gradient, adam_);
    ++trained_phases_;
    last_loss_ = lg.loss;
    return lg.loss;
}

double GraphCodec::train_phase(const StateGraph& graph, Rng& rng) {
    if (!graph.full()) throw PreconditionError("codec training starts only once the state graph is full");
    return train_step(graph, rng);
}

void to_json(nlohmann::json& j, const GraphCodec& codec) {
    j = nlohmann::json{{"encoder", codec.encoder_},
                       {"latent_dim", codec.latent_dim()},
                       {"trained_phases", codec.trained_phases_},
                       {"learning_rate", codec.adam_.learning_rate},
                       {"pair_fraction", codec.pair_fraction_},
                       {"input_scale", codec.input_scale_},
                       {"last_loss", codec.last_loss_}};
}

GraphCodec codec_from_json(const nlohmann::json& j) {
    try {
        GraphCodec codec(j.at("encoder").get<nn::DenseNet>(), j.value("learning_rate", 1e-4), j.value("pair_fraction", 1.0),
                         j.value("input_scale", std::vector<double>{}));
        if (j.contains("latent_dim") && j.at("latent_dim").get<std::size_t>() != codec.latent_dim()) {
            throw ConfigError("codec JSON: latent_dim disagrees with encoder output width");
        }
        codec.trained_phases_ = j.value("trained_phases", std::size_t{0});
        codec.last_loss_ = j.value("last_loss", 0.0);
        return codec;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("codec JSON: ") + e.what());
    }
}

}  // namespace g4rl
