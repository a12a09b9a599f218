#include "g4rl/state_graph.hpp"

#include <cmath>
#include <limits>

#include "g4rl/errors.hpp"

namespace g4rl {

std::string to_string(EvictionPolicy policy) {
    return policy == EvictionPolicy::Oldest ? "oldest" : "weakest";
}

EvictionPolicy eviction_policy_from_string(const std::string& name) {
    if (name == "oldest") return EvictionPolicy::Oldest;
    if (name == "weakest") return EvictionPolicy::Weakest;
    throw ConfigError("unknown eviction policy '" + name + "' (expected oldest|weakest)");
}

std::uint64_t GraphDelta::change_weight(Kind kind, std::size_t capacity) {
    switch (kind) {
        case Kind::NodeInserted:
        case Kind::NodeReplaced:
            return capacity - 1;
        case Kind::EdgeUpdated:
            return 1;
        default:
            return 0;
    }
}

StateGraph::StateGraph(StateGraphConfig config)
    : capacity_(config.capacity),
      dim_(config.dim),
      match_threshold_(config.match_threshold),
      beta_(config.beta),
      eviction_(config.eviction),
      distance_weights_(std::move(config.distance_weights)) {
    if (capacity_ < 2) throw ConfigError("state graph capacity must be at least 2");
    if (dim_ == 0) throw ConfigError("state graph feature dimension must be positive");
    if (!(match_threshold_ >= 0.0) || !std::isfinite(match_threshold_)) {
        throw ConfigError("match threshold must be finite and non-negative");
    }
    if (!(beta_ >= 0.0) || !std::isfinite(beta_)) throw ConfigError("beta must be finite and non-negative");
    if (distance_weights_.empty()) distance_weights_.assign(dim_, 1.0);
    if (distance_weights_.size() != dim_) throw ConfigError("distance weights length differs from dim");
    for (double w : distance_weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("distance weights must be finite and >= 0");
    }
    slots_.resize(capacity_);
    adjacency_.assign(capacity_ * capacity_, 0);
}

void StateGraph::check_dim(std::span<const double> feature) const {
    if (feature.size() != dim_) {
        throw ShapeError("state feature has dimension " + std::to_string(feature.size()) + ", graph expects " +
                         std::to_string(dim_));
    }
}

std::vector<std::size_t> StateGraph::filled_slots() const {
    std::vector<std::size_t> out;
    out.reserve(occupancy_);
    for (std::size_t i = 0; i < capacity_; ++i) {
        if (slots_[i]) out.push_back(i);
    }
    return out;
}

std::int64_t StateGraph::row_sum(std::size_t u) const {
    std::int64_t s = 0;
    for (std::size_t v = 0; v < capacity_; ++v) s += adjacency_[u * capacity_ + v];
    return s;
}

double StateGraph::distance(std::span<const double> a, std::span<const double> b) const {
    check_dim(a);
    check_dim(b);
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        const double d = a[i] - b[i];
        s += distance_weights_[i] * d * d;
    }
    return std::sqrt(s);
}

std::optional<NodeMatch> StateGraph::nearest_node(std::span<const double> feature) const {
    check_dim(feature);
    std::optional<NodeMatch> best;
    for (std::size_t i = 0; i < capacity_; ++i) {
        if (!slots_[i]) continue;
        const double d = distance(feature, slots_[i]->feature);
        if (!best || d < best->distance) best = NodeMatch{i, d};
    }
    return best;
}

std::optional<NodeMatch> StateGraph::match(std::span<const double> feature) const {
    auto best = nearest_node(feature);
    if (best && best->distance <= match_threshold_) return best;
    return std::nullopt;
}

std::size_t StateGraph::choose_victim() const {
    std::size_t victim = capacity_;
    if (eviction_ == EvictionPolicy::Oldest) {
        std::uint64_t oldest = std::numeric_limits<std::uint64_t>::max();
        for (std::size_t i = 0; i < capacity_; ++i) {
            if (slots_[i] && (victim == capacity_ || slots_[i]->inserted_at < oldest)) {
                oldest = slots_[i]->inserted_at;
                victim = i;
            }
        }
    } else {
        std::int64_t weakest = std::numeric_limits<std::int64_t>::max();
        for (std::size_t i = 0; i < capacity_; ++i) {
            if (!slots_[i]) continue;
            const auto s = row_sum(i);
            if (victim == capacity_ || s < weakest) {
                weakest = s;
                victim = i;
            }
        }
    }
    return victim;
}

void StateGraph::clear_edges(std::size_t slot) {
    for (std::size_t v = 0; v < capacity_; ++v) {
        weight_ref(slot, v) = 0;
        weight_ref(v, slot) = 0;
    }
}

std::vector<GraphDelta> StateGraph::observe_transition(const std::optional<StateRepr>& previous,
                                                       const StateRepr& current, std::uint64_t global_step) {
    check_dim(current);
    if (previous) check_dim(*previous);

    // The previous state's node is resolved before any mutation; if it gets
    // evicted below, the transition cannot be recorded as an edge.
    std::optional<std::size_t> prev_slot;
    if (previous) {
        if (auto m = match(*previous)) prev_slot = m->slot;
    }

    std::vector<GraphDelta> deltas;
    std::size_t curr_slot = 0;
    if (auto m = match(current)) {
        curr_slot = m->slot;
        deltas.push_back({GraphDelta::Kind::NodeRelabeled, {curr_slot}, 0});
    } else if (occupancy_ < capacity_) {
        curr_slot = 0;
        while (slots_[curr_slot]) ++curr_slot;
        slots_[curr_slot] = NodeRecord{current, global_step};
        ++occupancy_;
        deltas.push_back({GraphDelta::Kind::NodeInserted, {curr_slot}, 0});
    } else {
        curr_slot = choose_victim();
        clear_edges(curr_slot);
        slots_[curr_slot] = NodeRecord{current, global_step};
        if (prev_slot && *prev_slot == curr_slot) prev_slot.reset();
        deltas.push_back({GraphDelta::Kind::NodeReplaced, {curr_slot}, 0});
    }

    if (prev_slot && *prev_slot != curr_slot) {
        auto& w = weight_ref(*prev_slot, curr_slot);
        ++w;
        weight_ref(curr_slot, *prev_slot) = w;
        deltas.push_back({GraphDelta::Kind::EdgeUpdated, {*prev_slot, curr_slot}, w});
    }

    for (const auto& d : deltas) change_counter_ += GraphDelta::change_weight(d.kind, capacity_);
    return deltas;
}

std::vector<double> StateGraph::normalized_adjacency() const {
    std::int64_t max_w = 0;
    for (std::size_t u = 0; u < capacity_; ++u) {
        for (std::size_t v = 0; v < capacity_; ++v) {
            if (u != v && adjacency_[u * capacity_ + v] > max_w) max_w = adjacency_[u * capacity_ + v];
        }
    }
    std::vector<double> out(capacity_ * capacity_, 0.0);
    if (max_w == 0) return out;
    const double scale = static_cast<double>(max_w);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(adjacency_[i]) / scale;
    return out;
}

std::uint64_t StateGraph::training_threshold() const {
    const double off_diagonal = static_cast<double>(capacity_) * static_cast<double>(capacity_ - 1);
    const double raw = beta_ * off_diagonal;
    // Absorb the representation error of beta (0.2 is not exact in binary).
    return static_cast<std::uint64_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
}

bool StateGraph::consume_training_trigger() {
    if (!full()) return false;
    if (change_counter_ < training_threshold()) return false;
    change_counter_ = 0;
    return true;
}

void to_json(nlohmann::json& j, const StateGraph& graph) {
    auto nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < graph.capacity(); ++i) {
        if (const auto& node = graph.slot(i)) {
            nodes.push_back({{"slot", i}, {"feature", node->feature}, {"inserted_at", node->inserted_at}});
        }
    }
    auto edges = nlohmann::json::array();
    for (std::size_t u = 0; u < graph.capacity(); ++u) {
        for (std::size_t v = u + 1; v < graph.capacity(); ++v) {
            if (auto w = graph.weight(u, v); w != 0) edges.push_back({{"u", u}, {"v", v}, {"weight", w}});
        }
    }
    j = nlohmann::json{{"capacity", graph.capacity()},
                       {"dim", graph.dim()},
                       {"distance_weights", graph.distance_weights()},
                       {"match_threshold", graph.match_threshold()},
                       {"beta", graph.beta()},
                       {"eviction", to_string(graph.eviction())},
                       {"change_counter", graph.change_counter()},
                       {"nodes", std::move(nodes)},
                       {"edges", std::move(edges)}};
}

void from_json(const nlohmann::json& j, StateGraph& graph) {
    try {
        StateGraphConfig cfg;
        cfg.capacity = j.at("capacity").get<std::size_t>();
        cfg.distance_weights = j.at("distance_weights").get<std::vector<double>>();
        cfg.dim = j.contains("dim") ? j.at("dim").get<std::size_t>() : cfg.distance_weights.size();
        cfg.match_threshold = j.value("match_threshold", cfg.match_threshold);
        cfg.beta = j.value("beta", cfg.beta);
        cfg.eviction = eviction_policy_from_string(j.value("eviction", std::string("oldest")));
        StateGraph g(cfg);
        for (const auto& node : j.at("nodes")) {
            const auto slot = node.at("slot").get<std::size_t>();
            if (slot >= g.capacity_ || g.slots_[slot]) throw ConfigError("graph JSON: bad or duplicate slot");
            auto feature = node.at("feature").get<StateRepr>();
            if (feature.size() != g.dim_) throw ConfigError("graph JSON: feature dimension mismatch");
            g.slots_[slot] = NodeRecord{std::move(feature), node.at("inserted_at").get<std::uint64_t>()};
            ++g.occupancy_;
        }
        for (const auto& edge : j.at("edges")) {
            const auto u = edge.at("u").get<std::size_t>();
            const auto v = edge.at("v").get<std::size_t>();
            const auto w = edge.at("weight").get<std::int64_t>();
            if (u >= v || v >= g.capacity_) throw ConfigError("graph JSON: edges must satisfy u < v < capacity");
            if (!g.slots_[u] || !g.slots_[v]) throw ConfigError("graph JSON: edge touches an empty slot");
            if (w <= 0) throw ConfigError("graph JSON: edge weights must be positive");
            g.weight_ref(u, v) = w;
            g.weight_ref(v, u) = w;
        }
        g.change_counter_ = j.value("change_counter", std::uint64_t{0});
        graph = std::move(g);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("graph JSON: ") + e.what());
    }
}

StateGraph state_graph_from_json(const nlohmann::json& j) {
    StateGraph g(StateGraphConfig{});
    from_json(j, g);
    return g;
}

}  // namespace g4rl
