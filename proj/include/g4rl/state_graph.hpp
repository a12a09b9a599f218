#pragma once

// Fixed-capacity undirected state graph built online from visited states.
//
// Nodes hold state features; edge weights count observed transitions between
// the nodes two consecutive (sampled) states were matched to. A weighted
// change counter tracks how much the graph has moved since the codec last
// trained on it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace g4rl {

using StateRepr = std::vector<double>;

enum class EvictionPolicy { Oldest, Weakest };

std::string to_string(EvictionPolicy policy);
EvictionPolicy eviction_policy_from_string(const std::string& name);

struct NodeRecord {
    StateRepr feature;
    std::uint64_t inserted_at = 0;

    friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct NodeMatch {
    std::size_t slot = 0;
    double distance = 0.0;
};

struct GraphDelta {
    enum class Kind { None, NodeInserted, NodeRelabeled, NodeReplaced, EdgeUpdated };

    Kind kind = Kind::None;
    std::vector<std::size_t> slots;
    std::int64_t weight = 0;  // edge weight after an EdgeUpdated

    /// Contribution of this event to the change counter for a graph of capacity n.
    static std::uint64_t change_weight(Kind kind, std::size_t capacity);
};

struct StateGraphConfig {
    std::size_t capacity = 200;
    std::size_t dim = 2;
    double match_threshold = 0.1;  // epsilon_d
    double beta = 0.2;
    EvictionPolicy eviction = EvictionPolicy::Oldest;
    std::vector<double> distance_weights;  // empty means all ones
};

class StateGraph {
public:
    explicit StateGraph(StateGraphConfig config);

    std::size_t capacity() const { return capacity_; }
    std::size_t dim() const { return dim_; }
    std::size_t occupancy() const { return occupancy_; }
    bool full() const { return occupancy_ == capacity_; }
    double match_threshold() const { return match_threshold_; }
    double beta() const { return beta_; }
    EvictionPolicy eviction() const { return eviction_; }
    std::uint64_t change_counter() const { return change_counter_; }
    const std::vector<double>& distance_weights() const { return distance_weights_; }

    const std::optional<NodeRecord>& slot(std::size_t i) const { return slots_.at(i); }
    std::vector<std::size_t> filled_slots() const;
    std::int64_t weight(std::size_t u, std::size_t v) const { return adjacency_[u * capacity_ + v]; }
    std::int64_t row_sum(std::size_t u) const;

    /// Weighted Euclidean distance sqrt(sum_i w_i (a_i - b_i)^2).
    double distance(std::span<const double> a, std::span<const double> b) const;

    /// Closest filled slot with no threshold; ties go to the lowest slot.
    std::optional<NodeMatch> nearest_node(std::span<const double> feature) const;

    /// Closest filled slot within the match threshold (distance <= epsilon_d).
    std::optional<NodeMatch> match(std::span<const double> feature) const;

    /// Registers a visit to `current`, optionally reached from `previous`
    /// (absent at episode starts). Returns the mutation log in order.
    std::vector<GraphDelta> observe_transition(const std::optional<StateRepr>& previous,
                                               const StateRepr& current, std::uint64_t global_step);

    /// Adjacency divided by its largest off-diagonal entry, N x N row-major.
    std::vector<double> normalized_adjacency() const;

    /// Training threshold beta * (N^2 - N), rounded up to the next integer.
    std::uint64_t training_threshold() const;

    /// True (and resets the change counter) iff the graph is full and the
    /// counter reached the training threshold.
    bool consume_training_trigger();

    void set_change_counter(std::uint64_t c) { change_counter_ = c; }

    friend bool operator==(const StateGraph&, const StateGraph&) = default;

private:
    void check_dim(std::span<const double> feature) const;
    std::size_t choose_victim() const;
    void clear_edges(std::size_t slot);
    std::int64_t& weight_ref(std::size_t u, std::size_t v) { return adjacency_[u * capacity_ + v]; }

    std::size_t capacity_;
    std::size_t dim_;
    double match_threshold_;
    double beta_;
    EvictionPolicy eviction_;
    std::vector<double> distance_weights_;
    std::vector<std::optional<NodeRecord>> slots_;
    std::vector<std::int64_t> adjacency_;
    std::size_t occupancy_ = 0;
    std::uint64_t change_counter_ = 0;

    friend void from_json(const nlohmann::json& j, StateGraph& graph);
};

/// {capacity, distance_weights, nodes: [{slot, feature, inserted_at}],
///  edges: [{u, v, weight}] with u < v, plus match_threshold, beta,
///  eviction and change_counter so that loading restores the graph exactly.
void to_json(nlohmann::json& j, const StateGraph& graph);
void from_json(const nlohmann::json& j, StateGraph& graph);
StateGraph state_graph_from_json(const nlohmann::json& j);

}  // namespace g4rl
