#pragma once

#include <span>

#include "g4rl/graph_codec.hpp"

namespace g4rl {

struct ShapingParams {
    double alpha_high = 0.1;
    double alpha_low = 0.1;
};

/// r_ext + alpha_h * D(E(phi_s), E(g)). The subgoal lives in feature space.
double high_reward(double external, std::span<const double> phi, std::span<const double> subgoal,
                   const GraphCodec& codec, double alpha_high);

/// -||phi_next - g||^2 + alpha_l * D(E(phi_next), E(g)).
double low_reward(std::span<const double> phi_next, std::span<const double> subgoal, const GraphCodec& codec,
                  double alpha_low);

/// The unshaped goal-reaching reward -||phi_next - g||^2.
double distance_reward(std::span<const double> phi_next, std::span<const double> subgoal);

}  // namespace g4rl
