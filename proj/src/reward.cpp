#include "g4rl/reward.hpp"

#include "g4rl/errors.hpp"

namespace g4rl {

namespace {

double intrinsic(std::span<const double> a, std::span<const double> b, const GraphCodec& codec, double alpha) {
    if (a.size() != b.size()) throw ShapeError("shaped reward: state and subgoal dimensions differ");
    // A zero weight must leave the reward untouched, so the codec is not consulted.
    if (alpha == 0.0) return 0.0;
    return alpha * decode(codec.encode(a), codec.encode(b));
}

}  // namespace

double distance_reward(std::span<const double> phi_next, std::span<const double> subgoal) {
    if (phi_next.size() != subgoal.size()) throw ShapeError("distance reward: dimensions differ");
    double s = 0.0;
    for (std::size_t i = 0; i < phi_next.size(); ++i) {
        const double d = phi_next[i] - subgoal[i];
        s += d * d;
    }
    return -s;
}

double high_reward(double external, std::span<const double> phi, std::span<const double> subgoal,
                   const GraphCodec& codec, double alpha_high) {
    return external + intrinsic(phi, subgoal, codec, alpha_high);
}

double low_reward(std::span<const double> phi_next, std::span<const double> subgoal, const GraphCodec& codec,
                  double alpha_low) {
    return distance_reward(phi_next, subgoal) + intrinsic(phi_next, subgoal, codec, alpha_low);
}

}  // namespace g4rl
