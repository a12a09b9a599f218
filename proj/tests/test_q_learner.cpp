#include <cmath>
#include <vector>

#include "doctest.h"

#include "g4rl/errors.hpp"
#include "g4rl/hierarchy.hpp"
#include "g4rl/q_learner.hpp"

using g4rl::QLearner;
using g4rl::QLearnerConfig;
using g4rl::QSample;
using g4rl::ReplayBuffer;
using g4rl::Rng;

namespace {

QLearnerConfig small_config(std::size_t actions = 4) {
    QLearnerConfig c;
    c.input_dim = 2;
    c.action_count = actions;
    c.hidden = 16;
    c.hidden_layers = 2;
    c.batch_size = 8;
    return c;
}

}  // namespace

TEST_CASE("replay buffer evicts the oldest item first") {
    ReplayBuffer<int> buf(3);
    for (int i = 0; i < 5; ++i) buf.push(i);
    CHECK(buf.size() == 3);
    CHECK(buf.at(0) == 2);
    CHECK(buf.at(1) == 3);
    CHECK(buf.at(2) == 4);
    Rng rng(0);
    for (const int* p : buf.sample(100, rng)) CHECK((*p >= 2 && *p <= 4));
    CHECK_THROWS_AS(ReplayBuffer<int>(0), std::invalid_argument);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    CHECK(g4rl::argmax(std::vector<double>{1.0, 3.0, 3.0, 2.0}) == 1);
    CHECK(g4rl::argmax(std::vector<double>{0.0, 0.0, 0.0}) == 0);
}

TEST_CASE("greedy selection on a constant Q function picks action 0") {
    Rng rng(1);
    QLearner q(small_config(), rng);
    q.online() = q.online().zeros_like();
    CHECK(q.act(std::vector<double>{0.3, 0.4}, false, rng) == 0);
}

TEST_CASE("epsilon one selects actions uniformly") {
    Rng rng(2);
    QLearner q(small_config(4), rng);
    std::vector<int> counts(4, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++counts[q.act_with_epsilon(std::vector<double>{1.0, 1.0}, 1.0, rng)];
    const double expected = draws / 4.0;
    const double sigma = std::sqrt(draws * 0.25 * 0.75);
    for (int c : counts) CHECK(std::abs(c - expected) < 5.0 * sigma);
}

TEST_CASE("greedy selection is deterministic and ignores the generator") {
    Rng init(3);
    QLearner q(small_config(), init);
    Rng a(10), b(99);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> x{i * 0.1, -i * 0.2};
        CHECK(q.act(x, false, a) == q.act(x, false, b));
    }
}

TEST_CASE("epsilon decays linearly to its floor") {
    Rng rng(4);
    auto c = small_config();
    c.epsilon_decay_steps = 10;
    QLearner q(c, rng);
    CHECK(q.epsilon() == 1.0);
    for (int i = 0; i < 5; ++i) q.act(std::vector<double>{0.0, 0.0}, true, rng);
    CHECK(q.epsilon() == doctest::Approx(1.0 - 0.5 * 0.95));
    for (int i = 0; i < 20; ++i) q.act(std::vector<double>{0.0, 0.0}, true, rng);
    CHECK(q.epsilon() == 0.05);
}

TEST_CASE("subgoals are clipped to the maze bounds") {
    auto spec = g4rl::default_maze();
    g4rl::MazeEnv env(spec);
    g4rl::HierConfig hc;
    hc.graph_enabled = false;
    g4rl::HierarchicalAgent agent(hc, env, 0);
    const auto lattice = g4rl::subgoal_lattice(hc.subgoal_magnitudes);
    CHECK(lattice.size() == 17);
    CHECK(lattice[0] == std::array<double, 2>{0.0, 0.0});
    std::size_t up_right = 0;
    for (std::size_t i = 0; i < lattice.size(); ++i)
        if (lattice[i] == std::array<double, 2>{3.0, 3.0}) up_right = i;
    REQUIRE(up_right != 0);
    CHECK(agent.subgoal_for({9.0, 9.0}, up_right) == g4rl::StateRepr{9.0, 9.0});
    CHECK(agent.subgoal_for({0.0, 8.0}, up_right) == g4rl::StateRepr{3.0, 9.0});
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        const auto g = agent.subgoal_for({0.0, 0.0}, i);
        CHECK(g[0] >= 0.0);
        CHECK(g[1] >= 0.0);
    }
}

TEST_CASE("terminal one-step targets drive Q toward the reward") {
    Rng rng(5);
    auto c = small_config(2);
    c.learning_rate = 1e-2;
    c.target_sync_period = 10;
    QLearner q(c, rng);
    QSample s{{0.5, 0.5}, 1, 1.0, {0.5, 0.5}, 0.0, false};  // discount 0
    std::vector<const QSample*> batch(8, &s);
    for (int i = 0; i < 2000; ++i) q.update(batch);
    CHECK(q.q_values(s.input)[1] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("a zero learning rate leaves the online network unchanged") {
    Rng rng(6);
    auto c = small_config();
    c.learning_rate = 0.0;
    QLearner q(c, rng);
    const auto before = q.online();
    QSample s{{0.1, 0.2}, 2, 0.5, {0.3, 0.4}, 0.9, false};
    std::vector<const QSample*> batch{&s, &s};
    const double loss = q.update(batch);
    CHECK(loss >= 0.0);
    CHECK(q.online() == before);
}

TEST_CASE("updates are deterministic under a fixed seed") {
    auto run = [] {
        Rng rng(7);
        QLearner q(small_config(), rng);
        ReplayBuffer<QSample> buf(64);
        for (int i = 0; i < 40; ++i) {
            buf.push(QSample{{rng.uniform(), rng.uniform()},
                             static_cast<std::size_t>(rng.below(4)),
                             rng.uniform(-1, 1),
                             {rng.uniform(), rng.uniform()},
                             0.9,
                             i % 7 == 0});
        }
        for (int i = 0; i < 30; ++i) g4rl::q_update(q, buf, rng);
        return q.online();
    };
    CHECK(run() == run());
}

TEST_CASE("an underfilled buffer triggers no update") {
    Rng rng(8);
    QLearner q(small_config(), rng);
    ReplayBuffer<QSample> buf(64);
    buf.push(QSample{{0, 0}, 0, 0, {0, 0}, 0.9, false});
    CHECK_FALSE(g4rl::q_update(q, buf, rng).has_value());
    CHECK(q.updates() == 0);
}

TEST_CASE("target network syncs on schedule") {
    Rng rng(9);
    auto c = small_config();
    c.target_sync_period = 3;
    QLearner q(c, rng);
    QSample s{{0.2, 0.2}, 0, 1.0, {0.2, 0.2}, 0.5, false};
    std::vector<const QSample*> batch{&s};
    q.update(batch);
    CHECK_FALSE(q.target() == q.online());
    q.update(batch);
    q.update(batch);
    CHECK(q.target() == q.online());
}

TEST_CASE("malformed samples are rejected") {
    Rng rng(10);
    QLearner q(small_config(), rng);
    QSample bad_action{{0, 0}, 9, 0, {0, 0}, 0.9, false};
    std::vector<const QSample*> batch{&bad_action};
    CHECK_THROWS_AS(q.update(batch), g4rl::ShapeError);
    CHECK_THROWS_AS(q.q_values(std::vector<double>{1.0}), g4rl::ShapeError);
    CHECK_THROWS_AS(q.update(std::vector<const QSample*>{}), g4rl::PreconditionError);
}
