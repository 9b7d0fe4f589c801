#include <gtest/gtest.h>

#include "algopricing/dqn_agent.hpp"
#include "algopricing/errors.hpp"
#include "algopricing/exploration.hpp"
#include "algopricing/replay.hpp"

using namespace algopricing;

namespace {

Experience tagged(double reward) { return Experience{{0.0}, 0, reward, {0.0}}; }

DualReplay filled(const DualBufferConfig& cfg) {
    DualReplay d(cfg);
    for (int i = 0; i < 50; ++i) {
        d.offline().add(tagged(-1.0));
        d.online().add(tagged(1.0));
    }
    return d;
}

} // namespace

TEST(ReplayBuffer, FifoOverwrite) {
    ReplayBuffer b(3);
    for (int i = 0; i < 5; ++i) {
        b.add(tagged(i));
    }
    EXPECT_EQ(b.size(), 3u);
    EXPECT_EQ(b.at(0).reward, 2.0);
    EXPECT_EQ(b.at(2).reward, 4.0);
    Rng rng(51);
    EXPECT_THROW(ReplayBuffer(2).sample(rng), DomainError);
    EXPECT_THROW(ReplayBuffer(0), ParameterError);
}

TEST(DualReplay, AllOnlineAtProbabilityOne) {
    const DualReplay d = filled(DualBufferConfig{});
    Rng rng(52);
    for (const auto& s : d.sample(256, 1.0, rng)) {
        EXPECT_TRUE(s.online);
        EXPECT_EQ(s.experience->reward, 1.0);
        EXPECT_EQ(s.weight, 1.0);
    }
}

TEST(DualReplay, OnlineFractionConcentrates) {
    const DualReplay d = filled(DualBufferConfig{});
    Rng rng(53);
    const auto batch = d.sample(10000, 0.5, rng);
    double online = 0.0;
    for (const auto& s : batch) {
        online += s.online ? 1.0 : 0.0;
        EXPECT_EQ(s.weight, s.online ? 1.0 : 0.5);
        EXPECT_EQ(s.experience->reward, s.online ? 1.0 : -1.0);
    }
    EXPECT_NEAR(online / 10000.0, 0.5, 0.02);
}

TEST(DualReplay, UnitOfflineWeightIsTheUnweightedMean) {
    DualBufferConfig cfg;
    cfg.offline_weight = 1.0;
    const DualReplay d = filled(cfg);
    Rng rng(54);
    for (const auto& s : d.sample(500, 0.3, rng)) {
        EXPECT_EQ(s.weight, 1.0);
    }
}

TEST(DualReplay, EmptyBuffers) {
    DualReplay d;
    Rng rng(55);
    EXPECT_THROW(d.sample(4, 0.5, rng), DomainError);
    d.offline().add(tagged(-1.0));
    for (const auto& s : d.sample(16, 1.0, rng)) {
        EXPECT_FALSE(s.online); // falls back to the non-empty buffer
    }
    EXPECT_THROW(d.sample(4, 1.5, rng), DomainError);
}

TEST(DualBufferConfig, Validation) {
    DualBufferConfig cfg;
    cfg.p_online_low = 0.95;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = {};
    cfg.offline_capacity = 0;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = {};
    cfg.profit_threshold_frac = 1.0;
    EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(SamplingController, OffWhenProfitsAreHigh) {
    SamplingController c(DualBufferConfig{}, 0.3);
    for (int i = 0; i < 500; ++i) {
        EXPECT_EQ(c.update(0.5), 0.2);
    }
}

TEST(SamplingController, OnWhenProfitsVanish) {
    SamplingController c(DualBufferConfig{}, 0.3);
    double p = 0.0;
    for (int i = 0; i < 100; ++i) {
        p = c.update(0.0);
    }
    EXPECT_EQ(p, 0.9);
    EXPECT_THROW(SamplingController(DualBufferConfig{}, 0.0), ParameterError);
}

TEST(SamplingController, StepDropFlipsWithinTheWindow) {
    // Profit at the incumbent-era level, then the rival undercuts and profit
    // falls to 60% of the baseline.
    const DualBufferConfig cfg;
    SamplingController c(cfg, 0.33);
    for (int i = 0; i < 300; ++i) {
        ASSERT_EQ(c.update(0.33), cfg.p_online_low);
    }
    std::size_t flipped = 0;
    for (std::size_t t = 1; t <= cfg.rolling_window; ++t) {
        if (c.update(0.2) == cfg.p_online_high) {
            flipped = t;
            break;
        }
    }
    EXPECT_GT(flipped, 0u);
    EXPECT_LE(flipped, cfg.rolling_window);
}

TEST(SamplingController, Hysteresis) {
    // Once high, the controller needs rolling_window consecutive recovered
    // windows before it switches back.
    DualBufferConfig cfg;
    cfg.rolling_window = 10;
    SamplingController c(cfg, 1.0);
    for (int i = 0; i < 10; ++i) {
        c.update(0.0);
    }
    ASSERT_TRUE(c.high());
    int steps_to_low = 0;
    for (int i = 1; i <= 100 && c.high(); ++i) {
        c.update(1.0);
        steps_to_low = i;
    }
    EXPECT_FALSE(c.high());
    // The window mean first reaches 0.9 after 9 updates, then 10 recovered
    // windows are required.
    EXPECT_EQ(steps_to_low, 9 + 10 - 1);
}

TEST(SamplingController, StatelessFormAgrees) {
    DualBufferConfig cfg;
    cfg.rolling_window = 4;
    bool high = false;
    std::size_t streak = 0;
    EXPECT_EQ(update_sampling_probability(cfg, std::vector<double>{0, 0, 0, 0}, 1.0, high, streak),
              cfg.p_online_high);
    EXPECT_TRUE(high);
    EXPECT_EQ(update_sampling_probability(cfg, std::vector<double>{1, 1, 1, 1}, 1.0, high, streak),
              cfg.p_online_high);
    EXPECT_EQ(streak, 1u);
}

TEST(DualBufferAgent, OfflinePhaseThenOnline) {
    AgentHyperparams hp;
    hp.memory_len = 2;
    DqnConfig cfg;
    cfg.hidden = {8};
    Rng rng(56);
    DualBufferAgent agent(1, 2, {0.0, 0.5, 1.0}, hp, cfg, DualBufferConfig{}, rng);
    EXPECT_THROW(agent.offline_baseline(), ConfigError);
    EXPECT_THROW(agent.pretrain(1, rng), ConfigError);
    MemoryState s(2, 2, 3);
    s.push(JointAction{1, 1});
    s.push(JointAction{1, 1});
    for (int i = 0; i < 40; ++i) {
        agent.observe_offline(s, 1, 0.25, 0.25, s);
    }
    EXPECT_EQ(agent.offline_baseline(), 0.25);
    agent.pretrain(10, rng);
    EXPECT_EQ(agent.updates(), 10u);
    agent.begin_online();
    EXPECT_EQ(agent.p_online(), 0.2);
    agent.advance_exploration(100);
    EXPECT_EQ(agent.steps(), 100u);
    agent.act(s, rng, true);
    EXPECT_NEAR(agent.last_epsilon(), epsilon(hp.beta, 100), 1e-15);
}
