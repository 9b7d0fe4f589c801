#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "algopricing/agent.hpp"
#include "algopricing/environment.hpp"
#include "algopricing/errors.hpp"
#include "algopricing/exploration.hpp"
#include "algopricing/policy_eval.hpp"
#include "algopricing/qtable.hpp"
#include "algopricing/reward.hpp"
#include "generators.hpp"

using namespace algopricing;

TEST(Exploration, Schedule) {
    EXPECT_EQ(epsilon(1e-5, 0), 1.0);
    EXPECT_EQ(epsilon(0.3, 0), 1.0);
    EXPECT_NEAR(epsilon(1e-5, 100000), 0.3678794412, 1e-9);
    for (std::uint64_t t : {0ull, 10ull, 1000ull, 123456ull}) {
        EXPECT_LT(epsilon(1e-4, t + 1), epsilon(1e-4, t));
    }
}

TEST(Exploration, GreedyChoiceAndTies) {
    Rng rng(31);
    const std::vector<double> q{0.1, 0.9, 0.3};
    EXPECT_EQ(select_action(q, 0.0, rng), 1u);
    EXPECT_EQ(argmax(std::vector<double>{2.0, 5.0, 5.0, 1.0}), 1u);
    EXPECT_THROW(argmax(std::vector<double>{}), DomainError);
}

TEST(Exploration, ArgmaxInvariantUnderConstantShift) {
    Rng rng(32);
    for (int trial = 0; trial < 1000; ++trial) {
        auto q = testgen::vector(rng, testgen::int_in(rng, 1, 20), -5.0, 5.0);
        const std::size_t before = argmax(q);
        const double c = testgen::real_in(rng, -100.0, 100.0);
        for (double& v : q) {
            v += c;
        }
        // Shifting can merge values that differed by less than an ulp; only
        // compare when the best value is clearly separated.
        std::vector<double> sorted = q;
        std::sort(sorted.rbegin(), sorted.rend());
        if (sorted.size() > 1 && sorted[0] - sorted[1] < 1e-9) {
            continue;
        }
        ASSERT_EQ(argmax(q), before);
    }
}

TEST(Exploration, PureExplorationIsUniform) {
    // Chi-squared goodness of fit, 14 degrees of freedom; 36.12 is the
    // 0.999 quantile.
    Rng rng(33);
    const std::vector<double> q(15, 0.0);
    std::vector<double> counts(15, 0.0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        counts[select_action(q, 1.0, rng)] += 1.0;
    }
    double chi2 = 0.0;
    const double expected = n / 15.0;
    for (double c : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    EXPECT_LT(chi2, 36.12);
}

TEST(QUpdate, HandValue) {
    QTable t(4, 2, 0.0);
    t.at(0, 1) = 0.5;
    t.at(3, 0) = 2.0;
    t.at(3, 1) = -1.0;
    AgentHyperparams hp;
    hp.alpha = 0.1;
    hp.gamma = 0.95;
    const Transition tr{0, {1}, 1.0, 3};
    EXPECT_NEAR(q_update(t, tr, hp), 0.74, 1e-12);
    EXPECT_NEAR(t.at(0, 1), 0.74, 1e-12);
}

TEST(QUpdate, MyopicFullStepStoresTheReward) {
    QTable t(2, 3, 7.0);
    AgentHyperparams hp;
    hp.alpha = 1.0;
    hp.gamma = 0.0;
    EXPECT_EQ(q_update(t, Transition{1, {2}, -0.375, 0}, hp), -0.375);
}

TEST(QUpdate, UsesTheAgentsOwnAction) {
    QTable t(1, 3, 0.0);
    AgentHyperparams hp;
    hp.alpha = 1.0;
    hp.gamma = 0.0;
    q_update(t, Transition{0, {0, 2}, 1.0, 0}, hp, 1);
    EXPECT_EQ(t.at(0, 2), 1.0);
    EXPECT_EQ(t.at(0, 0), 0.0);
}

TEST(QUpdate, ValidatesHyperparameters) {
    AgentHyperparams hp;
    hp.alpha = 0.0;
    EXPECT_THROW(hp.validate(), ParameterError);
    hp = {};
    hp.gamma = 1.0;
    EXPECT_THROW(hp.validate(), ParameterError);
    hp = {};
    hp.beta = 0.0;
    EXPECT_THROW(hp.validate(), ParameterError);
    QTable t(1, 1);
    EXPECT_THROW(q_update(t, Transition{0, {0}, NAN, 0}, AgentHyperparams{}), DomainError);
}

TEST(QUpdate, BoundedOverManyUpdates) {
    // Entries stay inside [min(r_min/(1-g), init), max(r_max/(1-g), init)].
    Rng rng(34);
    QTable t(25, 5);
    t.fill_uniform(-1.0, 1.0, rng);
    AgentHyperparams hp;
    hp.alpha = 0.3;
    hp.gamma = 0.9;
    const double lo = std::min(-2.0 / 0.1, -1.0);
    const double hi = std::max(3.0 / 0.1, 1.0);
    for (int i = 0; i < 1000000; ++i) {
        const Transition tr{uniform_index(rng, 25), {uniform_index(rng, 5)},
                            testgen::real_in(rng, -2.0, 3.0), uniform_index(rng, 25)};
        const double v = q_update(t, tr, hp);
        ASSERT_GE(v, lo);
        ASSERT_LE(v, hi);
    }
}

TEST(QTable, SnapshotRoundTrip) {
    Rng rng(35);
    QTable t(9, 4);
    t.fill_uniform(-3.0, 3.0, rng);
    std::stringstream buf;
    t.save(buf);
    EXPECT_EQ(QTable::load(buf), t);
    std::stringstream bad("algopricing-qtable 1\n2 2\n1 2 3\n");
    EXPECT_THROW(QTable::load(bad), ParameterError);
}

TEST(Reward, Shaping) {
    const RewardSpec selfish{};
    EXPECT_EQ(shape_reward(selfish, 0.2, std::vector<double>{0.3}), 0.2);
    const RewardSpec joint{1.0};
    EXPECT_NEAR(shape_reward(joint, 0.2, std::vector<double>{0.3}), 0.5, 1e-15);
    // Linear in the weight.
    const std::vector<double> others{0.3, 0.1};
    const double r0 = shape_reward(RewardSpec{0.0}, 0.2, others);
    const double r1 = shape_reward(RewardSpec{0.5}, 0.2, others);
    const double r2 = shape_reward(RewardSpec{1.0}, 0.2, others);
    EXPECT_NEAR(r1 - r0, r2 - r1, 1e-15);
    EXPECT_NEAR(shape_reward_for(RewardSpec{0.5}, std::vector<double>{0.2, 0.3, 0.1}, 0), r1,
                1e-15);
    EXPECT_THROW((RewardSpec{-0.1}.validate()), ParameterError);
}

TEST(TabularAgent, ActsGreedilyWithoutExploration) {
    TabularAgent agent(0, 2, 3, AgentHyperparams{});
    QTable t(9, 3, 0.0);
    t.at(4, 2) = 1.0;
    agent.set_table(t);
    MemoryState s(2, 1, 3);
    s.push(JointAction{1, 1}); // encodes to 4
    Rng rng(36);
    EXPECT_EQ(agent.act(s, rng, false), 2u);
    EXPECT_EQ(agent.greedy_action(s), 2u);
    EXPECT_EQ(agent.steps(), 0u);
}

TEST(TabularAgent, LearnFlagsGreedyChanges) {
    AgentHyperparams hp;
    hp.alpha = 1.0;
    hp.gamma = 0.0;
    TabularAgent agent(1, 2, 2, hp);
    agent.set_table(QTable(4, 2, 0.0));
    MemoryState s(2, 1, 2);
    s.push(JointAction{0, 0});
    Rng rng(37);
    agent.learn(s, JointAction{0, 1}, 1.0, s, rng);
    EXPECT_TRUE(agent.greedy_changed());
    agent.learn(s, JointAction{0, 1}, 1.0, s, rng);
    EXPECT_FALSE(agent.greedy_changed());
    agent.freeze();
    agent.learn(s, JointAction{0, 0}, 5.0, s, rng);
    EXPECT_EQ(agent.table().at(0, 0), 0.0);
}

TEST(TabularAgent, RejectsMismatchedSnapshot) {
    TabularAgent agent(0, 2, 3, AgentHyperparams{});
    EXPECT_THROW(agent.set_table(QTable(4, 3)), ParameterError);
}

TEST(StationaryPolicy, TitForTatCopiesTheRival) {
    auto tft = StationaryPolicyAgent::tit_for_tat(0, 2);
    MemoryState s(2, 1, 2);
    Rng rng(38);
    s.push(JointAction{0, 1});
    EXPECT_EQ(tft.act(s, rng, true), 1u);
    s.push(JointAction{1, 0});
    EXPECT_EQ(tft.act(s, rng, true), 0u);
}

namespace {

StationaryPolicy constant_policy(std::size_t action) {
    return deterministic_policy(std::vector<std::size_t>(4, action), 2);
}

} // namespace

TEST(PolicyOracle, GeometricSeriesAnchors) {
    const Environment pd = Environment::prisoners_dilemma(PayoffMatrix{});
    const std::vector<StationaryPolicy> defect{constant_policy(1), constant_policy(1)};
    const std::vector<StationaryPolicy> coop{constant_policy(0), constant_policy(0)};
    for (double v : policy_value_oracle(pd, defect, 0, 0.95, 1e-12).values) {
        EXPECT_NEAR(v, -40.0, 1e-9);
    }
    for (double v : policy_value_oracle(pd, coop, 1, 0.95, 1e-12).values) {
        EXPECT_NEAR(v, -20.0, 1e-9);
    }
}

TEST(PolicyOracle, MyopicValueIsTheStageReward) {
    const Environment pd = Environment::prisoners_dilemma(PayoffMatrix{});
    // Agent 0 plays tit-for-tat, agent 1 always defects.
    std::vector<std::size_t> tft(4);
    for (std::size_t s = 0; s < 4; ++s) {
        tft[s] = s / 2; // rival's last action
    }
    const std::vector<StationaryPolicy> pols{deterministic_policy(tft, 2), constant_policy(1)};
    const auto v = policy_value_oracle(pd, pols, 0, 0.0, 1e-12).values;
    for (std::size_t s = 0; s < 4; ++s) {
        const std::size_t a0 = s / 2;
        EXPECT_EQ(v[s], pd_payoff(PayoffMatrix{}, a0, 1).first);
    }
}

TEST(PolicyOracle, MatchesClosedFormAgainstTitForTat) {
    // Always-cooperate against tit-for-tat: -20 after cooperating, and
    // -3 + 0.95 * (-20) = -22 after defecting.
    const Environment pd = Environment::prisoners_dilemma(PayoffMatrix{});
    std::vector<std::size_t> tft(4);
    for (std::size_t s = 0; s < 4; ++s) {
        tft[s] = s % 2; // agent 1 copies agent 0
    }
    const std::vector<StationaryPolicy> pols{constant_policy(0), deterministic_policy(tft, 2)};
    const auto v = policy_value_oracle(pd, pols, 0, 0.95, 1e-12).values;
    EXPECT_NEAR(v[0], -20.0, 1e-9);
    EXPECT_NEAR(v[2], -20.0, 1e-9);
    EXPECT_NEAR(v[1], -22.0, 1e-9);
    EXPECT_NEAR(v[3], -22.0, 1e-9);
}

TEST(PolicyOracle, SerialAndParallelAgree) {
    const MarketParams params = MarketParams::symmetric(2);
    const Environment mk = Environment::market(params, build_grid(params));
    Rng rng(39);
    std::vector<StationaryPolicy> pols(2, StationaryPolicy(225, std::vector<double>(15)));
    for (auto& p : pols) {
        for (auto& row : p) {
            double total = 0.0;
            for (double& x : row) {
                x = uniform01(rng);
                total += x;
            }
            for (double& x : row) {
                x /= total;
            }
        }
    }
    const auto a = policy_value_oracle(mk, pols, 0, 0.9, 1e-12, Execution::serial);
    const auto b = policy_value_oracle(mk, pols, 0, 0.9, 1e-12, Execution::parallel);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.sweeps, b.sweeps);
}

TEST(PolicyOracle, RejectsMalformedPolicies) {
    const Environment pd = Environment::prisoners_dilemma(PayoffMatrix{});
    std::vector<StationaryPolicy> pols{constant_policy(0), constant_policy(0)};
    pols[1][2] = {0.7, 0.7};
    EXPECT_THROW(policy_value_oracle(pd, pols, 0, 0.9, 1e-9), DomainError);
    EXPECT_THROW(policy_value_oracle(pd, std::vector<StationaryPolicy>{constant_policy(0)}, 0, 0.9,
                                     1e-9),
                 DomainError);
}
