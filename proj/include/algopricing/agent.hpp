#pragma once

// Interface the experiment harness drives once per period, and the tabular
// Q-learning agent.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "algopricing/qtable.hpp"
#include "algopricing/rng.hpp"
#include "algopricing/state_codec.hpp"

namespace algopricing {

class Agent {
public:
    virtual ~Agent() = default;

    // Proposed action in `state`. With `explore` the agent follows its
    // exploration schedule and advances its clock; otherwise it acts greedily.
    virtual std::size_t act(const MemoryState& state, Rng& rng, bool explore) = 0;
    virtual std::size_t greedy_action(const MemoryState& state) const = 0;

    // Update from the joint action that was actually played.
    virtual void learn(const MemoryState& state, std::span<const std::size_t> joint,
                       double reward, const MemoryState& next, Rng& rng) = 0;

    // Whether the last learn() changed the greedy action of any visited state.
    virtual bool greedy_changed() const = 0;

    // Exploration probability used by the last act().
    virtual double last_epsilon() const = 0;
    virtual std::optional<double> p_online() const { return std::nullopt; }
    // Realized own profit of the period, before learn(). Agents that track
    // profits (the dual-buffer controller) override this.
    virtual void record_profit(double /*own_profit*/) {}

    // Number of past joint actions the agent conditions on.
    virtual std::size_t memory_len() const = 0;
    virtual std::unique_ptr<Agent> clone() const = 0;
};

// Q-learning on a table indexed by the encoded joint-action memory.
class TabularAgent final : public Agent {
public:
    TabularAgent(std::size_t index, std::size_t n_agents, std::size_t n_actions,
                 const AgentHyperparams& hp);

    std::size_t act(const MemoryState& state, Rng& rng, bool explore) override;
    std::size_t greedy_action(const MemoryState& state) const override;
    void learn(const MemoryState& state, std::span<const std::size_t> joint, double reward,
               const MemoryState& next, Rng& rng) override;
    bool greedy_changed() const override { return greedy_changed_; }
    double last_epsilon() const override { return last_epsilon_; }
    std::size_t memory_len() const override { return hp_.memory_len; }
    std::unique_ptr<Agent> clone() const override { return std::make_unique<TabularAgent>(*this); }

    const QTable& table() const { return table_; }
    QTable& table() { return table_; }
    void set_table(QTable table);
    const AgentHyperparams& hyperparams() const { return hp_; }
    std::uint64_t steps() const { return steps_; }

    // Frozen agents act greedily and ignore learn().
    void freeze(bool frozen = true) { frozen_ = frozen; }
    bool frozen() const { return frozen_; }

    // Greedy action per encoded state.
    std::vector<std::size_t> greedy_policy() const;
    // max_a q(s, a) per encoded state.
    std::vector<double> greedy_values() const;

private:
    std::size_t index_;
    std::size_t n_agents_;
    AgentHyperparams hp_;
    QTable table_;
    std::uint64_t steps_ = 0;
    double last_epsilon_ = 1.0;
    bool greedy_changed_ = false;
    bool frozen_ = false;
};

// Deterministic stationary policy over memory-1 states: action_of_state[encode(s)].
class StationaryPolicyAgent final : public Agent {
public:
    explicit StationaryPolicyAgent(std::vector<std::size_t> action_of_state,
                                   std::size_t memory_len = 1);

    // Policies of the prisoner's dilemma used as fixed opponents.
    static StationaryPolicyAgent constant(std::size_t n_states, std::size_t action);
    // Copies the other player's last action (two-player games).
    static StationaryPolicyAgent tit_for_tat(std::size_t own_index, std::size_t n_actions);

    std::size_t act(const MemoryState& state, Rng& rng, bool explore) override;
    std::size_t greedy_action(const MemoryState& state) const override;
    void learn(const MemoryState&, std::span<const std::size_t>, double, const MemoryState&,
               Rng&) override {}
    bool greedy_changed() const override { return false; }
    double last_epsilon() const override { return 0.0; }
    std::size_t memory_len() const override { return memory_len_; }
    std::unique_ptr<Agent> clone() const override {
        return std::make_unique<StationaryPolicyAgent>(*this);
    }

    const std::vector<std::size_t>& policy() const { return action_of_state_; }

private:
    std::vector<std::size_t> action_of_state_;
    std::size_t memory_len_;
};

} // namespace algopricing
