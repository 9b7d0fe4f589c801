#pragma once

// Deep Q-learning agents on normalized price-history features: a plain DQN
// with uniform replay and a target network, and the dual-buffer variant that
// mixes an offline buffer of observed market history with a small online
// buffer under an adaptive sampling probability.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "algopricing/agent.hpp"
#include "algopricing/qtable.hpp"
#include "algopricing/replay.hpp"
#include "algopricing/value_net.hpp"

namespace algopricing {

struct DqnConfig {
    std::vector<std::size_t> hidden{64, 64};
    double learning_rate = 1e-3;
    Optimizer::Kind optimizer = Optimizer::Kind::adam;
    std::size_t batch_size = 32;
    std::size_t replay_capacity = 10000;
    std::size_t target_sync = 500;     // gradient updates between target copies
    std::size_t train_start = 32;      // replay size before the first update

    void validate() const;
    friend bool operator==(const DqnConfig&, const DqnConfig&) = default;
};

class DqnAgent : public Agent {
public:
    // `levels` maps each action to its normalized feature value. hp.alpha is
    // unused; hp.memory_len sets the feature history.
    DqnAgent(std::size_t index, std::size_t n_agents, std::vector<double> levels,
             const AgentHyperparams& hp, const DqnConfig& cfg, Rng& init_rng);

    std::size_t act(const MemoryState& state, Rng& rng, bool explore) override;
    std::size_t greedy_action(const MemoryState& state) const override;
    void learn(const MemoryState& state, std::span<const std::size_t> joint, double reward,
               const MemoryState& next, Rng& rng) override;
    bool greedy_changed() const override { return greedy_changed_; }
    double last_epsilon() const override { return last_epsilon_; }
    std::size_t memory_len() const override { return hp_.memory_len; }
    std::unique_ptr<Agent> clone() const override { return std::make_unique<DqnAgent>(*this); }

    std::vector<double> features(const MemoryState& state) const;
    std::vector<double> action_values(const MemoryState& state) const;

    const ValueNet& net() const { return net_; }
    ValueNet& net() { return net_; }
    const ValueNet& target_net() const { return target_; }
    void set_net(const ValueNet& net);
    const AgentHyperparams& hyperparams() const { return hp_; }
    const DqnConfig& config() const { return cfg_; }
    std::uint64_t steps() const { return steps_; }
    // Moves the exploration schedule forward as if n periods had been played.
    void advance_exploration(std::uint64_t n) { steps_ += n; }
    std::uint64_t updates() const { return updates_; }
    // Loss of the most recent gradient step (NaN before the first one).
    double last_loss() const { return last_loss_; }

    // Frozen agents act greedily and ignore learn().
    void freeze(bool frozen = true) { frozen_ = frozen; }

protected:
    // Runs one gradient step on `batch` and handles target synchronization.
    void train_on(std::span<const Experience* const> batch, std::span<const double> weights);
    Experience make_experience(const MemoryState& state, std::size_t action, double reward,
                               const MemoryState& next) const;
    void track_greedy(const MemoryState& state);

    std::size_t index_;
    std::size_t n_agents_;
    std::vector<double> levels_;
    AgentHyperparams hp_;
    DqnConfig cfg_;
    ValueNet net_;
    ValueNet target_;
    Optimizer optimizer_;
    std::uint64_t steps_ = 0;
    std::uint64_t updates_ = 0;
    double last_epsilon_ = 1.0;
    double last_loss_;
    bool greedy_changed_ = false;
    bool frozen_ = false;
    std::unordered_map<std::string, std::size_t> greedy_seen_;

private:
    ReplayBuffer replay_;
};

// DQN whose updates sample an offline buffer of observed market history and an
// online buffer of its own recent experience.
class DualBufferAgent final : public DqnAgent {
public:
    DualBufferAgent(std::size_t index, std::size_t n_agents, std::vector<double> levels,
                    const AgentHyperparams& hp, const DqnConfig& cfg,
                    const DualBufferConfig& dual, Rng& init_rng);

    // Offline phase: record a transition observed from this agent's seat.
    void observe_offline(const MemoryState& state, std::size_t action, double reward,
                         double own_profit, const MemoryState& next);
    // Gradient steps on the offline buffer alone.
    void pretrain(std::size_t n_updates, Rng& rng);
    // Mean own profit observed offline; the controller's baseline.
    double offline_baseline() const;
    // Starts the sampling controller with `baseline` (defaults to offline_baseline()).
    void begin_online(std::optional<double> baseline = std::nullopt);

    void learn(const MemoryState& state, std::span<const std::size_t> joint, double reward,
               const MemoryState& next, Rng& rng) override;
    // Feeds the realized own profit of the period to the controller.
    void record_profit(double own_profit) override;
    std::optional<double> p_online() const override { return p_online_; }
    std::unique_ptr<Agent> clone() const override {
        return std::make_unique<DualBufferAgent>(*this);
    }

    const DualReplay& buffers() const { return buffers_; }
    const SamplingController& controller() const { return controller_; }

private:
    DualReplay buffers_;
    SamplingController controller_;
    double offline_profit_sum_ = 0.0;
    std::size_t offline_count_ = 0;
    double p_online_ = 0.0;
};

} // namespace algopricing
