#pragma once

#include <span>

namespace algopricing {

// Multi-objective reward: own profit plus a weight on the rivals' profits.
// opponent_weight = 0 is the selfish (adversarial) objective.
struct RewardSpec {
    double opponent_weight = 0.0;

    void validate() const;
    friend bool operator==(const RewardSpec&, const RewardSpec&) = default;
};

double shape_reward(const RewardSpec& spec, double own_profit, std::span<const double> others);

// Shaped reward of agent `agent` given every agent's profit.
double shape_reward_for(const RewardSpec& spec, std::span<const double> profits, std::size_t agent);

} // namespace algopricing
