#include "algopricing/reward.hpp"

#include <cmath>

#include "algopricing/errors.hpp"

namespace algopricing {

void RewardSpec::validate() const {
    if (!(opponent_weight >= 0.0) || !std::isfinite(opponent_weight)) {
        throw ParameterError("opponent_weight must be a finite non-negative number");
    }
}

double shape_reward(const RewardSpec& spec, double own_profit, std::span<const double> others) {
    double sum = 0.0;
    for (double p : others) {
        sum += p;
    }
    return own_profit + spec.opponent_weight * sum;
}

double shape_reward_for(const RewardSpec& spec, std::span<const double> profits, std::size_t agent) {
    // Rival profits only enter when the objective asks for them.
    if (spec.opponent_weight == 0.0) {
        return profits[agent];
    }
    double others = 0.0;
    for (std::size_t j = 0; j < profits.size(); ++j) {
        if (j != agent) {
            others += profits[j];
        }
    }
    return profits[agent] + spec.opponent_weight * others;
}

} // namespace algopricing
