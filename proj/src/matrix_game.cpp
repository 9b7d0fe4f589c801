#include "algopricing/matrix_game.hpp"

#include <string>

#include "algopricing/errors.hpp"

namespace algopricing {

void PayoffMatrix::validate() const {
    if (!(temptation > cooperation && cooperation > defection && defection > loss)) {
        throw ParameterError(
            "payoffs must satisfy temptation > cooperation > defection > loss");
    }
}

std::pair<double, double> pd_payoff(const PayoffMatrix& m, std::size_t action_i,
                                    std::size_t action_j) {
    if (action_i > defect || action_j > defect) {
        throw DomainError("prisoner's dilemma actions must be 0 (cooperate) or 1 (defect), got (" +
                          std::to_string(action_i) + ", " + std::to_string(action_j) + ")");
    }
    if (action_i == cooperate) {
        return action_j == cooperate ? std::pair{m.cooperation, m.cooperation}
                                     : std::pair{m.loss, m.temptation};
    }
    return action_j == cooperate ? std::pair{m.temptation, m.loss}
                                 : std::pair{m.defection, m.defection};
}

MatrixStep step(const PayoffMatrix& matrix, const MatrixGameState& state,
                std::span<const std::size_t> actions) {
    if (actions.size() != 2) {
        throw DomainError("prisoner's dilemma step needs exactly two actions");
    }
    const auto [ri, rj] = pd_payoff(matrix, actions[0], actions[1]);
    MatrixStep out{state, {ri, rj}};
    out.next.push(actions);
    return out;
}

} // namespace algopricing
