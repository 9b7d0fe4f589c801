#pragma once

// Iterated two-player prisoner's dilemma.

#include <array>
#include <cstddef>
#include <span>
#include <utility>

#include "algopricing/state_codec.hpp"

namespace algopricing {

enum PdAction : std::size_t { cooperate = 0, defect = 1 };

struct PayoffMatrix {
    double temptation = 0.0;   // defect against a cooperator
    double cooperation = -1.0; // mutual cooperation
    double defection = -2.0;   // mutual defection
    double loss = -3.0;        // cooperate against a defector

    // Requires temptation > cooperation > defection > loss.
    void validate() const;

    friend bool operator==(const PayoffMatrix&, const PayoffMatrix&) = default;
};

// (reward of player i, reward of player j). Throws DomainError on an action outside {0, 1}.
std::pair<double, double> pd_payoff(const PayoffMatrix& matrix, std::size_t action_i,
                                    std::size_t action_j);

// Two-player, two-action memory of the last L joint actions.
using MatrixGameState = MemoryState;

inline MatrixGameState initial_pd_state(std::size_t memory_len = 1) {
    return MatrixGameState(2, memory_len, 2);
}

struct MatrixStep {
    MatrixGameState next;
    std::array<double, 2> rewards{};
};

MatrixStep step(const PayoffMatrix& matrix, const MatrixGameState& state,
                std::span<const std::size_t> actions);

} // namespace algopricing
