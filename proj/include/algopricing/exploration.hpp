#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "algopricing/rng.hpp"

namespace algopricing {

// Exploration probability exp(-beta * t).
double epsilon(double beta, std::uint64_t t);

// Index of the largest value, lowest index on ties. Throws DomainError when empty.
std::size_t argmax(std::span<const double> values);

// Epsilon-greedy: uniform random action with probability eps, greedy otherwise.
// Always consumes exactly one uniform draw for the coin, plus one for the random action.
std::size_t select_action(std::span<const double> values, double eps, Rng& rng);

} // namespace algopricing
