#pragma once

// Exact evaluation of fixed stationary policies on a repeated game whose state
// is the last joint action. Serves as the reference for learned Q-values.

#include <cstddef>
#include <span>
#include <vector>

#include "algopricing/environment.hpp"
#include "algopricing/kernels.hpp"

namespace algopricing {

// probabilities[state][action] over memory-1 states (encoded joint actions).
using StationaryPolicy = std::vector<std::vector<double>>;

StationaryPolicy deterministic_policy(std::span<const std::size_t> action_of_state,
                                      std::size_t n_actions);

struct PolicyValues {
    std::vector<double> values; // v(s) per encoded state
    std::size_t sweeps = 0;
};

// Iterative policy evaluation of v(s) = sum_a pi(a|s) [r_agent(a) + gamma v(a)]
// until successive sweeps differ by less than tol * (1 - gamma). Throws
// UnsupportedError beyond 10^4 states and DomainError on malformed policies.
PolicyValues policy_value_oracle(const Environment& env, std::span<const StationaryPolicy> policies,
                                 std::size_t agent, double gamma, double tol,
                                 Execution exec = Execution::parallel);

} // namespace algopricing
