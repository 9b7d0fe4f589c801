#include "algopricing/policy_eval.hpp"

#include <cmath>
#include <string>

#include "algopricing/errors.hpp"
#include "algopricing/state_codec.hpp"

namespace algopricing {

namespace {
constexpr std::uint64_t max_states = 10000;
constexpr std::size_t max_sweeps = 1000000;
} // namespace

StationaryPolicy deterministic_policy(std::span<const std::size_t> action_of_state,
                                      std::size_t n_actions) {
    StationaryPolicy policy(action_of_state.size(), std::vector<double>(n_actions, 0.0));
    for (std::size_t s = 0; s < action_of_state.size(); ++s) {
        if (action_of_state[s] >= n_actions) {
            throw DomainError("deterministic_policy: action out of range");
        }
        policy[s][action_of_state[s]] = 1.0;
    }
    return policy;
}

PolicyValues policy_value_oracle(const Environment& env, std::span<const StationaryPolicy> policies,
                                 std::size_t agent, double gamma, double tol, Execution exec) {
    const std::size_t k = env.n_agents();
    const std::size_t n = env.n_actions();
    const std::uint64_t states = state_count(k, 1, n);
    if (states > max_states) {
        throw UnsupportedError("policy_value_oracle: " + std::to_string(states) +
                               " states exceed the enumeration limit");
    }
    if (policies.size() != k || agent >= k) {
        throw DomainError("policy_value_oracle: need one policy per agent");
    }
    if (!(gamma >= 0.0 && gamma < 1.0) || !(tol > 0.0)) {
        throw ParameterError("policy_value_oracle: need 0 <= gamma < 1 and tol > 0");
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (policies[i].size() != states) {
            throw DomainError("policy " + std::to_string(i) + " does not cover every state");
        }
        for (const auto& row : policies[i]) {
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0)) {
                    throw DomainError("policy probabilities must be non-negative");
                }
                sum += p;
            }
            if (row.size() != n || std::abs(sum - 1.0) > 1e-9) {
                throw DomainError("policy rows must be distributions over the action set");
            }
        }
    }

    // The next state after joint action j is j itself (memory 1), so every
    // state shares the same n^K successors, weighted by the product of policies.
    kernels::SparseTransitions tr;
    tr.row_begin.reserve(states + 1);
    std::vector<std::size_t> joint(k);
    std::vector<double> payoff(k);
    tr.row_begin.push_back(0);
    for (std::uint64_t s = 0; s < states; ++s) {
        for (std::uint64_t j = 0; j < states; ++j) {
            std::uint64_t rest = j;
            double prob = 1.0;
            for (std::size_t i = 0; i < k; ++i) {
                joint[i] = static_cast<std::size_t>(rest % n);
                rest /= n;
                prob *= policies[i][s][joint[i]];
            }
            if (prob == 0.0) {
                continue;
            }
            env.payoffs(joint, payoff);
            tr.next.push_back(static_cast<std::size_t>(j));
            tr.prob.push_back(prob);
            tr.reward.push_back(payoff[agent]);
        }
        tr.row_begin.push_back(tr.next.size());
    }

    PolicyValues out;
    out.values.assign(states, 0.0);
    std::vector<double> next(states);
    const double stop = tol * (1.0 - gamma);
    for (out.sweeps = 1; out.sweeps <= max_sweeps; ++out.sweeps) {
        const double delta = kernels::jacobi_sweep(tr, gamma, out.values, next, exec);
        out.values.swap(next);
        if (delta < stop) {
            return out;
        }
    }
    throw NumericalError("policy_value_oracle: no convergence after " +
                         std::to_string(max_sweeps) + " sweeps");
}

} // namespace algopricing
