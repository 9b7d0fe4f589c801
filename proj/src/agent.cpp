#include "algopricing/agent.hpp"

#include "algopricing/errors.hpp"
#include "algopricing/exploration.hpp"

namespace algopricing {

TabularAgent::TabularAgent(std::size_t index, std::size_t n_agents, std::size_t n_actions,
                           const AgentHyperparams& hp)
    : index_(index), n_agents_(n_agents), hp_(hp),
      table_(QTable::for_memory(n_agents, hp.memory_len, n_actions)) {
    hp_.validate();
    if (index >= n_agents) {
        throw ParameterError("agent index out of range");
    }
}

void TabularAgent::set_table(QTable table) {
    if (table.n_states() != table_.n_states() || table.n_actions() != table_.n_actions()) {
        throw ParameterError("Q-table snapshot has dimensions " + std::to_string(table.n_states()) +
                             " x " + std::to_string(table.n_actions()) + ", agent expects " +
                             std::to_string(table_.n_states()) + " x " +
                             std::to_string(table_.n_actions()));
    }
    table_ = std::move(table);
}

std::size_t TabularAgent::act(const MemoryState& state, Rng& rng, bool explore) {
    const auto s = static_cast<std::size_t>(encode(state, hp_.memory_len));
    if (!explore || frozen_) {
        last_epsilon_ = 0.0;
        return argmax(table_.row(s));
    }
    last_epsilon_ = epsilon(hp_.beta, steps_++);
    return select_action(table_.row(s), last_epsilon_, rng);
}

std::size_t TabularAgent::greedy_action(const MemoryState& state) const {
    return argmax(table_.row(static_cast<std::size_t>(encode(state, hp_.memory_len))));
}

void TabularAgent::learn(const MemoryState& state, std::span<const std::size_t> joint,
                         double reward, const MemoryState& next, Rng& /*rng*/) {
    greedy_changed_ = false;
    if (frozen_) {
        return;
    }
    Transition tr;
    tr.state = encode(state, hp_.memory_len);
    tr.joint_actions.assign(joint.begin(), joint.end());
    tr.reward = reward;
    tr.next_state = encode(next, hp_.memory_len);
    const auto s = static_cast<std::size_t>(tr.state);
    const std::size_t before = argmax(table_.row(s));
    q_update(table_, tr, hp_, index_);
    greedy_changed_ = argmax(table_.row(s)) != before;
}

std::vector<std::size_t> TabularAgent::greedy_policy() const {
    std::vector<std::size_t> policy(table_.n_states());
    for (std::size_t s = 0; s < policy.size(); ++s) {
        policy[s] = argmax(table_.row(s));
    }
    return policy;
}

std::vector<double> TabularAgent::greedy_values() const {
    std::vector<double> values(table_.n_states());
    for (std::size_t s = 0; s < values.size(); ++s) {
        values[s] = table_.at(s, argmax(table_.row(s)));
    }
    return values;
}

StationaryPolicyAgent::StationaryPolicyAgent(std::vector<std::size_t> action_of_state,
                                             std::size_t memory_len)
    : action_of_state_(std::move(action_of_state)), memory_len_(memory_len) {
    if (action_of_state_.empty() || memory_len_ == 0) {
        throw ParameterError("stationary policy needs at least one state and memory >= 1");
    }
}

StationaryPolicyAgent StationaryPolicyAgent::constant(std::size_t n_states, std::size_t action) {
    return StationaryPolicyAgent(std::vector<std::size_t>(n_states, action));
}

StationaryPolicyAgent StationaryPolicyAgent::tit_for_tat(std::size_t own_index,
                                                         std::size_t n_actions) {
    const std::size_t other = 1 - own_index;
    std::vector<std::size_t> policy(n_actions * n_actions);
    for (std::uint64_t s = 0; s < policy.size(); ++s) {
        policy[s] = decode(s, 2, 1, n_actions).action(0, other);
    }
    return StationaryPolicyAgent(std::move(policy));
}

std::size_t StationaryPolicyAgent::act(const MemoryState& state, Rng& /*rng*/, bool /*explore*/) {
    return greedy_action(state);
}

std::size_t StationaryPolicyAgent::greedy_action(const MemoryState& state) const {
    const auto s = encode(state, memory_len_);
    if (s >= action_of_state_.size()) {
        throw DomainError("stationary policy: state index out of range");
    }
    return action_of_state_[s];
}

} // namespace algopricing
