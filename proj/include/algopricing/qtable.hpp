#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "algopricing/rng.hpp"
#include "algopricing/state_codec.hpp"

namespace algopricing {

struct AgentHyperparams {
    double alpha = 0.125;     // learning rate
    double gamma = 0.95;      // discount factor
    double beta = 1e-5;       // exploration decay
    double q_init_low = 0.0;  // uniform initialization range
    double q_init_high = 1.0;
    std::size_t memory_len = 1;

    void validate() const;
    friend bool operator==(const AgentHyperparams&, const AgentHyperparams&) = default;
};

// One experience tuple on tabular (encoded) states.
struct Transition {
    std::uint64_t state = 0;
    JointAction joint_actions;
    double reward = 0.0;
    std::uint64_t next_state = 0;
};

class QTable {
public:
    QTable() = default;
    QTable(std::size_t n_states, std::size_t n_actions, double fill = 0.0);

    // Table over joint-action memories: n_actions^(n_agents * memory_len) states.
    static QTable for_memory(std::size_t n_agents, std::size_t memory_len, std::size_t n_actions);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    std::size_t size() const { return values_.size(); }

    double at(std::size_t state, std::size_t action) const;
    double& at(std::size_t state, std::size_t action);
    std::span<const double> row(std::size_t state) const;
    std::span<double> row(std::size_t state);
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    void fill_uniform(double lo, double hi, Rng& rng);

    // Text snapshot: "algopricing-qtable 1", dimensions, then row-major values.
    void save(std::ostream& out) const;
    static QTable load(std::istream& in);
    void save(const std::string& path) const;
    static QTable load(const std::string& path);

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    void check(std::size_t state, std::size_t action) const;

    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<double> values_;
};

// q(s,a) += alpha * (r + gamma * max_a' q(s',a') - q(s,a)) for a = own action
// of agent `agent` in the transition. Returns the new entry value.
double q_update(QTable& table, const Transition& tr, const AgentHyperparams& hp,
                std::size_t agent = 0);

} // namespace algopricing
