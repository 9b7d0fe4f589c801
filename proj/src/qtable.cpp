#include "algopricing/qtable.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>

#include "algopricing/errors.hpp"

namespace algopricing {

namespace {
constexpr const char* qtable_magic = "algopricing-qtable";
constexpr int qtable_version = 1;
constexpr std::uint64_t max_table_entries = std::uint64_t{1} << 28;
} // namespace

void AgentHyperparams::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ParameterError("alpha must lie in (0, 1]");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw ParameterError("gamma must lie in [0, 1)");
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw ParameterError("beta must be positive");
    }
    if (!(q_init_low <= q_init_high) || !std::isfinite(q_init_low) || !std::isfinite(q_init_high)) {
        throw ParameterError("q_init_low must not exceed q_init_high");
    }
    if (memory_len == 0) {
        throw ParameterError("memory_len must be positive");
    }
}

QTable::QTable(std::size_t n_states, std::size_t n_actions, double fill)
    : n_states_(n_states), n_actions_(n_actions) {
    if (n_states == 0 || n_actions == 0) {
        throw ParameterError("QTable dimensions must be positive");
    }
    if (static_cast<std::uint64_t>(n_states) > max_table_entries / n_actions) {
        throw ParameterError("QTable of " + std::to_string(n_states) + " x " +
                             std::to_string(n_actions) + " entries is too large");
    }
    values_.assign(n_states * n_actions, fill);
}

QTable QTable::for_memory(std::size_t n_agents, std::size_t memory_len, std::size_t n_actions) {
    const std::uint64_t states = state_count(n_agents, memory_len, n_actions);
    if (states > max_table_entries) {
        throw ParameterError("tabular state space of " + std::to_string(states) +
                             " states is too large");
    }
    return QTable(static_cast<std::size_t>(states), n_actions);
}

void QTable::check(std::size_t state, std::size_t action) const {
    if (state >= n_states_ || action >= n_actions_) {
        throw DomainError("QTable index (" + std::to_string(state) + ", " +
                          std::to_string(action) + ") out of range");
    }
}

double QTable::at(std::size_t state, std::size_t action) const {
    check(state, action);
    return values_[state * n_actions_ + action];
}

double& QTable::at(std::size_t state, std::size_t action) {
    check(state, action);
    return values_[state * n_actions_ + action];
}

std::span<const double> QTable::row(std::size_t state) const {
    check(state, 0);
    return std::span<const double>(values_).subspan(state * n_actions_, n_actions_);
}

std::span<double> QTable::row(std::size_t state) {
    check(state, 0);
    return std::span<double>(values_).subspan(state * n_actions_, n_actions_);
}

void QTable::fill_uniform(double lo, double hi, Rng& rng) {
    for (double& v : values_) {
        v = uniform(rng, lo, hi);
    }
}

void QTable::save(std::ostream& out) const {
    out << qtable_magic << ' ' << qtable_version << '\n'
        << n_states_ << ' ' << n_actions_ << '\n'
        << std::setprecision(17);
    for (std::size_t s = 0; s < n_states_; ++s) {
        for (std::size_t a = 0; a < n_actions_; ++a) {
            out << (a ? " " : "") << values_[s * n_actions_ + a];
        }
        out << '\n';
    }
}

QTable QTable::load(std::istream& in) {
    std::string magic;
    int version = 0;
    std::size_t states = 0;
    std::size_t actions = 0;
    if (!(in >> magic >> version) || magic != qtable_magic) {
        throw ParameterError("not a Q-table snapshot");
    }
    if (version != qtable_version) {
        throw ParameterError("unsupported Q-table snapshot version " + std::to_string(version));
    }
    if (!(in >> states >> actions)) {
        throw ParameterError("Q-table snapshot: missing dimensions");
    }
    QTable table(states, actions);
    for (double& v : table.values_) {
        if (!(in >> v)) {
            throw ParameterError("Q-table snapshot: truncated values");
        }
        if (!std::isfinite(v)) {
            throw ParameterError("Q-table snapshot: non-finite value");
        }
    }
    return table;
}

void QTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write Q-table snapshot to " + path);
    }
    save(out);
}

QTable QTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open Q-table snapshot " + path);
    }
    return load(in);
}

double q_update(QTable& table, const Transition& tr, const AgentHyperparams& hp, std::size_t agent) {
    if (agent >= tr.joint_actions.size()) {
        throw DomainError("q_update: agent index out of range");
    }
    if (!std::isfinite(tr.reward)) {
        throw DomainError("q_update: non-finite reward");
    }
    const std::size_t action = tr.joint_actions[agent];
    double& entry = table.at(static_cast<std::size_t>(tr.state), action);
    const auto next = table.row(static_cast<std::size_t>(tr.next_state));
    const double best_next = *std::max_element(next.begin(), next.end());
    entry += hp.alpha * (tr.reward + hp.gamma * best_next - entry);
    return entry;
}

} // namespace algopricing
