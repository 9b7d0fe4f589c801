#include "algopricing/state_codec.hpp"

#include <limits>

#include "algopricing/errors.hpp"

namespace algopricing {

MemoryState::MemoryState(std::size_t n_agents, std::size_t memory_len, std::size_t n_actions)
    : n_agents_(n_agents), memory_len_(memory_len), n_actions_(n_actions),
      actions_(n_agents * memory_len, 0) {
    if (n_agents == 0 || memory_len == 0 || n_actions == 0) {
        throw ParameterError("MemoryState: agents, memory length and actions must be positive");
    }
}

std::size_t MemoryState::slot(std::size_t lag) const {
    return (head_ + memory_len_ - lag) % memory_len_;
}

void MemoryState::push(std::span<const std::size_t> joint) {
    if (joint.size() != n_agents_) {
        throw DomainError("joint action has " + std::to_string(joint.size()) +
                          " entries, expected " + std::to_string(n_agents_));
    }
    for (std::size_t a : joint) {
        if (a >= n_actions_) {
            throw DomainError("action index " + std::to_string(a) + " out of range [0, " +
                              std::to_string(n_actions_) + ")");
        }
    }
    head_ = filled_ == 0 ? 0 : (head_ + 1) % memory_len_;
    std::copy(joint.begin(), joint.end(), actions_.begin() + static_cast<std::ptrdiff_t>(head_ * n_agents_));
    if (filled_ < memory_len_) {
        ++filled_;
    }
}

std::size_t MemoryState::action(std::size_t lag, std::size_t agent) const {
    if (lag >= filled_ || agent >= n_agents_) {
        throw DomainError("MemoryState::action: lag or agent out of range");
    }
    return actions_[slot(lag) * n_agents_ + agent];
}

JointAction MemoryState::joint(std::size_t lag) const {
    JointAction out(n_agents_);
    for (std::size_t i = 0; i < n_agents_; ++i) {
        out[i] = action(lag, i);
    }
    return out;
}

std::string MemoryState::key(std::size_t len) const {
    std::string k;
    k.reserve(len * n_agents_);
    for (std::size_t lag = 0; lag < len && lag < filled_; ++lag) {
        const std::size_t base = slot(lag) * n_agents_;
        for (std::size_t i = 0; i < n_agents_; ++i) {
            k.push_back(static_cast<char>(actions_[base + i] & 0xff));
        }
    }
    return k;
}

bool operator==(const MemoryState& a, const MemoryState& b) {
    if (a.n_agents_ != b.n_agents_ || a.memory_len_ != b.memory_len_ ||
        a.n_actions_ != b.n_actions_ || a.filled_ != b.filled_) {
        return false;
    }
    for (std::size_t lag = 0; lag < a.filled_; ++lag) {
        for (std::size_t i = 0; i < a.n_agents_; ++i) {
            if (a.action(lag, i) != b.action(lag, i)) {
                return false;
            }
        }
    }
    return true;
}

std::uint64_t state_count(std::size_t n_agents, std::size_t memory_len, std::size_t n_actions) {
    std::uint64_t count = 1;
    const std::size_t digits = n_agents * memory_len;
    for (std::size_t d = 0; d < digits; ++d) {
        if (count > std::numeric_limits<std::uint64_t>::max() / n_actions) {
            throw ParameterError("state space " + std::to_string(n_actions) + "^" +
                                 std::to_string(digits) + " does not fit in 64 bits");
        }
        count *= n_actions;
    }
    return count;
}

std::uint64_t encode(const MemoryState& state, std::size_t memory_len) {
    if (state.filled() < memory_len) {
        throw DomainError("encode: memory holds " + std::to_string(state.filled()) +
                          " joint actions, need " + std::to_string(memory_len) +
                          " (warm-up not finished)");
    }
    const std::size_t k = state.n_agents();
    const std::size_t n = state.n_actions();
    state_count(k, memory_len, n); // overflow check
    std::uint64_t index = 0;
    // Horner from the highest digit down.
    for (std::size_t lag = memory_len; lag-- > 0;) {
        for (std::size_t i = k; i-- > 0;) {
            index = index * n + state.action(lag, i);
        }
    }
    return index;
}

MemoryState decode(std::uint64_t index, std::size_t n_agents, std::size_t memory_len,
                   std::size_t n_actions) {
    if (index >= state_count(n_agents, memory_len, n_actions)) {
        throw DomainError("decode: index " + std::to_string(index) + " out of range");
    }
    std::vector<std::size_t> digits(n_agents * memory_len);
    for (auto& d : digits) {
        d = static_cast<std::size_t>(index % n_actions);
        index /= n_actions;
    }
    MemoryState state(n_agents, memory_len, n_actions);
    // Push oldest first so the lowest digits end up at lag 0.
    for (std::size_t lag = memory_len; lag-- > 0;) {
        state.push(std::span<const std::size_t>(digits.data() + lag * n_agents, n_agents));
    }
    return state;
}

void to_features(const MemoryState& state, std::span<const double> levels, std::size_t memory_len,
                 std::span<double> out) {
    const std::size_t k = state.n_agents();
    if (out.size() != k * memory_len) {
        throw DomainError("to_features: output width mismatch");
    }
    if (levels.size() != state.n_actions()) {
        throw DomainError("to_features: one level per action required");
    }
    for (std::size_t lag = 0; lag < memory_len; ++lag) {
        for (std::size_t i = 0; i < k; ++i) {
            // Lags not yet observed read as the lowest level.
            out[lag * k + i] = lag < state.filled() ? levels[state.action(lag, i)] : levels[0];
        }
    }
}

std::vector<double> to_features(const MemoryState& state, std::span<const double> levels,
                                std::size_t memory_len) {
    std::vector<double> out(state.n_agents() * memory_len);
    to_features(state, levels, memory_len, out);
    return out;
}

std::vector<double> normalized_levels(const PriceGrid& grid) {
    std::vector<double> levels(grid.size());
    const double lo = grid.min();
    const double span = grid.max() - grid.min();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        levels[i] = (grid[i] - lo) / span;
    }
    levels.front() = 0.0;
    levels.back() = 1.0;
    return levels;
}

} // namespace algopricing
