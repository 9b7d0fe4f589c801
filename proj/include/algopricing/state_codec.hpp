#pragma once

// Game states are memories of the last L joint actions. Tabular agents index
// them with a mixed-radix integer; function approximators read them as
// normalized price features.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "algopricing/market.hpp"

namespace algopricing {

using JointAction = std::vector<std::size_t>;

// Ring of the most recent joint actions, lag 0 = last period.
class MemoryState {
public:
    MemoryState() = default;
    MemoryState(std::size_t n_agents, std::size_t memory_len, std::size_t n_actions);

    std::size_t n_agents() const { return n_agents_; }
    std::size_t memory_len() const { return memory_len_; }
    std::size_t n_actions() const { return n_actions_; }
    // Number of joint actions recorded so far, capped at memory_len.
    std::size_t filled() const { return filled_; }
    bool full() const { return filled_ == memory_len_; }

    // Throws DomainError on a wrong arity or out-of-range action.
    void push(std::span<const std::size_t> joint);
    std::size_t action(std::size_t lag, std::size_t agent) const;
    JointAction joint(std::size_t lag) const;

    // Byte key of the most recent `len` joint actions (for hashing).
    std::string key(std::size_t len) const;

    friend bool operator==(const MemoryState& a, const MemoryState& b);

private:
    std::size_t slot(std::size_t lag) const;

    std::size_t n_agents_ = 0;
    std::size_t memory_len_ = 0;
    std::size_t n_actions_ = 0;
    std::size_t filled_ = 0;
    std::size_t head_ = 0; // slot of lag 0
    std::vector<std::size_t> actions_;
};

// n_actions^(n_agents * memory_len); throws ParameterError when it does not fit in 64 bits.
std::uint64_t state_count(std::size_t n_agents, std::size_t memory_len, std::size_t n_actions);

// Mixed-radix index of the most recent `memory_len` joint actions; digit
// (lag * K + agent) has weight n_actions^(lag*K + agent), so the latest joint
// action occupies the lowest digits. Throws DomainError when the memory holds
// fewer than `memory_len` joint actions.
std::uint64_t encode(const MemoryState& state, std::size_t memory_len);
inline std::uint64_t encode(const MemoryState& state) { return encode(state, state.memory_len()); }

MemoryState decode(std::uint64_t index, std::size_t n_agents, std::size_t memory_len,
                   std::size_t n_actions);

// Features of the last `memory_len` joint actions, most recent first, each
// action mapped through `levels` (already normalized to [0, 1]).
std::vector<double> to_features(const MemoryState& state, std::span<const double> levels,
                                std::size_t memory_len);
void to_features(const MemoryState& state, std::span<const double> levels, std::size_t memory_len,
                 std::span<double> out);

// Grid prices mapped to [0, 1] by (p - min) / (max - min).
std::vector<double> normalized_levels(const PriceGrid& grid);

inline std::vector<double> to_features(const MemoryState& state, const PriceGrid& grid) {
    return to_features(state, normalized_levels(grid), state.memory_len());
}

} // namespace algopricing
