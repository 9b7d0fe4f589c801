#pragma once

// Repeated game seen by the experiment harness: K agents, n actions each,
// deterministic per-period payoffs of a joint action.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "algopricing/market.hpp"
#include "algopricing/matrix_game.hpp"

namespace algopricing {

class Environment {
public:
    enum class Kind { market, matrix_game };

    static Environment market(const MarketParams& params, const PriceGrid& grid);
    static Environment prisoners_dilemma(const PayoffMatrix& matrix);

    Kind kind() const { return kind_; }
    std::size_t n_agents() const { return n_agents_; }
    std::size_t n_actions() const { return n_actions_; }

    // Per-agent payoffs (profits for the market) of a joint action.
    void payoffs(std::span<const std::size_t> joint, std::span<double> out) const;
    std::vector<double> payoffs(std::span<const std::size_t> joint) const;

    const PriceGrid* grid() const { return grid_ ? &*grid_ : nullptr; }
    const MarketParams* market_params() const { return market_ ? &*market_ : nullptr; }
    const PayoffMatrix* payoff_matrix() const { return matrix_ ? &*matrix_ : nullptr; }

    // Price of an action in the market; nullopt for matrix games.
    std::optional<double> price(std::size_t action) const;

    // Action values scaled to [0, 1] (normalized grid prices, or index / (n-1)).
    const std::vector<double>& feature_levels() const { return levels_; }

    // Index of a joint action in the payoff table.
    std::size_t joint_index(std::span<const std::size_t> joint) const;

private:
    Environment() = default;
    void tabulate();

    Kind kind_ = Kind::market;
    std::size_t n_agents_ = 0;
    std::size_t n_actions_ = 0;
    std::optional<MarketParams> market_;
    std::optional<PriceGrid> grid_;
    std::optional<PayoffMatrix> matrix_;
    std::vector<double> levels_;
    std::vector<double> table_; // joint_index * n_agents + agent; empty if too large
};

} // namespace algopricing
