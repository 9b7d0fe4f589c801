#pragma once

// Logit-demand Bertrand market: demand shares, profits, symmetric
// equilibrium prices and the discretized price grid agents choose from.

#include <cstddef>
#include <span>
#include <vector>

namespace algopricing {

struct MarketParams {
    std::size_t n_agents = 2;
    double mu = 0.25;               // product differentiation
    double a0 = 0.0;                // outside-good quality index
    std::vector<double> quality{2.0, 2.0};
    std::vector<double> marginal_cost{1.0, 1.0};

    // Symmetric market with n agents sharing one quality and cost.
    static MarketParams symmetric(std::size_t n, double mu = 0.25, double a0 = 0.0,
                                  double quality = 2.0, double cost = 1.0);

    // Throws ParameterError when an invariant is violated.
    void validate() const;
    bool is_symmetric() const;

    friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

struct MarketOutcome {
    std::vector<double> prices;
    std::vector<double> shares;
    double outside_share = 0.0;
    std::vector<double> profits;
};

// Logit shares with the exponents shifted by their maximum before
// normalizing. Throws ParameterError / DomainError.
MarketOutcome demand(const MarketParams& params, std::span<const double> prices);

// Same shares without exponent shifting; only for comparison in tests.
std::vector<double> demand_unshifted(const MarketParams& params, std::span<const double> prices);

// Price maximizing the joint profit of a symmetric market (bisection on the
// first-order condition).
double monopoly_price(const MarketParams& params);

// Symmetric Bertrand-Nash price (damped fixed-point iteration on p = c + mu/(1-q)).
double nash_price(const MarketParams& params);

// Per-firm profit when every firm charges `price` in a symmetric market.
double symmetric_profit(const MarketParams& params, double price);

struct PriceGrid {
    std::vector<double> points;
    double xi = 0.1;
    double p_nash = 0.0;
    double p_monopoly = 0.0;

    std::size_t size() const { return points.size(); }
    double operator[](std::size_t i) const { return points[i]; }
    double min() const { return points.front(); }
    double max() const { return points.back(); }

    // Index of the grid point closest to `price`.
    std::size_t nearest(double price) const;
    // Smallest index whose price is strictly greater than `price`; size() if none.
    std::size_t first_above(double price) const;
};

// m evenly spaced prices on [p_nash - xi*d, p_monopoly + xi*d], d = p_monopoly - p_nash.
PriceGrid build_grid(double p_nash, double p_monopoly, double xi, std::size_t m);

// Grid built from the symmetric equilibria of `params`.
PriceGrid build_grid(const MarketParams& params, double xi = 0.1, std::size_t m = 15);

} // namespace algopricing
