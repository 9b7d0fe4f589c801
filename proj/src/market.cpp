#include "algopricing/market.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "algopricing/errors.hpp"

namespace algopricing {

MarketParams MarketParams::symmetric(std::size_t n, double mu, double a0, double quality,
                                     double cost) {
    MarketParams p;
    p.n_agents = n;
    p.mu = mu;
    p.a0 = a0;
    p.quality.assign(n, quality);
    p.marginal_cost.assign(n, cost);
    return p;
}

void MarketParams::validate() const {
    if (n_agents < 1) {
        throw ParameterError("n_agents must be at least 1");
    }
    if (!(mu > 0.0) || !std::isfinite(mu)) {
        throw ParameterError("mu must be positive and finite, got " + std::to_string(mu));
    }
    if (!std::isfinite(a0)) {
        throw ParameterError("a0 must be finite");
    }
    if (quality.size() != n_agents) {
        throw ParameterError("quality has " + std::to_string(quality.size()) +
                             " entries, expected n_agents = " + std::to_string(n_agents));
    }
    if (marginal_cost.size() != n_agents) {
        throw ParameterError("marginal_cost has " + std::to_string(marginal_cost.size()) +
                             " entries, expected n_agents = " + std::to_string(n_agents));
    }
    for (std::size_t i = 0; i < n_agents; ++i) {
        if (!std::isfinite(quality[i])) {
            throw ParameterError("quality[" + std::to_string(i) + "] is not finite");
        }
        if (!(marginal_cost[i] > 0.0) || !std::isfinite(marginal_cost[i])) {
            throw ParameterError("marginal_cost[" + std::to_string(i) + "] must be positive");
        }
    }
}

bool MarketParams::is_symmetric() const {
    return std::all_of(quality.begin(), quality.end(),
                       [&](double a) { return a == quality.front(); }) &&
           std::all_of(marginal_cost.begin(), marginal_cost.end(),
                       [&](double c) { return c == marginal_cost.front(); });
}

namespace {

void check_prices(const MarketParams& params, std::span<const double> prices) {
    if (prices.size() != params.n_agents) {
        throw ParameterError("expected " + std::to_string(params.n_agents) + " prices, got " +
                             std::to_string(prices.size()));
    }
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!std::isfinite(prices[i])) {
            throw DomainError("price[" + std::to_string(i) + "] is not finite");
        }
    }
}

// Outside-good share when all K firms charge p: 1 - K q(p).
double symmetric_outside_share(const MarketParams& params, double p) {
    const double inside = (params.quality.front() - p) / params.mu;
    const double outside = params.a0 / params.mu;
    const double m = std::max(inside, outside);
    const double e_in = std::exp(inside - m);
    const double e_out = std::exp(outside - m);
    return e_out / (static_cast<double>(params.n_agents) * e_in + e_out);
}

double symmetric_share(const MarketParams& params, double p) {
    const double inside = (params.quality.front() - p) / params.mu;
    const double outside = params.a0 / params.mu;
    const double m = std::max(inside, outside);
    const double e_in = std::exp(inside - m);
    const double e_out = std::exp(outside - m);
    return e_in / (static_cast<double>(params.n_agents) * e_in + e_out);
}

void require_symmetric(const MarketParams& params, const char* what) {
    params.validate();
    if (!params.is_symmetric()) {
        throw UnsupportedError(std::string(what) +
                               " is only defined for symmetric markets (equal quality and cost)");
    }
}

} // namespace

MarketOutcome demand(const MarketParams& params, std::span<const double> prices) {
    params.validate();
    check_prices(params, prices);

    const std::size_t k = params.n_agents;
    MarketOutcome out;
    out.prices.assign(prices.begin(), prices.end());
    out.shares.resize(k);
    out.profits.resize(k);

    const double outside_exp = params.a0 / params.mu;
    double shift = outside_exp;
    for (std::size_t i = 0; i < k; ++i) {
        out.shares[i] = (params.quality[i] - prices[i]) / params.mu;
        shift = std::max(shift, out.shares[i]);
    }
    double total = std::exp(outside_exp - shift);
    out.outside_share = total;
    for (std::size_t i = 0; i < k; ++i) {
        out.shares[i] = std::exp(out.shares[i] - shift);
        total += out.shares[i];
    }
    out.outside_share /= total;
    for (std::size_t i = 0; i < k; ++i) {
        out.shares[i] /= total;
        out.profits[i] = (prices[i] - params.marginal_cost[i]) * out.shares[i];
    }
    return out;
}

std::vector<double> demand_unshifted(const MarketParams& params, std::span<const double> prices) {
    params.validate();
    check_prices(params, prices);
    std::vector<double> shares(params.n_agents);
    double total = std::exp(params.a0 / params.mu);
    for (std::size_t i = 0; i < params.n_agents; ++i) {
        shares[i] = std::exp((params.quality[i] - prices[i]) / params.mu);
        total += shares[i];
    }
    for (double& s : shares) {
        s /= total;
    }
    return shares;
}

double symmetric_profit(const MarketParams& params, double price) {
    require_symmetric(params, "symmetric_profit");
    return (price - params.marginal_cost.front()) * symmetric_share(params, price);
}

double monopoly_price(const MarketParams& params) {
    require_symmetric(params, "monopoly_price");
    const double cost = params.marginal_cost.front();
    // d/dp [K (p - c) q(p)] = K q [1 - (p - c)(1 - K q)/mu]; the bracket term
    // is strictly increasing for p > c, so the root is unique.
    auto foc = [&](double p) { return (p - cost) * symmetric_outside_share(params, p) - params.mu; };

    double lo = cost;
    double width = 10.0 * params.mu;
    double hi = cost + width;
    int expansions = 0;
    while (foc(hi) <= 0.0) {
        if (++expansions > 60) {
            std::ostringstream msg;
            msg << "monopoly_price: no sign change on [" << lo << ", " << hi
                << "], foc(hi) = " << foc(hi);
            throw NumericalError(msg.str());
        }
        lo = hi;
        width *= 2.0;
        hi = cost + width;
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (foc(mid) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double nash_price(const MarketParams& params) {
    require_symmetric(params, "nash_price");
    const double cost = params.marginal_cost.front();
    constexpr double damping = 0.5;
    constexpr int max_iterations = 10000;

    double p = cost + params.mu;
    for (int it = 0; it < max_iterations; ++it) {
        const double q = symmetric_share(params, p);
        const double target = cost + params.mu / (1.0 - q);
        const double next = (1.0 - damping) * p + damping * target;
        if (!std::isfinite(next)) {
            throw NumericalError("nash_price: iterate became non-finite at iteration " +
                                 std::to_string(it));
        }
        if (std::abs(next - p) < 1e-10) {
            return next;
        }
        p = next;
    }
    throw NumericalError("nash_price: no convergence after " + std::to_string(max_iterations) +
                         " iterations (last p = " + std::to_string(p) + ")");
}

std::size_t PriceGrid::nearest(double price) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (std::abs(points[i] - price) < std::abs(points[best] - price)) {
            best = i;
        }
    }
    return best;
}

std::size_t PriceGrid::first_above(double price) const {
    const auto it = std::upper_bound(points.begin(), points.end(), price);
    return static_cast<std::size_t>(it - points.begin());
}

PriceGrid build_grid(double p_nash, double p_monopoly, double xi, std::size_t m) {
    if (!(p_monopoly > p_nash)) {
        throw ParameterError("build_grid: p_monopoly must exceed p_nash");
    }
    if (!(p_nash > 0.0)) {
        throw ParameterError("build_grid: p_nash must be positive");
    }
    if (m < 2) {
        throw ParameterError("build_grid: grid needs at least 2 points");
    }
    if (!(xi >= 0.0)) {
        throw ParameterError("build_grid: xi must be non-negative");
    }
    PriceGrid grid;
    grid.xi = xi;
    grid.p_nash = p_nash;
    grid.p_monopoly = p_monopoly;
    const double span = p_monopoly - p_nash;
    const double lo = p_nash - xi * span;
    const double hi = p_monopoly + xi * span;
    grid.points.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double w = static_cast<double>(i) / static_cast<double>(m - 1);
        grid.points[i] = (1.0 - w) * lo + w * hi;
    }
    grid.points.front() = lo;
    grid.points.back() = hi;
    if (!(grid.points.front() > 0.0)) {
        throw ParameterError("build_grid: lowest grid price must be positive");
    }
    return grid;
}

PriceGrid build_grid(const MarketParams& params, double xi, std::size_t m) {
    return build_grid(nash_price(params), monopoly_price(params), xi, m);
}

} // namespace algopricing
