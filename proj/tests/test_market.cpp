#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "algopricing/errors.hpp"
#include "algopricing/market.hpp"
#include "generators.hpp"

using namespace algopricing;

namespace {

// Independent evaluation of logit shares straight from the definition, in
// long double and without shifting.
std::vector<long double> oracle_shares(const MarketParams& m, const std::vector<double>& p) {
    long double denom = std::exp(static_cast<long double>(m.a0) / m.mu);
    std::vector<long double> e(m.n_agents);
    for (std::size_t i = 0; i < m.n_agents; ++i) {
        e[i] = std::exp((static_cast<long double>(m.quality[i]) - p[i]) / m.mu);
        denom += e[i];
    }
    for (auto& x : e) {
        x /= denom;
    }
    return e;
}

long double symmetric_share(std::size_t k, long double p) {
    const long double e = std::exp((2.0L - p) / 0.25L);
    return e / (k * e + 1.0L);
}

// Symmetric Nash price from the first-order condition p = 1 + mu / (1 - q(p)),
// solved by bisection on its residual.
double oracle_nash(std::size_t k) {
    long double lo = 1.0L, hi = 3.0L;
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        const long double r = mid - 1.0L - 0.25L / (1.0L - symmetric_share(k, mid));
        (r < 0 ? lo : hi) = mid;
    }
    return static_cast<double>(0.5L * (lo + hi));
}

// Symmetric joint-profit maximizer by golden-section search on (p - 1) q(p).
double oracle_monopoly(std::size_t k) {
    const long double g = (std::sqrt(5.0L) - 1.0L) / 2.0L;
    long double a = 1.0L, b = 4.0L;
    auto f = [&](long double p) { return (p - 1.0L) * symmetric_share(k, p); };
    for (int i = 0; i < 300; ++i) {
        const long double c = b - g * (b - a);
        const long double d = a + g * (b - a);
        (f(c) > f(d) ? b : a) = (f(c) > f(d) ? d : c);
    }
    return static_cast<double>(0.5L * (a + b));
}

} // namespace

TEST(Demand, SharesAtNashPriceMatchHandValues) {
    const MarketParams m = MarketParams::symmetric(2);
    const std::vector<double> p{1.472927, 1.472927};
    const MarketOutcome out = demand(m, p);
    EXPECT_NEAR(out.shares[0], 0.47138, 5e-6);
    EXPECT_NEAR(out.shares[1], 0.47138, 5e-6);
    EXPECT_NEAR(out.profits[0], 0.22293, 5e-6);
}

TEST(Demand, EqualPricesGiveEqualShares) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = testgen::int_in(rng, 2, 6);
        const MarketParams m = MarketParams::symmetric(k, testgen::real_in(rng, 0.05, 1.0));
        const std::vector<double> p(k, testgen::real_in(rng, 0.5, 5.0));
        const MarketOutcome out = demand(m, p);
        for (std::size_t i = 1; i < k; ++i) {
            EXPECT_EQ(out.shares[i], out.shares[0]);
        }
    }
}

TEST(Demand, VeryHighPriceLosesTheMarket) {
    const MarketParams m = MarketParams::symmetric(2);
    const std::vector<double> p{1e6, 1.5};
    EXPECT_LT(demand(m, p).shares[0], 1e-12);
}

TEST(Demand, SharesSumToOneOnRandomDraws) {
    Rng rng(12);
    for (int trial = 0; trial < 10000; ++trial) {
        const MarketParams m = testgen::market(rng);
        const auto p = testgen::prices(rng, m.n_agents);
        const MarketOutcome out = demand(m, p);
        const double total =
            std::accumulate(out.shares.begin(), out.shares.end(), out.outside_share);
        ASSERT_NEAR(total, 1.0, 1e-12) << "trial " << trial;
    }
}

TEST(Demand, MatchesLongDoubleOracle) {
    Rng rng(13);
    for (int trial = 0; trial < 2000; ++trial) {
        MarketParams m = testgen::market(rng);
        m.mu = testgen::real_in(rng, 0.5, 2.0); // keeps the unshifted oracle finite
        std::vector<double> p = testgen::vector(rng, m.n_agents, 0.0, 6.0);
        const auto expect = oracle_shares(m, p);
        const auto got = demand(m, p);
        for (std::size_t i = 0; i < m.n_agents; ++i) {
            ASSERT_NEAR(got.shares[i], static_cast<double>(expect[i]), 1e-13);
            ASSERT_NEAR(got.profits[i], (p[i] - m.marginal_cost[i]) * got.shares[i], 1e-15);
        }
    }
}

TEST(Demand, ShiftingDoesNotChangeModerateCases) {
    Rng rng(14);
    for (int trial = 0; trial < 500; ++trial) {
        MarketParams m = testgen::market(rng);
        m.mu = testgen::real_in(rng, 0.5, 2.0);
        const auto p = testgen::vector(rng, m.n_agents, 0.0, 4.0);
        const auto shifted = demand(m, p).shares;
        const auto plain = demand_unshifted(m, p);
        for (std::size_t i = 0; i < m.n_agents; ++i) {
            ASSERT_NEAR(shifted[i], plain[i], 1e-14);
        }
    }
}

TEST(Demand, ExtremeExponentsStayFinite) {
    MarketParams m = MarketParams::symmetric(3, 0.01);
    const std::vector<double> p{-20.0, 2.0, 40.0};
    const auto out = demand(m, p);
    for (double s : out.shares) {
        EXPECT_TRUE(std::isfinite(s));
    }
    EXPECT_NEAR(out.shares[0], 1.0, 1e-12);
}

TEST(Demand, RejectsBadInput) {
    MarketParams m = MarketParams::symmetric(2);
    EXPECT_THROW(demand(m, std::vector<double>{1.0}), ParameterError);
    EXPECT_THROW(demand(m, std::vector<double>{NAN, 1.0}), DomainError);
    m.mu = 0.0;
    EXPECT_THROW(demand(m, std::vector<double>{1.0, 1.0}), ParameterError);
    m = MarketParams::symmetric(2);
    m.quality.pop_back();
    EXPECT_THROW(m.validate(), ParameterError);
}

TEST(Equilibrium, DuopolyPrices) {
    const MarketParams m = MarketParams::symmetric(2);
    EXPECT_NEAR(monopoly_price(m), 1.924981, 1e-5);
    EXPECT_NEAR(nash_price(m), 1.472927, 1e-5);
    EXPECT_NEAR((nash_price(m) - 1.0) / 1.0, 0.47, 0.005);
}

TEST(Equilibrium, FiveFirmNashPrice) {
    EXPECT_NEAR(nash_price(MarketParams::symmetric(5)), 1.311521, 1e-5);
}

TEST(Equilibrium, AgreesWithIndependentOracles) {
    for (std::size_t k : {1, 2, 3, 5, 8}) {
        const MarketParams m = MarketParams::symmetric(k);
        EXPECT_NEAR(nash_price(m), oracle_nash(k), 1e-9) << k;
        EXPECT_NEAR(monopoly_price(m), oracle_monopoly(k), 1e-7) << k;
    }
}

TEST(Equilibrium, FrozenGoldenValues) {
    // Computed once with 30-digit arithmetic from the first-order conditions.
    const MarketParams m2 = MarketParams::symmetric(2);
    const MarketParams m5 = MarketParams::symmetric(5);
    EXPECT_NEAR(nash_price(m2), 1.47292666003062, 1e-10);
    EXPECT_NEAR(monopoly_price(m2), 1.92498091901776, 1e-9);
    EXPECT_NEAR(nash_price(m5), 1.31152062376195, 1e-10);
    EXPECT_NEAR(monopoly_price(m5), 2.09723127904766, 1e-9);
    EXPECT_NEAR(symmetric_profit(m2, nash_price(m2)), 0.222926660030623, 1e-10);
    EXPECT_NEAR(symmetric_profit(m2, monopoly_price(m2)), 0.337490459508881, 1e-10);
}

TEST(Equilibrium, NashPriceIsAMutualBestResponse) {
    // No unilateral deviation on a fine price line improves profit.
    const MarketParams m = MarketParams::symmetric(3);
    const double pn = nash_price(m);
    std::vector<double> p(3, pn);
    const double base = demand(m, p).profits[0];
    for (double d = -0.05; d <= 0.05; d += 0.001) {
        p[0] = pn + d;
        EXPECT_LE(demand(m, p).profits[0], base + 1e-12);
    }
}

TEST(Equilibrium, InvariantUnderCommonQualityShift) {
    // Raising every quality and cost by c shifts prices by c
    // exactly.
    const MarketParams m = MarketParams::symmetric(2);
    const MarketParams shifted = MarketParams::symmetric(2, 0.25, 0.0, 32.0, 31.0);
    EXPECT_NEAR(monopoly_price(shifted) - 30.0, monopoly_price(m), 1e-8);
    EXPECT_NEAR(nash_price(shifted) - 30.0, nash_price(m), 1e-8);
}

TEST(Equilibrium, RejectsAsymmetricMarkets) {
    MarketParams m = MarketParams::symmetric(2);
    m.quality[1] = 2.5;
    EXPECT_THROW(nash_price(m), UnsupportedError);
    EXPECT_THROW(monopoly_price(m), UnsupportedError);
}

TEST(Grid, EndpointsAndSpacing) {
    const PriceGrid g = build_grid(1.472927, 1.924981, 0.1, 15);
    ASSERT_EQ(g.size(), 15u);
    EXPECT_NEAR(g.min(), 1.4277216, 1e-6);
    EXPECT_NEAR(g.max(), 1.9701864, 1e-6);
    EXPECT_NEAR(g[1] - g[0], 0.03874748571, 1e-9);
}

TEST(Grid, DegenerateGridIsTheTwoEquilibria) {
    const PriceGrid g = build_grid(1.4, 1.9, 0.0, 2);
    EXPECT_EQ(g[0], 1.4);
    EXPECT_EQ(g[1], 1.9);
}

TEST(Grid, StrictlyIncreasing) {
    Rng rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const double pn = testgen::real_in(rng, 0.5, 3.0);
        const double pm = pn + testgen::real_in(rng, 0.01, 1.0);
        const PriceGrid g = build_grid(pn, pm, testgen::real_in(rng, 0.0, 0.4),
                                       testgen::int_in(rng, 2, 40));
        for (std::size_t i = 1; i < g.size(); ++i) {
            ASSERT_LT(g[i - 1], g[i]);
        }
    }
}

TEST(Grid, JustAboveNashIsTheThirdPoint) {
    const PriceGrid g = build_grid(MarketParams::symmetric(2));
    EXPECT_EQ(g.first_above(g.p_nash), 2u);
    EXPECT_EQ(g.nearest(1.924981), 13u);
}

TEST(Grid, RejectsBadArguments) {
    EXPECT_THROW(build_grid(1.5, 1.4, 0.1, 15), ParameterError);
    EXPECT_THROW(build_grid(1.4, 1.5, 0.1, 1), ParameterError);
    EXPECT_THROW(build_grid(1.4, 1.5, -0.1, 15), ParameterError);
}
