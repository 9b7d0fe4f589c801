#include <atomic>

#include <gtest/gtest.h>

#include "algopricing/kernels.hpp"
#include "generators.hpp"

using namespace algopricing;

TEST(Kernels, BatchDemandSerialEqualsParallel) {
    Rng rng(61);
    const MarketParams m = MarketParams::symmetric(3);
    const auto prices = testgen::vector(rng, 3 * 4000, 0.5, 3.0);
    const auto a = kernels::batch_demand(m, prices, Execution::serial);
    const auto b = kernels::batch_demand(m, prices, Execution::parallel);
    EXPECT_EQ(a.shares, b.shares);
    EXPECT_EQ(a.outside, b.outside);
    EXPECT_EQ(a.profits, b.profits);
    // Row 17 agrees with the scalar routine.
    const std::vector<double> row(prices.begin() + 51, prices.begin() + 54);
    const auto one = demand(m, row);
    EXPECT_EQ(a.shares[51], one.shares[0]);
    EXPECT_EQ(a.outside[17], one.outside_share);
}

TEST(Kernels, ForwardBatchSerialEqualsParallel) {
    Rng rng(62);
    const ValueNet net = ValueNet::random({20, 64, 64, 15}, rng);
    const auto x = testgen::vector(rng, 20 * 300, 0.0, 1.0);
    const auto a = kernels::forward_batch(net, x, Execution::serial);
    const auto b = kernels::forward_batch(net, x, Execution::parallel);
    EXPECT_EQ(a, b);
    const std::vector<double> row(x.begin() + 40, x.begin() + 60);
    const auto one = net.forward(row);
    for (std::size_t i = 0; i < 15; ++i) {
        EXPECT_EQ(a[2 * 15 + i], one[i]);
    }
}

TEST(Kernels, JacobiSweepSerialEqualsParallel) {
    Rng rng(63);
    const std::size_t n = 500;
    kernels::SparseTransitions tr;
    tr.row_begin.push_back(0);
    for (std::size_t s = 0; s < n; ++s) {
        for (int j = 0; j < 4; ++j) {
            tr.next.push_back(uniform_index(rng, n));
            tr.prob.push_back(0.25);
            tr.reward.push_back(testgen::real_in(rng, -1.0, 1.0));
        }
        tr.row_begin.push_back(tr.next.size());
    }
    const auto v = testgen::vector(rng, n, -5.0, 5.0);
    std::vector<double> a(n), b(n);
    const double da = kernels::jacobi_sweep(tr, 0.9, v, a, Execution::serial);
    const double db = kernels::jacobi_sweep(tr, 0.9, v, b, Execution::parallel);
    EXPECT_EQ(a, b);
    EXPECT_EQ(da, db);
}

TEST(Kernels, ForEachIndexVisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(1000);
    kernels::for_each_index(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) {
        EXPECT_EQ(h.load(), 1);
    }
    EXPECT_GE(kernels::max_threads(), 1);
}

TEST(Kernels, ForEachIndexPropagatesExceptions) {
    EXPECT_THROW(kernels::for_each_index(
                     50,
                     [](std::size_t i) {
                         if (i == 17) {
                             throw std::runtime_error("boom");
                         }
                     },
                     Execution::parallel),
                 std::runtime_error);
}
