#pragma once

// Data-parallel loops of the library. Each kernel has an OpenMP version and a
// serial reference; both produce bit-identical results because every output
// element is computed independently in a fixed order.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "algopricing/market.hpp"
#include "algopricing/value_net.hpp"

namespace algopricing {

enum class Execution { serial, parallel };

namespace kernels {

// Logit demand for n price vectors stored row-major in `prices` (n x K).
// Shares and profits are written row-major, outside shares one per row.
struct DemandBatch {
    std::vector<double> shares;
    std::vector<double> outside;
    std::vector<double> profits;
};
DemandBatch batch_demand(const MarketParams& params, std::span<const double> prices,
                         Execution exec = Execution::parallel);

// Forward pass of `net` on n feature rows (n x input) into n x output values.
std::vector<double> forward_batch(const ValueNet& net, std::span<const double> features,
                                  Execution exec = Execution::parallel);

// One synchronous sweep v_out[s] = sum_j P(j|s) (r(j) + gamma v_in[next(j)])
// over a transition list in compressed-row form. Returns max |v_out - v_in|.
struct SparseTransitions {
    std::vector<std::size_t> row_begin; // size n_states + 1
    std::vector<std::size_t> next;
    std::vector<double> prob;
    std::vector<double> reward;
};
double jacobi_sweep(const SparseTransitions& tr, double gamma, std::span<const double> v_in,
                    std::span<double> v_out, Execution exec = Execution::parallel);

// Calls body(i) for i in [0, n); parallel iterations run on separate threads
// with dynamic scheduling.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body,
                    Execution exec = Execution::parallel);

// Number of threads an OpenMP region would use (1 without OpenMP).
int max_threads();

} // namespace kernels
} // namespace algopricing
