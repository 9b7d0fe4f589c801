#include "algopricing/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "algopricing/errors.hpp"

namespace algopricing::kernels {

namespace {

void demand_row(const MarketParams& params, const double* prices, double* shares,
                double* outside, double* profits) {
    const std::size_t k = params.n_agents;
    const double outside_exp = params.a0 / params.mu;
    double shift = outside_exp;
    for (std::size_t i = 0; i < k; ++i) {
        shares[i] = (params.quality[i] - prices[i]) / params.mu;
        shift = std::max(shift, shares[i]);
    }
    double total = std::exp(outside_exp - shift);
    *outside = total;
    for (std::size_t i = 0; i < k; ++i) {
        shares[i] = std::exp(shares[i] - shift);
        total += shares[i];
    }
    *outside /= total;
    for (std::size_t i = 0; i < k; ++i) {
        shares[i] /= total;
        profits[i] = (prices[i] - params.marginal_cost[i]) * shares[i];
    }
}

} // namespace

DemandBatch batch_demand(const MarketParams& params, std::span<const double> prices,
                         Execution exec) {
    params.validate();
    const std::size_t k = params.n_agents;
    if (prices.size() % k != 0) {
        throw ParameterError("batch_demand: price buffer is not a multiple of n_agents");
    }
    for (double p : prices) {
        if (!std::isfinite(p)) {
            throw DomainError("batch_demand: non-finite price");
        }
    }
    const auto n = static_cast<std::ptrdiff_t>(prices.size() / k);
    DemandBatch out;
    out.shares.resize(prices.size());
    out.outside.resize(static_cast<std::size_t>(n));
    out.profits.resize(prices.size());
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t r = 0; r < n; ++r) {
            const auto o = static_cast<std::size_t>(r) * k;
            demand_row(params, prices.data() + o, out.shares.data() + o,
                       out.outside.data() + r, out.profits.data() + o);
        }
    } else {
        for (std::ptrdiff_t r = 0; r < n; ++r) {
            const auto o = static_cast<std::size_t>(r) * k;
            demand_row(params, prices.data() + o, out.shares.data() + o,
                       out.outside.data() + r, out.profits.data() + o);
        }
    }
    return out;
}

std::vector<double> forward_batch(const ValueNet& net, std::span<const double> features,
                                  Execution exec) {
    const std::size_t in = net.input_width();
    const std::size_t out_w = net.output_width();
    if (features.size() % in != 0) {
        throw DomainError("forward_batch: feature buffer is not a multiple of the input width");
    }
    const auto n = static_cast<std::ptrdiff_t>(features.size() / in);
    std::vector<double> out(static_cast<std::size_t>(n) * out_w);
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t r = 0; r < n; ++r) {
            const auto i = static_cast<std::size_t>(r);
            net.forward(features.subspan(i * in, in), std::span<double>(out).subspan(i * out_w, out_w));
        }
    } else {
        for (std::ptrdiff_t r = 0; r < n; ++r) {
            const auto i = static_cast<std::size_t>(r);
            net.forward(features.subspan(i * in, in), std::span<double>(out).subspan(i * out_w, out_w));
        }
    }
    return out;
}

double jacobi_sweep(const SparseTransitions& tr, double gamma, std::span<const double> v_in,
                    std::span<double> v_out, Execution exec) {
    const auto n = static_cast<std::ptrdiff_t>(tr.row_begin.size() - 1);
    auto row = [&](std::ptrdiff_t s) {
        double acc = 0.0;
        for (std::size_t e = tr.row_begin[s]; e < tr.row_begin[s + 1]; ++e) {
            acc += tr.prob[e] * (tr.reward[e] + gamma * v_in[tr.next[e]]);
        }
        v_out[static_cast<std::size_t>(s)] = acc;
        return std::abs(acc - v_in[static_cast<std::size_t>(s)]);
    };
    double delta = 0.0;
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static) reduction(max : delta)
        for (std::ptrdiff_t s = 0; s < n; ++s) {
            delta = std::max(delta, row(s));
        }
    } else {
        for (std::ptrdiff_t s = 0; s < n; ++s) {
            delta = std::max(delta, row(s));
        }
    }
    return delta;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body, Execution exec) {
    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    // Exceptions must not escape an OpenMP region; the first one is rethrown.
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace algopricing::kernels
