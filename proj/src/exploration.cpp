#include "algopricing/exploration.hpp"

#include <cmath>

#include "algopricing/errors.hpp"

namespace algopricing {

double epsilon(double beta, std::uint64_t t) {
    return std::exp(-beta * static_cast<double>(t));
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) {
        throw DomainError("argmax of an empty value list");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

std::size_t select_action(std::span<const double> values, double eps, Rng& rng) {
    if (values.empty()) {
        throw DomainError("select_action: empty value list");
    }
    if (uniform01(rng) < eps) {
        return uniform_index(rng, values.size());
    }
    return argmax(values);
}

} // namespace algopricing
