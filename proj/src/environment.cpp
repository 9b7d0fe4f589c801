#include "algopricing/environment.hpp"

#include "algopricing/errors.hpp"

namespace algopricing {

namespace {
constexpr std::size_t max_table_entries = std::size_t{1} << 24;
}

Environment Environment::market(const MarketParams& params, const PriceGrid& grid) {
    params.validate();
    Environment env;
    env.kind_ = Kind::market;
    env.n_agents_ = params.n_agents;
    env.n_actions_ = grid.size();
    env.market_ = params;
    env.grid_ = grid;
    env.levels_ = normalized_levels(grid);
    env.tabulate();
    return env;
}

Environment Environment::prisoners_dilemma(const PayoffMatrix& matrix) {
    matrix.validate();
    Environment env;
    env.kind_ = Kind::matrix_game;
    env.n_agents_ = 2;
    env.n_actions_ = 2;
    env.matrix_ = matrix;
    env.levels_ = {0.0, 1.0};
    env.tabulate();
    return env;
}

std::size_t Environment::joint_index(std::span<const std::size_t> joint) const {
    std::size_t idx = 0;
    for (std::size_t i = n_agents_; i-- > 0;) {
        idx = idx * n_actions_ + joint[i];
    }
    return idx;
}

void Environment::tabulate() {
    std::size_t joints = 1;
    for (std::size_t i = 0; i < n_agents_; ++i) {
        joints *= n_actions_;
        if (joints * n_agents_ > max_table_entries) {
            return; // evaluate on the fly
        }
    }
    std::vector<double> table(joints * n_agents_);
    std::vector<std::size_t> joint(n_agents_, 0);
    for (std::size_t j = 0; j < joints; ++j) {
        std::size_t rest = j;
        for (std::size_t i = 0; i < n_agents_; ++i) {
            joint[i] = rest % n_actions_;
            rest /= n_actions_;
        }
        payoffs(joint, std::span<double>(table.data() + j * n_agents_, n_agents_));
    }
    table_ = std::move(table);
}

void Environment::payoffs(std::span<const std::size_t> joint, std::span<double> out) const {
    if (joint.size() != n_agents_ || out.size() != n_agents_) {
        throw DomainError("payoffs: joint action arity mismatch");
    }
    for (std::size_t a : joint) {
        if (a >= n_actions_) {
            throw DomainError("payoffs: action index out of range");
        }
    }
    if (!table_.empty()) {
        const double* row = table_.data() + joint_index(joint) * n_agents_;
        std::copy(row, row + n_agents_, out.begin());
        return;
    }
    if (kind_ == Kind::matrix_game) {
        const auto [ri, rj] = pd_payoff(*matrix_, joint[0], joint[1]);
        out[0] = ri;
        out[1] = rj;
        return;
    }
    std::vector<double> prices(n_agents_);
    for (std::size_t i = 0; i < n_agents_; ++i) {
        prices[i] = (*grid_)[joint[i]];
    }
    const MarketOutcome outcome = demand(*market_, prices);
    std::copy(outcome.profits.begin(), outcome.profits.end(), out.begin());
}

std::vector<double> Environment::payoffs(std::span<const std::size_t> joint) const {
    std::vector<double> out(n_agents_);
    payoffs(joint, out);
    return out;
}

std::optional<double> Environment::price(std::size_t action) const {
    if (!grid_) {
        return std::nullopt;
    }
    return (*grid_)[action];
}

} // namespace algopricing
