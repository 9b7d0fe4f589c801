#include "algopricing/dqn_agent.hpp"

#include <cmath>
#include <limits>

#include "algopricing/errors.hpp"
#include "algopricing/exploration.hpp"

namespace algopricing {

void DqnConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw ParameterError("dqn learning_rate must be positive");
    }
    if (batch_size == 0 || replay_capacity == 0 || target_sync == 0) {
        throw ParameterError("dqn batch_size, replay_capacity and target_sync must be positive");
    }
    for (std::size_t w : hidden) {
        if (w == 0) {
            throw ParameterError("dqn hidden widths must be positive");
        }
    }
}

namespace {

std::vector<std::size_t> layer_widths(std::size_t inputs, const std::vector<std::size_t>& hidden,
                                      std::size_t outputs) {
    std::vector<std::size_t> widths{inputs};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(outputs);
    return widths;
}

} // namespace

DqnAgent::DqnAgent(std::size_t index, std::size_t n_agents, std::vector<double> levels,
                   const AgentHyperparams& hp, const DqnConfig& cfg, Rng& init_rng)
    : index_(index), n_agents_(n_agents), levels_(std::move(levels)), hp_(hp), cfg_(cfg),
      last_loss_(std::numeric_limits<double>::quiet_NaN()), replay_(cfg.replay_capacity) {
    hp_.validate();
    cfg_.validate();
    if (index >= n_agents || levels_.empty()) {
        throw ParameterError("dqn agent: bad agent index or empty action set");
    }
    net_ = ValueNet::random(layer_widths(n_agents * hp_.memory_len, cfg_.hidden, levels_.size()),
                            init_rng);
    target_ = net_;
    optimizer_ = Optimizer(cfg_.optimizer, net_.n_params(), cfg_.learning_rate);
}

void DqnAgent::set_net(const ValueNet& net) {
    if (net.widths() != net_.widths()) {
        throw ParameterError("value-network snapshot does not match the agent's architecture");
    }
    net_ = net;
    target_ = net;
}

std::vector<double> DqnAgent::features(const MemoryState& state) const {
    return to_features(state, levels_, hp_.memory_len);
}

std::vector<double> DqnAgent::action_values(const MemoryState& state) const {
    return net_.forward(features(state));
}

std::size_t DqnAgent::act(const MemoryState& state, Rng& rng, bool explore) {
    const auto q = action_values(state);
    if (!explore || frozen_) {
        last_epsilon_ = 0.0;
        return argmax(q);
    }
    last_epsilon_ = epsilon(hp_.beta, steps_++);
    return select_action(q, last_epsilon_, rng);
}

std::size_t DqnAgent::greedy_action(const MemoryState& state) const {
    return argmax(action_values(state));
}

Experience DqnAgent::make_experience(const MemoryState& state, std::size_t action, double reward,
                                     const MemoryState& next) const {
    return Experience{features(state), action, reward, features(next)};
}

void DqnAgent::train_on(std::span<const Experience* const> batch, std::span<const double> weights) {
    last_loss_ = net_gradient_step(net_, batch, weights, hp_.gamma, target_, optimizer_);
    if (++updates_ % cfg_.target_sync == 0) {
        target_ = net_;
    }
}

void DqnAgent::track_greedy(const MemoryState& state) {
    const std::size_t greedy = greedy_action(state);
    auto [it, inserted] = greedy_seen_.try_emplace(state.key(hp_.memory_len), greedy);
    if (!inserted && it->second != greedy) {
        greedy_changed_ = true;
        it->second = greedy;
    }
}

void DqnAgent::learn(const MemoryState& state, std::span<const std::size_t> joint, double reward,
                     const MemoryState& next, Rng& rng) {
    greedy_changed_ = false;
    if (frozen_) {
        return;
    }
    replay_.add(make_experience(state, joint[index_], reward, next));
    if (replay_.size() >= std::max(cfg_.train_start, std::size_t{1})) {
        std::vector<const Experience*> batch(cfg_.batch_size);
        for (auto& e : batch) {
            e = &replay_.sample(rng);
        }
        train_on(batch, {});
    }
    track_greedy(state);
}

DualBufferAgent::DualBufferAgent(std::size_t index, std::size_t n_agents,
                                 std::vector<double> levels, const AgentHyperparams& hp,
                                 const DqnConfig& cfg, const DualBufferConfig& dual,
                                 Rng& init_rng)
    : DqnAgent(index, n_agents, std::move(levels), hp, cfg, init_rng), buffers_(dual),
      p_online_(dual.p_online_low) {}

void DualBufferAgent::observe_offline(const MemoryState& state, std::size_t action, double reward,
                                      double own_profit, const MemoryState& next) {
    buffers_.offline().add(make_experience(state, action, reward, next));
    offline_profit_sum_ += own_profit;
    ++offline_count_;
}

void DualBufferAgent::pretrain(std::size_t n_updates, Rng& rng) {
    if (buffers_.offline().empty()) {
        throw ConfigError("dual-buffer agent: pretraining needs offline observations");
    }
    std::vector<const Experience*> batch(cfg_.batch_size);
    for (std::size_t u = 0; u < n_updates; ++u) {
        for (auto& e : batch) {
            e = &buffers_.offline().sample(rng);
        }
        train_on(batch, {});
    }
}

double DualBufferAgent::offline_baseline() const {
    if (offline_count_ == 0) {
        throw ConfigError("dual-buffer agent: no offline observations for the baseline");
    }
    return offline_profit_sum_ / static_cast<double>(offline_count_);
}

void DualBufferAgent::begin_online(std::optional<double> baseline) {
    controller_ = SamplingController(buffers_.config(), baseline.value_or(offline_baseline()));
    p_online_ = controller_.p_online();
}

void DualBufferAgent::record_profit(double own_profit) {
    p_online_ = controller_.update(own_profit);
}

void DualBufferAgent::learn(const MemoryState& state, std::span<const std::size_t> joint,
                            double reward, const MemoryState& next, Rng& rng) {
    greedy_changed_ = false;
    if (frozen_) {
        return;
    }
    buffers_.online().add(make_experience(state, joint[index_], reward, next));
    const std::size_t available = buffers_.online().size() + buffers_.offline().size();
    if (available >= std::max(cfg_.train_start, std::size_t{1})) {
        const auto drawn = buffers_.sample(cfg_.batch_size, p_online_, rng);
        std::vector<const Experience*> batch(drawn.size());
        std::vector<double> weights(drawn.size());
        for (std::size_t i = 0; i < drawn.size(); ++i) {
            batch[i] = drawn[i].experience;
            weights[i] = drawn[i].weight;
        }
        train_on(batch, weights);
    }
    track_greedy(state);
}

} // namespace algopricing
