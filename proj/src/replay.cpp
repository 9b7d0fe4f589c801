#include "algopricing/replay.hpp"

#include <iostream>
#include <numeric>

#include "algopricing/errors.hpp"

namespace algopricing {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw ParameterError("replay buffer capacity must be positive");
    }
    items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::add(Experience e) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(e));
        return;
    }
    items_[next_] = std::move(e);
    next_ = (next_ + 1) % capacity_;
}

const Experience& ReplayBuffer::at(std::size_t i) const {
    if (i >= items_.size()) {
        throw DomainError("replay buffer index out of range");
    }
    return items_[(next_ + i) % items_.size()];
}

const Experience& ReplayBuffer::sample(Rng& rng) const {
    if (items_.empty()) {
        throw DomainError("sampling from an empty replay buffer");
    }
    return items_[uniform_index(rng, items_.size())];
}

void DualBufferConfig::validate() const {
    if (offline_capacity == 0 || online_capacity == 0) {
        throw ParameterError("buffer capacities must be positive");
    }
    if (!(offline_weight > 0.0 && offline_weight <= 1.0)) {
        throw ParameterError("offline_weight must lie in (0, 1]");
    }
    if (rolling_window == 0) {
        throw ParameterError("rolling_window must be positive");
    }
    if (!(profit_threshold_frac > 0.0 && profit_threshold_frac < 1.0)) {
        throw ParameterError("profit_threshold_frac must lie in (0, 1)");
    }
    if (!(p_online_low >= 0.0 && p_online_high <= 1.0 && p_online_low <= p_online_high)) {
        throw ParameterError("need 0 <= p_online_low <= p_online_high <= 1");
    }
}

DualReplay::DualReplay(const DualBufferConfig& cfg)
    : cfg_(cfg), offline_(cfg.offline_capacity), online_(cfg.online_capacity) {
    cfg_.validate();
}

std::vector<WeightedSample> DualReplay::sample(std::size_t batch_size, double p_online,
                                               Rng& rng) const {
    if (!(p_online >= 0.0 && p_online <= 1.0)) {
        throw DomainError("p_online must lie in [0, 1]");
    }
    if (offline_.empty() && online_.empty()) {
        throw DomainError("dual replay: both buffers are empty");
    }
    if ((offline_.empty() || online_.empty()) && !warned_) {
        std::cerr << "warning: dual replay " << (offline_.empty() ? "offline" : "online")
                  << " buffer is empty, sampling only from the other buffer\n";
        warned_ = true;
    }
    std::vector<WeightedSample> out(batch_size);
    for (auto& s : out) {
        bool from_online = uniform01(rng) < p_online;
        if (from_online && online_.empty()) {
            from_online = false;
        } else if (!from_online && offline_.empty()) {
            from_online = true;
        }
        s.online = from_online;
        s.experience = from_online ? &online_.sample(rng) : &offline_.sample(rng);
        s.weight = from_online ? 1.0 : cfg_.offline_weight;
    }
    return out;
}

SamplingController::SamplingController(const DualBufferConfig& cfg, double baseline)
    : cfg_(cfg), baseline_(baseline) {
    cfg_.validate();
    if (!(baseline > 0.0)) {
        throw ParameterError("sampling controller baseline must be positive");
    }
}

double SamplingController::window_mean() const {
    return window_.empty() ? 0.0 : window_sum_ / static_cast<double>(window_.size());
}

double SamplingController::p_online() const {
    return high_ ? cfg_.p_online_high : cfg_.p_online_low;
}

double SamplingController::update(double profit) {
    window_.push_back(profit);
    window_sum_ += profit;
    if (window_.size() > cfg_.rolling_window) {
        window_sum_ -= window_.front();
        window_.pop_front();
    }
    if (!warm()) {
        return p_online();
    }
    const bool below = window_mean() < cfg_.profit_threshold_frac * baseline_;
    if (below) {
        high_ = true;
        recovered_streak_ = 0;
    } else if (high_ && ++recovered_streak_ >= cfg_.rolling_window) {
        high_ = false;
        recovered_streak_ = 0;
    }
    return p_online();
}

double update_sampling_probability(const DualBufferConfig& cfg, std::span<const double> window,
                                   double baseline, bool& high, std::size_t& recovered_streak) {
    cfg.validate();
    if (!(baseline > 0.0)) {
        throw ParameterError("sampling controller baseline must be positive");
    }
    if (window.empty()) {
        return high ? cfg.p_online_high : cfg.p_online_low;
    }
    const double mean =
        std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
    if (mean < cfg.profit_threshold_frac * baseline) {
        high = true;
        recovered_streak = 0;
    } else if (high && ++recovered_streak >= cfg.rolling_window) {
        high = false;
        recovered_streak = 0;
    }
    return high ? cfg.p_online_high : cfg.p_online_low;
}

} // namespace algopricing
