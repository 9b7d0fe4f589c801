#pragma once

// Experience replay: a bounded FIFO buffer, and the offline/online pair used by
// the dual-buffer agent together with its adaptive sampling controller.

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "algopricing/rng.hpp"
#include "algopricing/value_net.hpp"

namespace algopricing {

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10000);

    // Overwrites the oldest entry once full.
    void add(Experience e);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }
    // i = 0 is the oldest retained entry.
    const Experience& at(std::size_t i) const;
    const Experience& sample(Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Experience> items_;
};

struct DualBufferConfig {
    std::size_t offline_capacity = 4000;
    std::size_t online_capacity = 400;
    double offline_weight = 0.5;       // loss weight of offline samples
    std::size_t rolling_window = 100;  // profits averaged by the controller
    double profit_threshold_frac = 0.9;
    double p_online_low = 0.2;
    double p_online_high = 0.9;

    void validate() const;
    friend bool operator==(const DualBufferConfig&, const DualBufferConfig&) = default;
};

struct WeightedSample {
    const Experience* experience = nullptr;
    double weight = 1.0;
    bool online = false;
};

class DualReplay {
public:
    explicit DualReplay(const DualBufferConfig& cfg = {});

    ReplayBuffer& offline() { return offline_; }
    ReplayBuffer& online() { return online_; }
    const ReplayBuffer& offline() const { return offline_; }
    const ReplayBuffer& online() const { return online_; }

    // Each element comes from the online buffer with probability p_online,
    // otherwise from the offline buffer; offline elements carry
    // cfg.offline_weight. An empty buffer falls back to the other one (warning
    // printed once). Throws DomainError when both are empty.
    std::vector<WeightedSample> sample(std::size_t batch_size, double p_online, Rng& rng) const;

    const DualBufferConfig& config() const { return cfg_; }

private:
    DualBufferConfig cfg_;
    ReplayBuffer offline_;
    ReplayBuffer online_;
    mutable bool warned_ = false;
};

// Threshold controller on a rolling mean of realized profits. Switches to
// p_online_high when the mean drops below profit_threshold_frac * baseline and
// stays there until the mean has been back above the threshold for
// rolling_window consecutive updates.
class SamplingController {
public:
    SamplingController() = default;
    // Throws ParameterError on a non-positive baseline.
    SamplingController(const DualBufferConfig& cfg, double baseline);

    // Push one profit and return the sampling probability for the next batch.
    double update(double profit);
    double p_online() const;
    bool high() const { return high_; }
    double baseline() const { return baseline_; }
    double window_mean() const;
    bool warm() const { return window_.size() >= cfg_.rolling_window; }

private:
    DualBufferConfig cfg_;
    double baseline_ = 1.0;
    std::deque<double> window_;
    double window_sum_ = 0.0;
    bool high_ = false;
    std::size_t recovered_streak_ = 0;
};

// Stateless form of one controller decision: the probability implied by a full
// window given the current mode. `recovered_streak` is updated in place.
double update_sampling_probability(const DualBufferConfig& cfg, std::span<const double> window,
                                   double baseline, bool& high, std::size_t& recovered_streak);

} // namespace algopricing
