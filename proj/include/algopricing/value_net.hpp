#pragma once

// Small fully connected action-value network: rectifier hidden layers,
// identity output, one output per action.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "algopricing/rng.hpp"

namespace algopricing {

class ValueNet {
public:
    ValueNet() = default;
    // All weights and biases zero. widths = {input, hidden..., output}.
    explicit ValueNet(std::vector<std::size_t> widths);
    // He-uniform weights, zero biases.
    static ValueNet random(std::vector<std::size_t> widths, Rng& rng);

    const std::vector<std::size_t>& widths() const { return widths_; }
    std::size_t input_width() const { return widths_.front(); }
    std::size_t output_width() const { return widths_.back(); }
    std::size_t n_layers() const { return widths_.size() - 1; }
    std::size_t n_params() const { return params_.size(); }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    // Row-major (out x in) weight block and bias block of layer `l`.
    std::span<double> weights(std::size_t l);
    std::span<const double> weights(std::size_t l) const;
    std::span<double> biases(std::size_t l);
    std::span<const double> biases(std::size_t l) const;
    // Offset of layer l's weight block in params().
    std::size_t layer_offset(std::size_t l) const { return offsets_[l]; }
    std::size_t layer_size(std::size_t l) const;

    // Throws DomainError on a width mismatch.
    std::vector<double> forward(std::span<const double> features) const;
    void forward(std::span<const double> features, std::span<double> out) const;

    // Text snapshot: "algopricing-valuenet 1", widths, then each layer's
    // weights (row-major) followed by its biases.
    void save(std::ostream& out) const;
    static ValueNet load(std::istream& in);
    void save(const std::string& path) const;
    static ValueNet load(const std::string& path);

    friend bool operator==(const ValueNet&, const ValueNet&) = default;

private:
    void layout();

    std::vector<std::size_t> widths_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

// One regression target on a single action output.
struct TrainingSample {
    std::span<const double> features;
    std::size_t action = 0;
    double target = 0.0;
    double weight = 1.0;
};

// Loss = mean_i weight_i * (q(x_i)[a_i] - target_i)^2.
double batch_loss(const ValueNet& net, std::span<const TrainingSample> batch);
// Same loss; writes d loss / d params into `grad` (size n_params()).
double loss_and_gradient(const ValueNet& net, std::span<const TrainingSample> batch,
                         std::span<double> grad);

// Gradient descent on the flat parameter vector: plain steps or Adam.
class Optimizer {
public:
    enum class Kind { sgd, adam };

    Optimizer() = default;
    Optimizer(Kind kind, std::size_t n_params, double learning_rate);

    void step(std::span<double> params, std::span<const double> grad);
    Kind kind() const { return kind_; }
    double learning_rate() const { return lr_; }

private:
    Kind kind_ = Kind::adam;
    double lr_ = 1e-3;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::uint64_t t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

// Experience on feature vectors for function approximation.
struct Experience {
    std::vector<double> features;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_features;
};

// One update on the mean (optionally importance-weighted) squared TD error with
// targets r + gamma * max_a q_target(s', a). Returns the loss before the update.
// Throws DomainError on an empty batch, NumericalError on a non-finite loss.
double net_gradient_step(ValueNet& net, std::span<const Experience> batch,
                         std::span<const double> weights, double gamma,
                         const ValueNet& target_net, Optimizer& optimizer);
double net_gradient_step(ValueNet& net, std::span<const Experience* const> batch,
                         std::span<const double> weights, double gamma,
                         const ValueNet& target_net, Optimizer& optimizer);

} // namespace algopricing
