#include "algopricing/value_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "algopricing/errors.hpp"

namespace algopricing {

namespace {
constexpr const char* net_magic = "algopricing-valuenet";
constexpr int net_version = 1;
} // namespace

ValueNet::ValueNet(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) {
        throw ParameterError("ValueNet needs at least an input and an output width");
    }
    for (std::size_t w : widths_) {
        if (w == 0) {
            throw ParameterError("ValueNet layer widths must be positive");
        }
    }
    layout();
}

void ValueNet::layout() {
    offsets_.resize(n_layers());
    std::size_t total = 0;
    for (std::size_t l = 0; l < n_layers(); ++l) {
        offsets_[l] = total;
        total += layer_size(l);
    }
    params_.assign(total, 0.0);
}

std::size_t ValueNet::layer_size(std::size_t l) const {
    return widths_[l + 1] * widths_[l] + widths_[l + 1];
}

ValueNet ValueNet::random(std::vector<std::size_t> widths, Rng& rng) {
    ValueNet net(std::move(widths));
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(net.widths_[l]));
        for (double& w : net.weights(l)) {
            w = uniform(rng, -bound, bound);
        }
    }
    return net;
}

std::span<double> ValueNet::weights(std::size_t l) {
    return std::span<double>(params_).subspan(offsets_[l], widths_[l + 1] * widths_[l]);
}

std::span<const double> ValueNet::weights(std::size_t l) const {
    return std::span<const double>(params_).subspan(offsets_[l], widths_[l + 1] * widths_[l]);
}

std::span<double> ValueNet::biases(std::size_t l) {
    return std::span<double>(params_).subspan(offsets_[l] + widths_[l + 1] * widths_[l],
                                              widths_[l + 1]);
}

std::span<const double> ValueNet::biases(std::size_t l) const {
    return std::span<const double>(params_).subspan(offsets_[l] + widths_[l + 1] * widths_[l],
                                                    widths_[l + 1]);
}

void ValueNet::forward(std::span<const double> features, std::span<double> out) const {
    if (features.size() != input_width()) {
        throw DomainError("ValueNet: expected " + std::to_string(input_width()) +
                          " features, got " + std::to_string(features.size()));
    }
    if (out.size() != output_width()) {
        throw DomainError("ValueNet: output buffer width mismatch");
    }
    std::vector<double> a(features.begin(), features.end());
    std::vector<double> z;
    for (std::size_t l = 0; l < n_layers(); ++l) {
        const std::size_t in = widths_[l];
        const std::size_t n_out = widths_[l + 1];
        const auto w = weights(l);
        const auto b = biases(l);
        z.assign(b.begin(), b.end());
        for (std::size_t r = 0; r < n_out; ++r) {
            const double* row = w.data() + r * in;
            double acc = z[r];
            for (std::size_t c = 0; c < in; ++c) {
                acc += row[c] * a[c];
            }
            z[r] = acc;
        }
        if (l + 1 < n_layers()) {
            for (double& v : z) {
                v = v > 0.0 ? v : 0.0;
            }
        }
        a.swap(z);
    }
    std::copy(a.begin(), a.end(), out.begin());
}

std::vector<double> ValueNet::forward(std::span<const double> features) const {
    std::vector<double> out(output_width());
    forward(features, out);
    return out;
}

void ValueNet::save(std::ostream& out) const {
    out << net_magic << ' ' << net_version << '\n' << widths_.size();
    for (std::size_t w : widths_) {
        out << ' ' << w;
    }
    out << '\n' << std::setprecision(17);
    for (std::size_t l = 0; l < n_layers(); ++l) {
        const auto w = weights(l);
        for (std::size_t r = 0; r < widths_[l + 1]; ++r) {
            for (std::size_t c = 0; c < widths_[l]; ++c) {
                out << (c ? " " : "") << w[r * widths_[l] + c];
            }
            out << '\n';
        }
        const auto b = biases(l);
        for (std::size_t r = 0; r < b.size(); ++r) {
            out << (r ? " " : "") << b[r];
        }
        out << '\n';
    }
}

ValueNet ValueNet::load(std::istream& in) {
    std::string magic;
    int version = 0;
    std::size_t n = 0;
    if (!(in >> magic >> version) || magic != net_magic) {
        throw ParameterError("not a value-network snapshot");
    }
    if (version != net_version) {
        throw ParameterError("unsupported value-network snapshot version " +
                             std::to_string(version));
    }
    if (!(in >> n) || n < 2 || n > 64) {
        throw ParameterError("value-network snapshot: bad layer count");
    }
    std::vector<std::size_t> widths(n);
    for (auto& w : widths) {
        if (!(in >> w)) {
            throw ParameterError("value-network snapshot: missing widths");
        }
    }
    ValueNet net(std::move(widths));
    for (double& p : net.params_) {
        if (!(in >> p) || !std::isfinite(p)) {
            throw ParameterError("value-network snapshot: truncated or non-finite parameters");
        }
    }
    return net;
}

void ValueNet::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write value-network snapshot to " + path);
    }
    save(out);
}

ValueNet ValueNet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open value-network snapshot " + path);
    }
    return load(in);
}

namespace {

void check_batch(const ValueNet& net, std::span<const TrainingSample> batch) {
    if (batch.empty()) {
        throw DomainError("empty training batch");
    }
    for (const auto& s : batch) {
        if (s.features.size() != net.input_width()) {
            throw DomainError("training sample width mismatch");
        }
        if (s.action >= net.output_width()) {
            throw DomainError("training sample action out of range");
        }
    }
}

} // namespace

double batch_loss(const ValueNet& net, std::span<const TrainingSample> batch) {
    check_batch(net, batch);
    std::vector<double> q(net.output_width());
    double loss = 0.0;
    for (const auto& s : batch) {
        net.forward(s.features, q);
        const double err = q[s.action] - s.target;
        loss += s.weight * err * err;
    }
    return loss / static_cast<double>(batch.size());
}

double loss_and_gradient(const ValueNet& net, std::span<const TrainingSample> batch,
                         std::span<double> grad) {
    check_batch(net, batch);
    if (grad.size() != net.n_params()) {
        throw DomainError("gradient buffer size mismatch");
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    const std::size_t layers = net.n_layers();
    const auto& widths = net.widths();
    const double scale = 1.0 / static_cast<double>(batch.size());

    // acts[l] = input of layer l (post-activation of layer l-1).
    std::vector<std::vector<double>> acts(layers + 1);
    std::vector<double> delta;
    std::vector<double> prev_delta;
    double loss = 0.0;

    for (const auto& s : batch) {
        acts[0].assign(s.features.begin(), s.features.end());
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t in = widths[l];
            const auto w = net.weights(l);
            const auto b = net.biases(l);
            auto& z = acts[l + 1];
            const double* x = acts[l].data();
            z.assign(b.begin(), b.end());
            for (std::size_t r = 0; r < z.size(); ++r) {
                const double* row = w.data() + r * in;
                double acc = z[r];
                for (std::size_t c = 0; c < in; ++c) {
                    acc += row[c] * x[c];
                }
                z[r] = acc;
            }
            if (l + 1 < layers) {
                for (double& v : z) {
                    v = v > 0.0 ? v : 0.0;
                }
            }
        }
        const double err = acts[layers][s.action] - s.target;
        loss += s.weight * err * err;

        delta.assign(widths[layers], 0.0);
        delta[s.action] = 2.0 * scale * s.weight * err;
        for (std::size_t l = layers; l-- > 0;) {
            const std::size_t in = widths[l];
            const std::size_t off = net.layer_offset(l);
            const std::size_t bias_off = off + widths[l + 1] * in;
            const auto w = net.weights(l);
            for (std::size_t r = 0; r < delta.size(); ++r) {
                if (delta[r] == 0.0) {
                    continue;
                }
                double* grow = grad.data() + off + r * in;
                for (std::size_t c = 0; c < in; ++c) {
                    grow[c] += delta[r] * acts[l][c];
                }
                grad[bias_off + r] += delta[r];
            }
            if (l == 0) {
                break;
            }
            prev_delta.assign(in, 0.0);
            for (std::size_t r = 0; r < delta.size(); ++r) {
                if (delta[r] == 0.0) {
                    continue;
                }
                const double* row = w.data() + r * in;
                for (std::size_t c = 0; c < in; ++c) {
                    prev_delta[c] += row[c] * delta[r];
                }
            }
            // Rectifier derivative: the stored activation is positive iff the unit is active.
            for (std::size_t c = 0; c < in; ++c) {
                if (!(acts[l][c] > 0.0)) {
                    prev_delta[c] = 0.0;
                }
            }
            delta.swap(prev_delta);
        }
    }
    return loss * scale;
}

Optimizer::Optimizer(Kind kind, std::size_t n_params, double learning_rate)
    : kind_(kind), lr_(learning_rate) {
    if (!(learning_rate > 0.0)) {
        throw ParameterError("learning rate must be positive");
    }
    if (kind_ == Kind::adam) {
        m_.assign(n_params, 0.0);
        v_.assign(n_params, 0.0);
    }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
    if (kind_ == Kind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i] -= lr_ * grad[i];
        }
        return;
    }
    if (m_.size() != params.size()) {
        throw DomainError("optimizer state size mismatch");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double m_hat = m_[i] / c1;
        const double v_hat = v_[i] / c2;
        params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
}

double net_gradient_step(ValueNet& net, std::span<const Experience* const> batch,
                         std::span<const double> weights, double gamma,
                         const ValueNet& target_net, Optimizer& optimizer) {
    if (batch.empty()) {
        throw DomainError("net_gradient_step: empty batch");
    }
    if (!weights.empty() && weights.size() != batch.size()) {
        throw DomainError("net_gradient_step: one weight per sample required");
    }
    std::vector<TrainingSample> samples(batch.size());
    std::vector<double> next_q(target_net.output_width());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Experience& e = *batch[i];
        target_net.forward(e.next_features, next_q);
        const double best = *std::max_element(next_q.begin(), next_q.end());
        samples[i] = TrainingSample{e.features, e.action, e.reward + gamma * best,
                                    weights.empty() ? 1.0 : weights[i]};
    }
    std::vector<double> grad(net.n_params());
    const double loss = loss_and_gradient(net, samples, grad);
    if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "net_gradient_step: non-finite loss " << loss << " on a batch of " << batch.size();
        throw NumericalError(msg.str());
    }
    optimizer.step(net.params(), grad);
    return loss;
}

double net_gradient_step(ValueNet& net, std::span<const Experience> batch,
                         std::span<const double> weights, double gamma,
                         const ValueNet& target_net, Optimizer& optimizer) {
    std::vector<const Experience*> ptrs(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        ptrs[i] = &batch[i];
    }
    return net_gradient_step(net, ptrs, weights, gamma, target_net, optimizer);
}

} // namespace algopricing
