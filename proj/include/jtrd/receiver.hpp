#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "jtrd/core.hpp"
#include "jtrd/rng.hpp"

namespace jtrd {

enum class Activation { ReLU, Sigmoid };

inline const char* activation_name(Activation a) {
    return a == Activation::ReLU ? "relu" : "sigmoid";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw CorruptFile("unknown activation: " + s);
}

struct DenseLayer {
    RealMatrix weights;  // out x in
    RealVector bias;     // out
    Activation activation = Activation::ReLU;
};

/**
 * The non-coherent detector: a feed-forward stack of dense layers, ReLU on
 * the hidden layers and a sigmoid output producing per-bit probabilities.
 * The input is the stacked real received block (2NT), the output one
 * probability per transmitted bit (JM).
 */
struct ReceiverNetwork {
    std::vector<DenseLayer> layers;

    int input_dim() const {
        return static_cast<int>(layers.front().weights.cols());
    }
    int output_dim() const {
        return static_cast<int>(layers.back().weights.rows());
    }

    void validate() const {
        if (layers.empty()) throw ConfigError("ReceiverNetwork: no layers");
        for (size_t i = 0; i + 1 < layers.size(); ++i) {
            if (layers[i].activation != Activation::ReLU)
                throw ConfigError("ReceiverNetwork: hidden layers must be ReLU");
            if (layers[i + 1].weights.cols() != layers[i].weights.rows())
                throw ConfigError("ReceiverNetwork: layer dimensions do not chain");
        }
        if (layers.back().activation != Activation::Sigmoid)
            throw ConfigError("ReceiverNetwork: output layer must be sigmoid");
        for (const auto& l : layers)
            if (l.bias.size() != l.weights.rows())
                throw ConfigError("ReceiverNetwork: bias size mismatch");
    }

    /// Dense stack with the given hidden sizes; weights uniform on
    /// (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
    static ReceiverNetwork make(int input_dim, const std::vector<int>& hidden,
                                int output_dim, Rng& rng) {
        ReceiverNetwork net;
        int in = input_dim;
        auto add = [&](int out, Activation act) {
            DenseLayer layer;
            layer.weights.resize(out, in);
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
                    layer.weights(r, c) = rng.uniform(-bound, bound);
            layer.bias = RealVector::Zero(out);
            layer.activation = act;
            net.layers.push_back(std::move(layer));
            in = out;
        };
        for (int h : hidden) add(h, Activation::ReLU);
        add(output_dim, Activation::Sigmoid);
        return net;
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Activations per layer for the backward pass; rows are batch samples.
struct RxCache {
    std::vector<RealMatrix> act;  // act[0] = input, act[i+1] = layer i output
    std::vector<RealMatrix> pre;  // pre[i] = layer i pre-activation
};

/// Batched forward pass; inputs and outputs are batch x dim.
inline RealMatrix rx_forward_batch(const ReceiverNetwork& net,
                                   const RealMatrix& inputs, RxCache& cache) {
    if (inputs.cols() != net.input_dim())
        throw DimensionMismatch("rx_forward: input dimension mismatch");
    cache.act.clear();
    cache.pre.clear();
    cache.act.push_back(inputs);
    for (const DenseLayer& layer : net.layers) {
        RealMatrix pre = cache.act.back() * layer.weights.transpose();
        pre.rowwise() += layer.bias.transpose();
        RealMatrix out;
        if (layer.activation == Activation::ReLU)
            out = pre.cwiseMax(0.0);
        else
            out = pre.unaryExpr([](double v) { return sigmoid(v); });
        cache.pre.push_back(std::move(pre));
        cache.act.push_back(std::move(out));
    }
    return cache.act.back();
}

/// Single-vector forward pass returning per-bit probabilities.
inline RealVector rx_forward(const ReceiverNetwork& net, const RealVector& y,
                             RxCache& cache) {
    RealMatrix out = rx_forward_batch(net, y.transpose(), cache);
    return out.row(0).transpose();
}

inline RealVector rx_forward(const ReceiverNetwork& net, const RealVector& y) {
    RxCache cache;
    return rx_forward(net, y, cache);
}

inline constexpr double kProbClamp = 1e-12;

/**
 * Binary cross-entropy: summed over bits, averaged over the batch.
 * Probabilities are clamped to [1e-12, 1 - 1e-12] before the logs.
 */
inline double bce_loss(const RealMatrix& s_hat, const RealMatrix& targets) {
    if (s_hat.rows() != targets.rows() || s_hat.cols() != targets.cols())
        throw DimensionMismatch("bce_loss: shape mismatch");
    double acc = 0.0;
    for (Eigen::Index j = 0; j < s_hat.cols(); ++j) {
        for (Eigen::Index i = 0; i < s_hat.rows(); ++i) {
            const double p =
                std::min(1.0 - kProbClamp, std::max(kProbClamp, s_hat(i, j)));
            const double s = targets(i, j);
            acc -= s * std::log(p) + (1.0 - s) * std::log(1.0 - p);
        }
    }
    return acc / static_cast<double>(s_hat.rows());
}

inline double bce_loss(const RealVector& s_hat, const RealVector& targets) {
    return bce_loss(RealMatrix(s_hat.transpose()),
                    RealMatrix(targets.transpose()));
}

/// dLoss/ds_hat, matching bce_loss (batch-averaged, clamped).
inline RealMatrix bce_loss_grad(const RealMatrix& s_hat,
                                const RealMatrix& targets) {
    if (s_hat.rows() != targets.rows() || s_hat.cols() != targets.cols())
        throw DimensionMismatch("bce_loss_grad: shape mismatch");
    RealMatrix g(s_hat.rows(), s_hat.cols());
    const double inv_b = 1.0 / static_cast<double>(s_hat.rows());
    for (Eigen::Index j = 0; j < s_hat.cols(); ++j) {
        for (Eigen::Index i = 0; i < s_hat.rows(); ++i) {
            const double p =
                std::min(1.0 - kProbClamp, std::max(kProbClamp, s_hat(i, j)));
            const double s = targets(i, j);
            g(i, j) = inv_b * (-s / p + (1.0 - s) / (1.0 - p));
        }
    }
    return g;
}

struct RxGradients {
    std::vector<RealMatrix> weights;  // same shapes as the layer weights
    std::vector<RealVector> bias;
    RealMatrix input;  // batch x input_dim, the gradient w.r.t. y
};

/**
 * Backward pass of the batch BCE loss through the network. Returns the
 * gradients of all weights and biases plus the gradient at the input, which
 * the trainer pushes back through the channel.
 */
inline RxGradients rx_backward(const ReceiverNetwork& net, const RxCache& cache,
                               const RealMatrix& targets) {
    const size_t n_layers = net.layers.size();
    if (cache.act.size() != n_layers + 1 || cache.pre.size() != n_layers)
        throw MissingCache("rx_backward: cache does not match network");
    const RealMatrix& s_hat = cache.act.back();
    if (s_hat.rows() != targets.rows() || s_hat.cols() != targets.cols())
        throw DimensionMismatch("rx_backward: target shape mismatch");
    const double inv_b = 1.0 / static_cast<double>(s_hat.rows());

    RxGradients grads;
    grads.weights.resize(n_layers);
    grads.bias.resize(n_layers);

    // Sigmoid + BCE collapse to (p - s)/|B| at the output pre-activation.
    RealMatrix delta = inv_b * (s_hat - targets);
    for (size_t li = n_layers; li-- > 0;) {
        const DenseLayer& layer = net.layers[li];
        if (li != n_layers - 1) {
            // ReLU mask on the hidden pre-activations.
            delta = delta.cwiseProduct(
                (cache.pre[li].array() > 0.0).cast<double>().matrix());
        }
        grads.weights[li] = delta.transpose() * cache.act[li];
        grads.bias[li] = delta.colwise().sum().transpose();
        if (li == 0)
            grads.input = delta * layer.weights;
        else
            delta = delta * layer.weights;
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment accumulators for one parameter tensor.
struct AdamState {
    RealMatrix m;
    RealMatrix v;
    long t = 0;

    static AdamState like(const RealMatrix& p) {
        return {RealMatrix::Zero(p.rows(), p.cols()),
                RealMatrix::Zero(p.rows(), p.cols()), 0};
    }
    static AdamState like(const RealVector& p) {
        return {RealMatrix::Zero(p.size(), 1), RealMatrix::Zero(p.size(), 1), 0};
    }
};

template <typename Param, typename Grad>
inline void adam_step(Param& param, const Grad& grad, AdamState& state,
                      double lr, const AdamHyper& hp = {}) {
    if (param.size() != grad.size() || param.size() != state.m.size())
        throw DimensionMismatch("adam_step: shape mismatch");
    state.t += 1;
    auto g = grad.reshaped();
    auto m = state.m.reshaped();
    auto v = state.v.reshaped();
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v.array().matrix() +
        (1.0 - hp.beta2) * g.array().square().matrix();
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
    auto p = param.reshaped();
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + hp.eps);
}

/// Threshold per-bit probabilities at 0.5; exactly 0.5 decides 1.
inline std::vector<int> hard_decision(const RealVector& s_hat) {
    std::vector<int> bits(static_cast<size_t>(s_hat.size()));
    for (Eigen::Index i = 0; i < s_hat.size(); ++i)
        bits[static_cast<size_t>(i)] = s_hat(i) >= 0.5 ? 1 : 0;
    return bits;
}

}  // namespace jtrd
