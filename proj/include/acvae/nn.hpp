#pragma once

#include <string>
#include <vector>

#include "acvae/matrix.hpp"
#include "acvae/rng.hpp"

namespace acvae {

enum class Activation { Identity, LeakyRelu, Sigmoid };

// Fully connected layer, y = act(x * w + b). Gradients live next to the
// parameters; backward() accumulates into them.
struct DenseLayer {
    Matrix w;   // in x out
    Matrix b;   // 1 x out
    Matrix gw;  // gradient, same shape as w
    Matrix gb;
    Activation act = Activation::Identity;
    double leaky_slope = 0.01;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation activation, double slope = 0.01);

    std::size_t in_dim() const { return w.rows; }
    std::size_t out_dim() const { return w.cols; }

    // Uniform in +/- sqrt(6 / (fan_in + fan_out)); keeps early activations in
    // the near-linear regime of LeakyReLU. Bias starts at zero.
    void init_glorot(Rng& rng);
    void zero_grad();
};

// Activations captured during a forward pass, needed by backward.
struct LayerCache {
    Matrix input;
    Matrix pre;  // pre-activation
};

using MlpCache = std::vector<LayerCache>;

// Plain stack of dense layers. Forward is const and thread-safe on a frozen
// model (the cache is caller-owned); backward accumulates parameter
// gradients unless told not to (used when a frozen discriminator only
// relays gradients to the generator).
struct Mlp {
    std::vector<DenseLayer> layers;

    Matrix forward(const Matrix& input, MlpCache* cache = nullptr) const;
    Matrix backward(const MlpCache& cache, const Matrix& grad_out, bool accumulate_grads = true);

    void init_glorot(Rng& rng);
    void zero_grad();
    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }
};

Matrix dense_forward(const DenseLayer& layer, const Matrix& input, LayerCache* cache = nullptr);

// grad wrt input; accumulates layer.gw / layer.gb when accumulate_grads.
Matrix dense_backward(DenseLayer& layer, const LayerCache& cache, const Matrix& grad_out,
                      bool accumulate_grads = true);

Matrix apply_activation(Activation act, const Matrix& pre, double slope);
Matrix activation_grad(Activation act, const Matrix& pre, const Matrix& post, double slope);

// Named view of one parameter tensor and its gradient slot. Assembled on
// demand so models stay copyable.
struct ParamRef {
    std::string name;
    Matrix* value = nullptr;
    Matrix* grad = nullptr;
};

using ParamStore = std::vector<ParamRef>;

void append_mlp_params(ParamStore& store, Mlp& mlp, const std::string& prefix);

// Throws NumericError naming the first parameter whose gradient is not finite.
void check_gradients_finite(const ParamStore& store);

}  // namespace acvae
