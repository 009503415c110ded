#include "acvae/nn.hpp"

#include <cmath>

#include "acvae/errors.hpp"

namespace acvae {

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation activation, double slope)
    : w(in, out), b(1, out), gw(in, out), gb(1, out), act(activation), leaky_slope(slope) {
    if (act == Activation::LeakyRelu && slope <= 0.0) {
        throw ConfigError("DenseLayer: LeakyReLU slope must be positive");
    }
}

void DenseLayer::init_glorot(Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
    for (double& v : w.data) v = rng.next_uniform() * 2.0 * limit - limit;
    b.fill(0.0);
}

void DenseLayer::zero_grad() {
    gw.fill(0.0);
    gb.fill(0.0);
}

Matrix apply_activation(Activation act, const Matrix& pre, double slope) {
    switch (act) {
        case Activation::Identity:
            return pre;
        case Activation::LeakyRelu: {
            Matrix out = pre;
            for (double& v : out.data) {
                if (v < 0.0) v *= slope;
            }
            return out;
        }
        case Activation::Sigmoid: {
            Matrix out = pre;
            for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
            return out;
        }
    }
    throw ConfigError("apply_activation: unknown activation");
}

Matrix activation_grad(Activation act, const Matrix& pre, const Matrix& post, double slope) {
    switch (act) {
        case Activation::Identity: {
            Matrix out(pre.rows, pre.cols, 1.0);
            return out;
        }
        case Activation::LeakyRelu: {
            Matrix out(pre.rows, pre.cols);
            for (std::size_t i = 0; i < pre.size(); ++i) {
                out.data[i] = pre.data[i] >= 0.0 ? 1.0 : slope;
            }
            return out;
        }
        case Activation::Sigmoid: {
            Matrix out(post.rows, post.cols);
            for (std::size_t i = 0; i < post.size(); ++i) {
                out.data[i] = post.data[i] * (1.0 - post.data[i]);
            }
            return out;
        }
    }
    throw ConfigError("activation_grad: unknown activation");
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& input, LayerCache* cache) {
    if (input.cols != layer.in_dim()) {
        throw DimensionError("dense_forward: input has " + std::to_string(input.cols) +
                             " columns, layer expects " + std::to_string(layer.in_dim()));
    }
    Matrix pre = matmul(input, layer.w);
    add_row_inplace(pre, layer.b);
    Matrix out = apply_activation(layer.act, pre, layer.leaky_slope);
    if (cache != nullptr) {
        cache->input = input;
        cache->pre = std::move(pre);
    }
    return out;
}

Matrix dense_backward(DenseLayer& layer, const LayerCache& cache, const Matrix& grad_out,
                      bool accumulate_grads) {
    // dL/dpre = dL/dy * act'(pre)
    Matrix post;  // only sigmoid needs the post-activation value
    if (layer.act == Activation::Sigmoid) {
        post = apply_activation(layer.act, cache.pre, layer.leaky_slope);
    }
    Matrix dpre = hadamard(grad_out, activation_grad(layer.act, cache.pre, post, layer.leaky_slope));
    if (accumulate_grads) {
        Matrix dw = matmul_at_b(cache.input, dpre);
        for (std::size_t i = 0; i < dw.size(); ++i) layer.gw.data[i] += dw.data[i];
        Matrix db = col_sums(dpre);
        for (std::size_t i = 0; i < db.size(); ++i) layer.gb.data[i] += db.data[i];
    }
    return matmul_a_bt(dpre, layer.w);
}

Matrix Mlp::forward(const Matrix& input, MlpCache* cache) const {
    if (cache != nullptr) cache->resize(layers.size());
    Matrix x = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        x = dense_forward(layers[i], x, cache ? &(*cache)[i] : nullptr);
    }
    return x;
}

Matrix Mlp::backward(const MlpCache& cache, const Matrix& grad_out, bool accumulate_grads) {
    if (cache.size() != layers.size()) {
        throw DimensionError("Mlp::backward: cache does not match layer count");
    }
    Matrix g = grad_out;
    for (std::size_t i = layers.size(); i > 0; --i) {
        g = dense_backward(layers[i - 1], cache[i - 1], g, accumulate_grads);
    }
    return g;
}

void Mlp::init_glorot(Rng& rng) {
    for (DenseLayer& layer : layers) layer.init_glorot(rng);
}

void Mlp::zero_grad() {
    for (DenseLayer& layer : layers) layer.zero_grad();
}

void append_mlp_params(ParamStore& store, Mlp& mlp, const std::string& prefix) {
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
        DenseLayer& layer = mlp.layers[i];
        const std::string base = prefix + "." + std::to_string(i);
        store.push_back({base + ".w", &layer.w, &layer.gw});
        store.push_back({base + ".b", &layer.b, &layer.gb});
    }
}

void check_gradients_finite(const ParamStore& store) {
    for (const ParamRef& p : store) {
        if (!p.grad->all_finite()) {
            throw NumericError("non-finite gradient in parameter '" + p.name + "'");
        }
    }
}

}  // namespace acvae
