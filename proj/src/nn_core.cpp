#include "nnmrom/nn/core.hpp"

#include <cmath>

namespace nnmrom::nn {

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace

Mat apply_activation(Activation act, Mat pre) {
    switch (act) {
        case Activation::Linear: return pre;
        case Activation::Tanh: return pre.array().tanh().matrix();
        case Activation::Sigmoid:
            return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    }
    throw std::invalid_argument("unknown activation");
}

Mat activation_grad_from_output(Activation act, const Mat& out) {
    switch (act) {
        case Activation::Linear: return Mat::Ones(out.rows(), out.cols());
        case Activation::Tanh: return (1.0 - out.array().square()).matrix();
        case Activation::Sigmoid: return (out.array() * (1.0 - out.array())).matrix();
    }
    throw std::invalid_argument("unknown activation");
}

DenseLayer make_dense(Eigen::Index out, Eigen::Index in, Activation act) {
    DenseLayer layer;
    layer.weights = Mat::Zero(out, in);
    layer.bias = Vec::Zero(out);
    layer.activation = act;
    return layer;
}

void glorot_init(DenseLayer& layer, Rng& rng) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
            layer.weights(r, c) = rng.uniform(-limit, limit);
    layer.bias.setZero();
}

Mat dense_forward(const DenseLayer& layer, const Mat& input) {
    check(input.rows() == layer.in_dim(), "dense_forward: input width != layer in-dim");
    Mat pre = layer.weights * input;
    pre.colwise() += layer.bias;
    return apply_activation(layer.activation, std::move(pre));
}

Mat dense_forward_cached(const DenseLayer& layer, const Mat& input, DenseCache& cache) {
    cache.input = input;
    cache.output = dense_forward(layer, input);
    return cache.output;
}

Mat dense_backward(const DenseLayer& layer, const DenseCache& cache,
                   const Mat& grad_output, DenseGrads& grads) {
    check(grad_output.rows() == layer.out_dim() && grad_output.cols() == cache.input.cols(),
          "dense_backward: gradient shape mismatch");
    const Mat dpre =
        grad_output.cwiseProduct(activation_grad_from_output(layer.activation, cache.output));
    grads.weights += dpre * cache.input.transpose();
    grads.bias += dpre.rowwise().sum();
    return layer.weights.transpose() * dpre;
}

DenseGrads zero_grads(const DenseLayer& layer) {
    return {Mat::Zero(layer.out_dim(), layer.in_dim()), Vec::Zero(layer.out_dim())};
}

Mat Mlp::forward(const Mat& input) const {
    Mat x = input;
    for (const auto& layer : layers) x = dense_forward(layer, x);
    return x;
}

Mat mlp_forward_cached(const Mlp& net, const Mat& input, MlpCache& cache) {
    cache.layer_caches.resize(net.layers.size());
    Mat x = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        x = dense_forward_cached(net.layers[i], x, cache.layer_caches[i]);
    return x;
}

Mat mlp_backward(const Mlp& net, const MlpCache& cache, const Mat& grad_output,
                 std::vector<DenseGrads>& grads) {
    check(grads.size() == net.layers.size(), "mlp_backward: gradient buffer count mismatch");
    Mat g = grad_output;
    for (std::size_t i = net.layers.size(); i-- > 0;)
        g = dense_backward(net.layers[i], cache.layer_caches[i], g, grads[i]);
    return g;
}

std::vector<DenseGrads> zero_grads(const Mlp& net) {
    std::vector<DenseGrads> grads;
    grads.reserve(net.layers.size());
    for (const auto& layer : net.layers) grads.push_back(zero_grads(layer));
    return grads;
}

LossResult mse_loss(const Mat& predicted, const Mat& target) {
    check(predicted.rows() == target.rows() && predicted.cols() == target.cols(),
          "mse_loss: shape mismatch");
    const double scale = 1.0 / static_cast<double>(predicted.size());
    const Mat diff = predicted - target;
    LossResult res;
    res.value = diff.squaredNorm() * scale;
    res.grad = 2.0 * scale * diff;
    return res;
}

void adam_step(AdamState& state, Vec& params, const Vec& grads) {
    check(params.size() == state.m.size() && grads.size() == state.m.size(),
          "adam_step: parameter/gradient size mismatch");
    if (!grads.allFinite())
        throw NumericError("adam_step: non-finite gradient (training diverged)");
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    params.array() -= state.lr * (state.m.array() / bc1)
                      / ((state.v.array() / bc2).sqrt() + state.eps);
}

Eigen::Index param_count(const DenseLayer& layer) {
    return layer.weights.size() + layer.bias.size();
}

Eigen::Index param_count(const Mlp& net) {
    Eigen::Index n = 0;
    for (const auto& layer : net.layers) n += param_count(layer);
    return n;
}

void flatten_into(const DenseLayer& layer, double* dst) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) *dst++ = layer.weights(r, c);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) *dst++ = layer.bias[i];
}

void unflatten_from(DenseLayer& layer, const double* src) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = *src++;
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = *src++;
}

void flatten_into(const DenseGrads& grads, double* dst) {
    for (Eigen::Index r = 0; r < grads.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < grads.weights.cols(); ++c) *dst++ = grads.weights(r, c);
    for (Eigen::Index i = 0; i < grads.bias.size(); ++i) *dst++ = grads.bias[i];
}

Vec flatten_params(const Mlp& net) {
    Vec out(param_count(net));
    double* p = out.data();
    for (const auto& layer : net.layers) {
        flatten_into(layer, p);
        p += param_count(layer);
    }
    return out;
}

void unflatten_params(Mlp& net, const Vec& params) {
    check(params.size() == param_count(net), "unflatten_params: size mismatch");
    const double* p = params.data();
    for (auto& layer : net.layers) {
        unflatten_from(layer, p);
        p += param_count(layer);
    }
}

Vec flatten_grads(const std::vector<DenseGrads>& grads) {
    Eigen::Index n = 0;
    for (const auto& g : grads) n += g.weights.size() + g.bias.size();
    Vec out(n);
    double* p = out.data();
    for (const auto& g : grads) {
        flatten_into(g, p);
        p += g.weights.size() + g.bias.size();
    }
    return out;
}

Normalizer Normalizer::fit(const Mat& columns) {
    check(columns.cols() > 0, "Normalizer::fit: no samples");
    Normalizer n;
    n.mean = columns.rowwise().mean();
    n.std = Vec(columns.rows());
    for (Eigen::Index r = 0; r < columns.rows(); ++r) {
        const double var = (columns.row(r).array() - n.mean[r]).square().mean();
        n.std[r] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    return n;
}

Normalizer Normalizer::identity(Eigen::Index dim) {
    return {Vec::Zero(dim), Vec::Ones(dim)};
}

Mat Normalizer::apply(const Mat& x) const {
    check(x.rows() == mean.size(), "Normalizer: channel count mismatch");
    return (x.colwise() - mean).array().colwise() / std.array();
}

Mat Normalizer::invert(const Mat& x) const {
    check(x.rows() == mean.size(), "Normalizer: channel count mismatch");
    return (x.array().colwise() * std.array()).matrix().colwise() + mean;
}

Vec Normalizer::apply(const Vec& x) const {
    return (x - mean).cwiseQuotient(std);
}

Vec Normalizer::invert(const Vec& x) const {
    return x.cwiseProduct(std) + mean;
}

double grad_check(const std::function<double(const Vec&)>& loss_at, const Vec& params,
                  const Vec& analytic_grad, double h) {
    check(params.size() == analytic_grad.size(), "grad_check: gradient size mismatch");
    double max_rel = 0.0;
    Vec probe = params;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        probe[i] = params[i] + h;
        const double up = loss_at(probe);
        probe[i] = params[i] - h;
        const double down = loss_at(probe);
        probe[i] = params[i];
        const double fd = (up - down) / (2.0 * h);
        const double an = analytic_grad[i];
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

double clip_by_global_norm(Vec& grads, double max_norm) {
    const double norm = grads.norm();
    if (norm > max_norm && norm > 0.0) grads *= max_norm / norm;
    return norm;
}

} // namespace nnmrom::nn
