// Minimal dense-network substrate with hand-derived gradients: layers,
// reconstruction loss, Adam, and finite-difference gradient verification.
#pragma once

#include "nnmrom/common.hpp"

#include <functional>
#include <vector>

namespace nnmrom::nn {

enum class Activation { Linear, Tanh, Sigmoid };

Mat apply_activation(Activation act, Mat pre);
/// Elementwise activation derivative expressed through the activation output
/// (tanh: 1−y², sigmoid: y(1−y), linear: 1).
Mat activation_grad_from_output(Activation act, const Mat& out);

// =============================================================================
// Dense layer
// =============================================================================

struct DenseLayer {
    Mat weights;  // out x in
    Vec bias;     // out
    Activation activation = Activation::Linear;

    Eigen::Index in_dim() const { return weights.cols(); }
    Eigen::Index out_dim() const { return weights.rows(); }
};

DenseLayer make_dense(Eigen::Index out, Eigen::Index in, Activation act);

/// Glorot-uniform initialization: ±sqrt(6/(fan_in+fan_out)), bias zero.
void glorot_init(DenseLayer& layer, Rng& rng);

/// activation(W·x + b), batched column-wise. Throws on width mismatch.
Mat dense_forward(const DenseLayer& layer, const Mat& input);

struct DenseCache {
    Mat input;
    Mat output;
};

struct DenseGrads {
    Mat weights;
    Vec bias;
};

Mat dense_forward_cached(const DenseLayer& layer, const Mat& input, DenseCache& cache);

/// Accumulates parameter gradients (+=) into `grads` and returns the gradient
/// with respect to the layer input.
Mat dense_backward(const DenseLayer& layer, const DenseCache& cache,
                   const Mat& grad_output, DenseGrads& grads);

DenseGrads zero_grads(const DenseLayer& layer);

// =============================================================================
// Layer stack
// =============================================================================

struct Mlp {
    std::vector<DenseLayer> layers;

    Mat forward(const Mat& input) const;
    Eigen::Index in_dim() const { return layers.front().in_dim(); }
    Eigen::Index out_dim() const { return layers.back().out_dim(); }
};

struct MlpCache {
    std::vector<DenseCache> layer_caches;
};

Mat mlp_forward_cached(const Mlp& net, const Mat& input, MlpCache& cache);
Mat mlp_backward(const Mlp& net, const MlpCache& cache, const Mat& grad_output,
                 std::vector<DenseGrads>& grads);
std::vector<DenseGrads> zero_grads(const Mlp& net);

// =============================================================================
// Loss
// =============================================================================

struct LossResult {
    double value = 0.0;
    Mat grad; // d loss / d predicted
};

/// Mean squared reconstruction error ℓ = (1/MN)·ΣΣ(X−X̂)² over an M x N
/// batch, with gradient 2(X̂−X)/(MN).
LossResult mse_loss(const Mat& predicted, const Mat& target);

// =============================================================================
// Adam
// =============================================================================

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    Vec m;
    Vec v;

    explicit AdamState(Eigen::Index n_params, double learning_rate = 1e-3)
        : lr(learning_rate), m(Vec::Zero(n_params)), v(Vec::Zero(n_params)) {}
};

/// Bias-corrected Adam update in place. Throws NumericError on non-finite
/// gradients (training divergence signal).
void adam_step(AdamState& state, Vec& params, const Vec& grads);

// =============================================================================
// Parameter flattening (row-major weights, then bias, per layer)
// =============================================================================

Eigen::Index param_count(const DenseLayer& layer);
Eigen::Index param_count(const Mlp& net);
void flatten_into(const DenseLayer& layer, double* dst);
void unflatten_from(DenseLayer& layer, const double* src);
void flatten_into(const DenseGrads& grads, double* dst);
Vec flatten_params(const Mlp& net);
void unflatten_params(Mlp& net, const Vec& params);
Vec flatten_grads(const std::vector<DenseGrads>& grads);

// =============================================================================
// Per-channel standardization
// =============================================================================

/// Zero-mean unit-variance scaling per row (channel), fit over columns.
/// Channels with (near-)zero spread keep std = 1 so apply/invert stay exact.
struct Normalizer {
    Vec mean;
    Vec std;

    static Normalizer fit(const Mat& columns);
    static Normalizer identity(Eigen::Index dim);

    Mat apply(const Mat& x) const;
    Mat invert(const Mat& x) const;
    Vec apply(const Vec& x) const;
    Vec invert(const Vec& x) const;
};

// =============================================================================
// Gradient verification
// =============================================================================

/// Central finite differences (default h = 1e-5) of `loss_at` around `params`
/// against `analytic_grad`; returns the maximum per-parameter relative error
/// |fd − an| / max(|fd|, |an|, 1e-8).
double grad_check(const std::function<double(const Vec&)>& loss_at, const Vec& params,
                  const Vec& analytic_grad, double h = 1e-5);

/// Global-norm gradient clipping; returns the pre-clip norm.
double clip_by_global_norm(Vec& grads, double max_norm);

} // namespace nnmrom::nn
