// Bottleneck autoencoder for output-only latent extraction, plus the
// bottleneck-size sweep used to pick the number of retained coordinates.
#pragma once

#include "nnmrom/nn/core.hpp"
#include "nnmrom/trajectory.hpp"

#include <map>
#include <vector>

namespace nnmrom {

/// Encoder/decoder stacks around a bottleneck of `bottleneck_dim` latent
/// coordinates. Data is standardized per channel before encoding; the stats
/// live in the model so decode() restores physical units.
struct AutoencoderModel {
    nn::Mlp encoder;
    nn::Mlp decoder;
    int bottleneck_dim = 0;
    nn::Normalizer norm;

    int n_dof() const { return static_cast<int>(encoder.in_dim()); }
    void validate() const;
};

/// Five-layer topology generalized to n_dof: linear input, tanh hidden of
/// width n_dof, tanh bottleneck, tanh hidden of width n_dof, linear output.
AutoencoderModel build_paper_ae(int n_dof, int bottleneck, std::uint64_t seed);

/// Same topology with a chosen hidden/bottleneck activation (Linear recovers
/// the POD-equivalent autoencoder).
AutoencoderModel build_ae(int n_dof, int bottleneck, nn::Activation hidden_activation,
                          std::uint64_t seed);

struct AeTrainConfig {
    int max_epochs = 800;
    int batch_size = 128;
    double lr = 1e-3;
    double holdout_fraction = 0.1; // early-stopping split of the training columns
    int patience = 50;
    std::uint64_t shuffle_seed = 0;
    int fine_tune_epochs = 0;      // continued training at fine_tune_lr
    double fine_tune_lr = 1e-4;
};

struct AeTrainResult {
    std::vector<double> loss_history;     // running-min validation MSE per epoch
    std::vector<double> raw_loss_history; // unsmoothed
    double train_mse = 0.0;               // normalized space, full training set
    double holdout_mse = 0.0;
    int epochs_run = 0;
};

/// Minimizes the reconstruction MSE over normalized snapshot columns with
/// Adam on shuffled mini-batches; early stopping on a holdout split of the
/// training columns, best parameters restored. Throws NumericError when the
/// loss turns non-finite.
AeTrainResult train_ae(AutoencoderModel& model, const Mat& snapshot_columns,
                       const AeTrainConfig& config);
/// Pools displacement snapshots from all trajectories.
AeTrainResult train_ae(AutoencoderModel& model, const std::vector<Trajectory>& trajectories,
                       const AeTrainConfig& config);

Mat encode(const AutoencoderModel& model, const Mat& displacements);
Mat decode(const AutoencoderModel& model, const Mat& latents);

/// Round-trip MSE in normalized space (the Eq.-2 quantity training minimizes).
double reconstruction_mse(const AutoencoderModel& model, const Mat& displacements);

// =============================================================================
// Bottleneck sweep
// =============================================================================

struct SweepCell {
    int bottleneck = 0;
    int restart = 0;
    double train_mse = 0.0; // NaN when that training run failed
    double test_mse = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::map<int, AutoencoderModel> best_models; // per size, by test MSE
    std::map<int, double> best_test_mse;
};

/// Trains `restarts` autoencoders per size with distinct seeds and records
/// per-cell train/test MSE. Training failures are recorded as NaN cells, not
/// propagated.
SweepResult bottleneck_sweep(const Mat& train_columns, const Mat& test_columns,
                             const std::vector<int>& sizes, int restarts,
                             const AeTrainConfig& config, std::uint64_t seed_base = 1000);

/// CSV with columns bottleneck,restart,train_mse,test_mse.
void save_sweep_csv(const SweepResult& sweep, const std::string& path);

void save_autoencoder(const AutoencoderModel& model, const std::string& path);
AutoencoderModel load_autoencoder(const std::string& path);

} // namespace nnmrom
