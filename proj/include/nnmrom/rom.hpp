// Three-step ROM orchestration: latent extraction, latent-dynamics
// regression, decode-and-evaluate. Bundles the deployable surrogate.
#pragma once

#include "nnmrom/autoencoder.hpp"
#include "nnmrom/lstm.hpp"
#include "nnmrom/mdof_system.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace nnmrom {

struct RomProvenance {
    std::uint64_t config_hash = 0;
    std::uint64_t data_digest = 0;
    std::uint64_t ae_seed = 0;
    std::uint64_t lstm_seed = 0;
};

/// Encoder + latent regressor + decoder with the normalization statistics
/// they were trained with; everything needed to predict full-field response
/// from a forcing history.
struct RomModel {
    AutoencoderModel autoencoder;
    LstmRegressor regressor;
    RomProvenance provenance;

    void validate() const;
};

struct RomTrainConfig {
    int bottleneck = 8;
    std::vector<int> cell_dims = {30};
    int lookback = 30;
    bool autoregressive = true;
    AeTrainConfig ae;
    LstmTrainConfig lstm;
    std::uint64_t ae_seed = 1;
    std::uint64_t lstm_seed = 2;
};

/// Trains the autoencoder on pooled displacements, encodes every trajectory
/// to latent sequences, and trains the regressor on (forcing, latents).
RomModel build_rom(const std::vector<Trajectory>& train_trajectories,
                   const RomTrainConfig& config);

enum class PredictStart {
    FromRest,          // zero state, zero-padded warm-up of `lookback` steps
    ContinueFromPrefix // teacher-forced warm-up over a true trajectory prefix
};

/// Free-running latent prediction followed by decoding. In continue mode the
/// prefix trajectory seeds the LSTM state over its trailing `lookback` steps.
Trajectory rom_predict(const RomModel& rom, const ForcingSignal& forcing,
                       PredictStart mode, const Trajectory* prefix = nullptr);

// =============================================================================
// Evaluation
// =============================================================================

struct EvalReport {
    Vec per_dof_mse;
    double mean_mse = 0.0; // averaged over DOFs
    double nmse = 0.0;     // mean MSE / mean per-DOF signal power of the truth
};

EvalReport evaluate(const Trajectory& predicted, const Trajectory& truth);

void save_eval_report_json(const EvalReport& report, const std::string& path);
void save_eval_report_csv(const EvalReport& report, const std::string& path);

/// RMS(nonlinear restoring force)/RMS(linear spring force) per DOF over the
/// trajectory; cubic and Bouc-Wen-free systems yield all-zero ratios only
/// when no nonlinear elements exist.
Vec rms_nonlinearity_ratio(const MdofSystem& sys, const Trajectory& traj);

/// For each bottleneck size, reconstructs the requested DOFs over the
/// requested time windows through that size's autoencoder and writes a long
/// format CSV (size,dof,t,truth,reconstructed). Windows are (t0,t1) seconds.
void interpretation_export(const std::map<int, AutoencoderModel>& per_size_models,
                           const Trajectory& truth, const std::vector<int>& sizes,
                           const std::vector<int>& dofs,
                           const std::vector<std::pair<double, double>>& windows,
                           const std::string& csv_path);

void save_rom(const RomModel& rom, const std::string& path);
RomModel load_rom(const std::string& path);

} // namespace nnmrom
