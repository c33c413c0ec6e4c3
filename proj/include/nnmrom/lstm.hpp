// Stacked LSTM sequence regressor with explicitly autoregressive inputs,
// stateful operation, and teacher-forced training under truncated BPTT.
#pragma once

#include "nnmrom/nn/core.hpp"

#include <optional>
#include <vector>

namespace nnmrom {

// =============================================================================
// Cell
// =============================================================================

/// Gate weights of one LSTM cell. W maps the step input, U the previous
/// hidden state; i/f/o are the sigmoid gates, c the tanh candidate.
struct LstmCell {
    Mat w_i, u_i;
    Vec b_i;
    Mat w_f, u_f;
    Vec b_f;
    Mat w_o, u_o;
    Vec b_o;
    Mat w_c, u_c;
    Vec b_c;

    Eigen::Index input_dim() const { return w_i.cols(); }
    Eigen::Index cell_dim() const { return w_i.rows(); }
    void validate() const;
};

/// Glorot-initialized cell with forget-gate bias 1.
LstmCell make_lstm_cell(Eigen::Index cell_dim, Eigen::Index input_dim, Rng& rng);

/// One step of the standard LSTM recurrence:
///   i,f,o = sigma(W x + U h_prev + b),  g = tanh(W_c x + U_c h_prev + b_c)
///   c = f*c_prev + i*g,                 h = o*tanh(c)
void cell_step(const LstmCell& cell, const Vec& x, const Vec& h_prev, const Vec& c_prev,
               Vec& h_out, Vec& c_out);

struct CellStepCache {
    Vec x, h_prev, c_prev;
    Vec i, f, o, g, c, tanh_c;
};

void cell_step_cached(const LstmCell& cell, const Vec& x, const Vec& h_prev,
                      const Vec& c_prev, Vec& h_out, Vec& c_out, CellStepCache& cache);

struct LstmCellGrads {
    Mat w_i, u_i;
    Vec b_i;
    Mat w_f, u_f;
    Vec b_f;
    Mat w_o, u_o;
    Vec b_o;
    Mat w_c, u_c;
    Vec b_c;
};

LstmCellGrads zero_grads(const LstmCell& cell);

/// Backward through one cached step. `dh` and `dc_in` are the gradients
/// arriving at this step's h and c outputs; returns gradients for the step
/// input and the previous state, accumulating parameter gradients.
void cell_backward(const LstmCell& cell, const CellStepCache& cache, const Vec& dh,
                   const Vec& dc_in, Vec& dx, Vec& dh_prev, Vec& dc_prev,
                   LstmCellGrads& grads);

// =============================================================================
// Regressor
// =============================================================================

/// Hidden/cell state per layer plus the previous (normalized) output used as
/// the autoregressive input; carrying this value between calls is what makes
/// the regressor stateful.
struct LstmState {
    std::vector<Vec> h;
    std::vector<Vec> c;
    Vec y_prev;
};

struct LstmRegressor {
    std::vector<LstmCell> layers; // 1 or 2 in the configurations used here
    nn::DenseLayer head;          // linear output layer
    int lookback = 30;            // BPTT truncation length
    bool autoregressive = true;
    nn::Normalizer input_norm;    // forcing channels
    nn::Normalizer output_norm;   // latent channels

    Eigen::Index latent_dim() const { return head.out_dim(); }
    Eigen::Index forcing_dim() const {
        return layers.front().input_dim() - (autoregressive ? latent_dim() : 0);
    }
    void validate() const;

    LstmState zero_state() const;
};

LstmRegressor make_regressor(const std::vector<int>& cell_dims, int forcing_channels,
                             int latent_dim, int lookback, bool autoregressive,
                             std::uint64_t seed);

// =============================================================================
// Training
// =============================================================================

/// One training sequence: forcing (channels x T) and target latents (k x T).
struct SequencePair {
    Mat forcing;
    Mat latents;
};

struct LstmTrainConfig {
    int epochs = 300;
    double lr = 1e-3;
    double lr_decay = 1.0;      // per-epoch multiplier
    double clip_norm = 5.0;     // global-norm gradient clip
    bool zero_pad_start = true; // front-pad each sequence with `lookback` zeros
    double teacher_noise = 0.0; // stddev of jitter on autoregressive inputs (normalized space)
    double teacher_noise_final = -1.0; // when >= 0, geometric anneal towards this level
    // scheduled sampling: probability that a whole BPTT window runs on the
    // model's own fed-back predictions instead of the teacher signal
    double own_prediction_prob = 0.0;
    int own_prediction_ramp_epochs = 0; // linear ramp of that probability
    std::uint64_t noise_seed = 7;
    // free-running rollout validation on the tail of each training sequence;
    // keeps the parameters with the best rollout error (simulation-error
    // early stopping). 0 disables.
    int rollout_eval_every = 0;
    double rollout_eval_fraction = 0.2;
};

struct LstmTrainResult {
    std::vector<double> epoch_loss;
    std::vector<double> rollout_history;
    double final_loss = 0.0;
    double best_rollout_loss = 0.0;
};

/// Teacher-forced training: the autoregressive input at step t is the true
/// latent at t-1; gradients are truncated at `lookback` steps; hidden/cell
/// state is carried within a sequence and reset to zero at every sequence
/// boundary. Fits the input/output normalizers from the training data.
LstmTrainResult train_teacher_forced(LstmRegressor& reg,
                                     const std::vector<SequencePair>& sequences,
                                     const LstmTrainConfig& config);

/// Mean squared one-step-ahead error of the teacher-forced pass over one
/// sequence (normalized space), starting from a zero state.
double teacher_forced_loss(const LstmRegressor& reg, const SequencePair& seq);

/// Runs the teacher-forced recurrence over (forcing, true latents) to warm up
/// `state` for a subsequent free-running continuation.
void teacher_forced_warmup(const LstmRegressor& reg, const Mat& forcing,
                           const Mat& latents, LstmState& state);

// =============================================================================
// Prediction
// =============================================================================

/// Free-running (simulation-mode) prediction: repeated one-step-ahead
/// predictions feeding the model's own previous output back as input, with
/// hidden/cell state carried across all steps. Returns denormalized latents,
/// one column per forcing column. `state`, when given, is used as the
/// starting state and updated in place (stateful chunked prediction);
/// `initial_latent` (raw units) overrides the autoregressive seed.
Mat predict_free_running(const LstmRegressor& reg, const Mat& forcing,
                         const std::optional<Vec>& initial_latent = std::nullopt,
                         LstmState* state = nullptr);

Mat front_pad_zeros(const Mat& m, Eigen::Index count);

void save_regressor(const LstmRegressor& reg, const std::string& path);
LstmRegressor load_regressor(const std::string& path);

} // namespace nnmrom
