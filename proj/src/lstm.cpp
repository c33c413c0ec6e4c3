#include "nnmrom/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nnmrom {

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

Vec sigmoid(const Vec& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

// ---------------------------------------------------------------------------
// parameter flattening: per cell w_i,u_i,b_i,w_f,u_f,b_f,w_o,u_o,b_o,w_c,u_c,b_c
// (row-major matrices), then the head layer
// ---------------------------------------------------------------------------

template <typename MatLike>
void put(double*& p, const MatLike& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) *p++ = m(r, c);
}

template <typename MatLike>
void take(const double*& p, MatLike& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = *p++;
}

template <typename CellLike, typename Fn>
void for_each_block(CellLike& cell, Fn&& fn) {
    fn(cell.w_i);
    fn(cell.u_i);
    fn(cell.b_i);
    fn(cell.w_f);
    fn(cell.u_f);
    fn(cell.b_f);
    fn(cell.w_o);
    fn(cell.u_o);
    fn(cell.b_o);
    fn(cell.w_c);
    fn(cell.u_c);
    fn(cell.b_c);
}

Eigen::Index cell_param_count(const LstmCell& cell) {
    Eigen::Index n = 0;
    for_each_block(cell, [&](const auto& block) { n += block.size(); });
    return n;
}

Eigen::Index regressor_param_count(const LstmRegressor& reg) {
    Eigen::Index n = 0;
    for (const auto& cell : reg.layers) n += cell_param_count(cell);
    return n + nn::param_count(reg.head);
}

Vec flatten(const LstmRegressor& reg) {
    Vec out(regressor_param_count(reg));
    double* p = out.data();
    for (const auto& cell : reg.layers)
        for_each_block(cell, [&](const auto& block) { put(p, block); });
    nn::flatten_into(reg.head, p);
    return out;
}

Vec flatten(const std::vector<LstmCellGrads>& cell_grads, const nn::DenseGrads& head_grads,
            Eigen::Index total) {
    Vec out(total);
    double* p = out.data();
    for (const auto& g : cell_grads)
        for_each_block(g, [&](const auto& block) { put(p, block); });
    nn::flatten_into(head_grads, p);
    return out;
}

void unflatten(LstmRegressor& reg, const Vec& params) {
    const double* p = params.data();
    for (auto& cell : reg.layers)
        for_each_block(cell, [&](auto& block) { take(p, block); });
    nn::unflatten_from(reg.head, p);
}

} // namespace

// =============================================================================
// Cell
// =============================================================================

void LstmCell::validate() const {
    const auto cd = cell_dim();
    const auto id = input_dim();
    auto shaped = [&](const Mat& w, const Mat& u, const Vec& b) {
        return w.rows() == cd && w.cols() == id && u.rows() == cd && u.cols() == cd
               && b.size() == cd;
    };
    check(shaped(w_i, u_i, b_i) && shaped(w_f, u_f, b_f) && shaped(w_o, u_o, b_o)
              && shaped(w_c, u_c, b_c),
          "LstmCell: inconsistent gate shapes");
    auto finite = [](const Mat& m) { return m.allFinite(); };
    check(finite(w_i) && finite(u_i) && finite(w_f) && finite(u_f) && finite(w_o)
              && finite(u_o) && finite(w_c) && finite(u_c),
          "LstmCell: non-finite parameters");
}

LstmCell make_lstm_cell(Eigen::Index cell_dim, Eigen::Index input_dim, Rng& rng) {
    LstmCell cell;
    auto init = [&](Mat& m, Eigen::Index rows, Eigen::Index cols) {
        m.resize(rows, cols);
        const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
    };
    init(cell.w_i, cell_dim, input_dim);
    init(cell.u_i, cell_dim, cell_dim);
    init(cell.w_f, cell_dim, input_dim);
    init(cell.u_f, cell_dim, cell_dim);
    init(cell.w_o, cell_dim, input_dim);
    init(cell.u_o, cell_dim, cell_dim);
    init(cell.w_c, cell_dim, input_dim);
    init(cell.u_c, cell_dim, cell_dim);
    cell.b_i = Vec::Zero(cell_dim);
    cell.b_f = Vec::Ones(cell_dim); // start remembering
    cell.b_o = Vec::Zero(cell_dim);
    cell.b_c = Vec::Zero(cell_dim);
    return cell;
}

void cell_step_cached(const LstmCell& cell, const Vec& x, const Vec& h_prev,
                      const Vec& c_prev, Vec& h_out, Vec& c_out, CellStepCache& cache) {
    check(x.size() == cell.input_dim() && h_prev.size() == cell.cell_dim()
              && c_prev.size() == cell.cell_dim(),
          "cell_step: dimension mismatch");
    cache.x = x;
    cache.h_prev = h_prev;
    cache.c_prev = c_prev;
    cache.i = sigmoid(cell.w_i * x + cell.u_i * h_prev + cell.b_i);
    cache.f = sigmoid(cell.w_f * x + cell.u_f * h_prev + cell.b_f);
    cache.o = sigmoid(cell.w_o * x + cell.u_o * h_prev + cell.b_o);
    cache.g = (cell.w_c * x + cell.u_c * h_prev + cell.b_c).array().tanh().matrix();
    cache.c = cache.f.cwiseProduct(c_prev) + cache.i.cwiseProduct(cache.g);
    cache.tanh_c = cache.c.array().tanh().matrix();
    c_out = cache.c;
    h_out = cache.o.cwiseProduct(cache.tanh_c);
}

void cell_step(const LstmCell& cell, const Vec& x, const Vec& h_prev, const Vec& c_prev,
               Vec& h_out, Vec& c_out) {
    CellStepCache cache;
    cell_step_cached(cell, x, h_prev, c_prev, h_out, c_out, cache);
}

LstmCellGrads zero_grads(const LstmCell& cell) {
    LstmCellGrads g;
    const auto cd = cell.cell_dim();
    const auto id = cell.input_dim();
    auto zm = [&](Mat& m, Eigen::Index r, Eigen::Index c) { m = Mat::Zero(r, c); };
    zm(g.w_i, cd, id);
    zm(g.u_i, cd, cd);
    g.b_i = Vec::Zero(cd);
    zm(g.w_f, cd, id);
    zm(g.u_f, cd, cd);
    g.b_f = Vec::Zero(cd);
    zm(g.w_o, cd, id);
    zm(g.u_o, cd, cd);
    g.b_o = Vec::Zero(cd);
    zm(g.w_c, cd, id);
    zm(g.u_c, cd, cd);
    g.b_c = Vec::Zero(cd);
    return g;
}

void cell_backward(const LstmCell& cell, const CellStepCache& cache, const Vec& dh,
                   const Vec& dc_in, Vec& dx, Vec& dh_prev, Vec& dc_prev,
                   LstmCellGrads& grads) {
    const Vec d_o = dh.cwiseProduct(cache.tanh_c);
    const Vec dc = dc_in
                   + dh.cwiseProduct(cache.o)
                         .cwiseProduct((1.0 - cache.tanh_c.array().square()).matrix());
    const Vec d_i = dc.cwiseProduct(cache.g);
    const Vec d_f = dc.cwiseProduct(cache.c_prev);
    const Vec d_g = dc.cwiseProduct(cache.i);
    dc_prev = dc.cwiseProduct(cache.f);

    const Vec dz_i = d_i.cwiseProduct(cache.i).cwiseProduct((1.0 - cache.i.array()).matrix());
    const Vec dz_f = d_f.cwiseProduct(cache.f).cwiseProduct((1.0 - cache.f.array()).matrix());
    const Vec dz_o = d_o.cwiseProduct(cache.o).cwiseProduct((1.0 - cache.o.array()).matrix());
    const Vec dz_g = d_g.cwiseProduct((1.0 - cache.g.array().square()).matrix());

    grads.w_i += dz_i * cache.x.transpose();
    grads.u_i += dz_i * cache.h_prev.transpose();
    grads.b_i += dz_i;
    grads.w_f += dz_f * cache.x.transpose();
    grads.u_f += dz_f * cache.h_prev.transpose();
    grads.b_f += dz_f;
    grads.w_o += dz_o * cache.x.transpose();
    grads.u_o += dz_o * cache.h_prev.transpose();
    grads.b_o += dz_o;
    grads.w_c += dz_g * cache.x.transpose();
    grads.u_c += dz_g * cache.h_prev.transpose();
    grads.b_c += dz_g;

    dx = cell.w_i.transpose() * dz_i + cell.w_f.transpose() * dz_f
         + cell.w_o.transpose() * dz_o + cell.w_c.transpose() * dz_g;
    dh_prev = cell.u_i.transpose() * dz_i + cell.u_f.transpose() * dz_f
              + cell.u_o.transpose() * dz_o + cell.u_c.transpose() * dz_g;
}

// =============================================================================
// Regressor
// =============================================================================

void LstmRegressor::validate() const {
    check(!layers.empty(), "LstmRegressor: no LSTM layers");
    check(lookback >= 1, "LstmRegressor: lookback must be >= 1");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].validate();
        if (i > 0)
            check(layers[i].input_dim() == layers[i - 1].cell_dim(),
                  "LstmRegressor: stacked layer dims do not chain");
    }
    check(head.in_dim() == layers.back().cell_dim(),
          "LstmRegressor: head input dim != top cell dim");
    check(head.activation == nn::Activation::Linear, "LstmRegressor: head must be linear");
    check(input_norm.mean.size() == forcing_dim(),
          "LstmRegressor: input normalization dim mismatch");
    check(output_norm.mean.size() == latent_dim(),
          "LstmRegressor: output normalization dim mismatch");
}

LstmState LstmRegressor::zero_state() const {
    LstmState st;
    for (const auto& cell : layers) {
        st.h.push_back(Vec::Zero(cell.cell_dim()));
        st.c.push_back(Vec::Zero(cell.cell_dim()));
    }
    st.y_prev = Vec::Zero(latent_dim());
    return st;
}

LstmRegressor make_regressor(const std::vector<int>& cell_dims, int forcing_channels,
                             int latent_dim, int lookback, bool autoregressive,
                             std::uint64_t seed) {
    check(!cell_dims.empty(), "make_regressor: need at least one cell");
    check(forcing_channels >= 1 && latent_dim >= 1 && lookback >= 1,
          "make_regressor: bad dimensions");
    Rng rng(seed);
    LstmRegressor reg;
    Eigen::Index input = forcing_channels + (autoregressive ? latent_dim : 0);
    for (int cd : cell_dims) {
        reg.layers.push_back(make_lstm_cell(cd, input, rng));
        input = cd;
    }
    reg.head = nn::make_dense(latent_dim, input, nn::Activation::Linear);
    nn::glorot_init(reg.head, rng);
    reg.lookback = lookback;
    reg.autoregressive = autoregressive;
    reg.input_norm = nn::Normalizer::identity(forcing_channels);
    reg.output_norm = nn::Normalizer::identity(latent_dim);
    reg.validate();
    return reg;
}

Mat front_pad_zeros(const Mat& m, Eigen::Index count) {
    Mat out = Mat::Zero(m.rows(), m.cols() + count);
    out.rightCols(m.cols()) = m;
    return out;
}

// =============================================================================
// Training
// =============================================================================

namespace {

struct StepCaches {
    std::vector<CellStepCache> cells; // per layer
    Vec h_top;
    Vec y_hat;
};

// forward one step from `state` in place; returns the normalized prediction
Vec forward_step(const LstmRegressor& reg, const Vec& x_in, LstmState& state,
                 StepCaches* caches) {
    Vec x = x_in;
    for (std::size_t l = 0; l < reg.layers.size(); ++l) {
        Vec h_new(reg.layers[l].cell_dim()), c_new(reg.layers[l].cell_dim());
        if (caches)
            cell_step_cached(reg.layers[l], x, state.h[l], state.c[l], h_new, c_new,
                             caches->cells[l]);
        else
            cell_step(reg.layers[l], x, state.h[l], state.c[l], h_new, c_new);
        state.h[l] = h_new;
        state.c[l] = c_new;
        x = h_new;
    }
    Vec y = reg.head.weights * x + reg.head.bias;
    if (caches) {
        caches->h_top = x;
        caches->y_hat = y;
    }
    return y;
}

Vec make_input(const LstmRegressor& reg, const Vec& forcing_t, const Vec& y_prev) {
    if (!reg.autoregressive) return forcing_t;
    Vec x(forcing_t.size() + y_prev.size());
    x << forcing_t, y_prev;
    return x;
}

} // namespace

LstmTrainResult train_teacher_forced(LstmRegressor& reg,
                                     const std::vector<SequencePair>& sequences,
                                     const LstmTrainConfig& config) {
    check(!sequences.empty(), "train_teacher_forced: no sequences");
    for (const auto& s : sequences) {
        check(s.forcing.cols() == s.latents.cols(),
              "train_teacher_forced: forcing/latent length mismatch");
        check(s.forcing.rows() == reg.forcing_dim(),
              "train_teacher_forced: forcing channel mismatch");
        check(s.latents.rows() == reg.latent_dim(),
              "train_teacher_forced: latent dim mismatch");
    }

    // fit normalization over the pooled training data
    {
        Eigen::Index total = 0;
        for (const auto& s : sequences) total += s.forcing.cols();
        Mat all_f(reg.forcing_dim(), total), all_y(reg.latent_dim(), total);
        Eigen::Index at = 0;
        for (const auto& s : sequences) {
            all_f.middleCols(at, s.forcing.cols()) = s.forcing;
            all_y.middleCols(at, s.latents.cols()) = s.latents;
            at += s.forcing.cols();
        }
        reg.input_norm = nn::Normalizer::fit(all_f);
        reg.output_norm = nn::Normalizer::fit(all_y);
    }

    // normalized (and optionally zero-padded) working copies
    std::vector<SequencePair> work;
    work.reserve(sequences.size());
    for (const auto& s : sequences) {
        SequencePair w{reg.input_norm.apply(s.forcing), reg.output_norm.apply(s.latents)};
        if (config.zero_pad_start) {
            w.forcing = front_pad_zeros(w.forcing, reg.lookback);
            w.latents = front_pad_zeros(w.latents, reg.lookback);
        }
        work.push_back(std::move(w));
    }

    const Eigen::Index n_params = regressor_param_count(reg);
    Vec params = flatten(reg);
    nn::AdamState adam(n_params, config.lr);
    const auto n_layers = reg.layers.size();
    const Eigen::Index k = reg.latent_dim();
    Rng noise_rng(config.noise_seed);
    Vec best_params;
    double best_rollout = std::numeric_limits<double>::infinity();

    LstmTrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_sse = 0.0;
        Eigen::Index epoch_cols = 0;
        double own_prob = config.own_prediction_prob;
        if (config.own_prediction_ramp_epochs > 0)
            own_prob *= std::min(1.0, static_cast<double>(epoch)
                                          / config.own_prediction_ramp_epochs);
        double noise_level = config.teacher_noise;
        if (config.teacher_noise_final >= 0.0 && config.teacher_noise > 0.0
            && config.epochs > 1) {
            const double frac = static_cast<double>(epoch) / (config.epochs - 1);
            noise_level = config.teacher_noise
                          * std::pow(std::max(config.teacher_noise_final, 1e-12)
                                         / config.teacher_noise,
                                     frac);
        }

        for (const auto& seq : work) {
            LstmState state = reg.zero_state(); // reset at every sequence boundary
            const Eigen::Index total = seq.forcing.cols();
            Vec y_hat_prev = Vec::Zero(k);

            for (Eigen::Index start = 0; start < total; start += reg.lookback) {
                const auto len = std::min<Eigen::Index>(reg.lookback, total - start);
                const bool closed_loop = own_prob > 0.0 && noise_rng.uniform() < own_prob;

                // forward over the window, teacher-forced or on own outputs
                std::vector<StepCaches> caches(static_cast<std::size_t>(len));
                Mat diffs(k, len);
                for (Eigen::Index t = 0; t < len; ++t) {
                    auto& sc = caches[static_cast<std::size_t>(t)];
                    sc.cells.resize(n_layers);
                    const Eigen::Index col = start + t;
                    Vec y_in = col == 0 ? Vec(Vec::Zero(k))
                               : closed_loop ? y_hat_prev
                                             : Vec(seq.latents.col(col - 1));
                    if (noise_level > 0.0)
                        for (Eigen::Index j = 0; j < k; ++j)
                            y_in[j] += noise_level * noise_rng.normal();
                    const Vec x = make_input(reg, seq.forcing.col(col), y_in);
                    const Vec y_hat = forward_step(reg, x, state, &sc);
                    y_hat_prev = y_hat;
                    diffs.col(t) = y_hat - seq.latents.col(col);
                }
                epoch_sse += diffs.squaredNorm();
                epoch_cols += len;

                // truncated BPTT within the window
                const double scale = 2.0 / static_cast<double>(k * len);
                std::vector<LstmCellGrads> cell_grads;
                for (const auto& cell : reg.layers) cell_grads.push_back(zero_grads(cell));
                nn::DenseGrads head_grads = nn::zero_grads(reg.head);

                std::vector<Vec> dh_rec, dc_rec;
                for (const auto& cell : reg.layers) {
                    dh_rec.push_back(Vec::Zero(cell.cell_dim()));
                    dc_rec.push_back(Vec::Zero(cell.cell_dim()));
                }
                for (Eigen::Index t = len - 1; t >= 0; --t) {
                    const auto& sc = caches[static_cast<std::size_t>(t)];
                    const Vec dy = scale * diffs.col(t);
                    head_grads.weights += dy * sc.h_top.transpose();
                    head_grads.bias += dy;
                    Vec dh_above = reg.head.weights.transpose() * dy;
                    for (std::size_t l = n_layers; l-- > 0;) {
                        const Vec dh = dh_above + dh_rec[l];
                        Vec dx(reg.layers[l].input_dim());
                        Vec dh_prev(reg.layers[l].cell_dim());
                        Vec dc_prev(reg.layers[l].cell_dim());
                        cell_backward(reg.layers[l], sc.cells[l], dh, dc_rec[l], dx, dh_prev,
                                      dc_prev, cell_grads[l]);
                        dh_rec[l] = dh_prev;
                        dc_rec[l] = dc_prev;
                        dh_above = dx; // feeds the layer below at this same step
                    }
                }

                Vec grads = flatten(cell_grads, head_grads, n_params);
                nn::clip_by_global_norm(grads, config.clip_norm);
                nn::adam_step(adam, params, grads);
                unflatten(reg, params);
                // state carries across windows (values computed pre-update)
            }
        }

        const double epoch_loss =
            epoch_sse / static_cast<double>(k * std::max<Eigen::Index>(epoch_cols, 1));
        if (!std::isfinite(epoch_loss))
            throw NumericError("train_teacher_forced: loss diverged");
        result.epoch_loss.push_back(epoch_loss);
        adam.lr *= config.lr_decay;

        // simulation-error model selection: free-run over the tail of each
        // sequence (teacher-forced warm-up before it) and keep the best
        if (config.rollout_eval_every > 0 && (epoch + 1) % config.rollout_eval_every == 0) {
            double sse = 0.0;
            Eigen::Index cols = 0;
            for (const auto& seq : work) {
                const Eigen::Index total = seq.forcing.cols();
                const auto tail = std::max<Eigen::Index>(
                    1, static_cast<Eigen::Index>(config.rollout_eval_fraction
                                                 * static_cast<double>(total)));
                const Eigen::Index head = total - tail;
                LstmState state = reg.zero_state();
                for (Eigen::Index t = 0; t < head; ++t) {
                    const Vec y_in = t == 0 ? Vec(Vec::Zero(k)) : Vec(seq.latents.col(t - 1));
                    forward_step(reg, make_input(reg, seq.forcing.col(t), y_in), state, nullptr);
                }
                Vec y_prev = head == 0 ? Vec(Vec::Zero(k)) : Vec(seq.latents.col(head - 1));
                for (Eigen::Index t = head; t < total; ++t) {
                    const Vec y_hat =
                        forward_step(reg, make_input(reg, seq.forcing.col(t), y_prev), state,
                                     nullptr);
                    sse += (y_hat - seq.latents.col(t)).squaredNorm();
                    y_prev = y_hat;
                }
                cols += tail;
            }
            const double rollout = sse / static_cast<double>(k * cols);
            result.rollout_history.push_back(rollout);
            if (std::isfinite(rollout) && rollout < best_rollout) {
                best_rollout = rollout;
                best_params = params;
            }
        }
    }
    if (config.rollout_eval_every > 0 && best_params.size() > 0) {
        unflatten(reg, best_params);
        result.best_rollout_loss = best_rollout;
    }
    result.final_loss = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
    return result;
}

double teacher_forced_loss(const LstmRegressor& reg, const SequencePair& seq) {
    check(seq.forcing.cols() == seq.latents.cols(), "teacher_forced_loss: length mismatch");
    const Mat fn = reg.input_norm.apply(seq.forcing);
    const Mat yn = reg.output_norm.apply(seq.latents);
    LstmState state = reg.zero_state();
    double sse = 0.0;
    for (Eigen::Index t = 0; t < fn.cols(); ++t) {
        const Vec y_teacher = t == 0 ? Vec(Vec::Zero(yn.rows())) : Vec(yn.col(t - 1));
        const Vec y_hat = forward_step(reg, make_input(reg, fn.col(t), y_teacher), state, nullptr);
        sse += (y_hat - yn.col(t)).squaredNorm();
    }
    return sse / static_cast<double>(yn.size());
}

void teacher_forced_warmup(const LstmRegressor& reg, const Mat& forcing, const Mat& latents,
                           LstmState& state) {
    check(forcing.cols() == latents.cols(), "teacher_forced_warmup: length mismatch");
    const Mat fn = reg.input_norm.apply(forcing);
    const Mat yn = reg.output_norm.apply(latents);
    for (Eigen::Index t = 0; t < fn.cols(); ++t) {
        const Vec y_teacher = t == 0 ? state.y_prev : Vec(yn.col(t - 1));
        forward_step(reg, make_input(reg, fn.col(t), y_teacher), state, nullptr);
    }
    if (fn.cols() > 0) state.y_prev = yn.col(fn.cols() - 1);
}

// =============================================================================
// Prediction
// =============================================================================

Mat predict_free_running(const LstmRegressor& reg, const Mat& forcing,
                         const std::optional<Vec>& initial_latent, LstmState* state) {
    check(forcing.rows() == reg.forcing_dim(),
          "predict_free_running: forcing channel mismatch");
    const Mat fn = reg.input_norm.apply(forcing);
    LstmState local = state ? *state : reg.zero_state();
    if (initial_latent) local.y_prev = reg.output_norm.apply(*initial_latent);

    Mat out(reg.latent_dim(), fn.cols());
    for (Eigen::Index t = 0; t < fn.cols(); ++t) {
        const Vec y = forward_step(reg, make_input(reg, fn.col(t), local.y_prev), local, nullptr);
        if (!y.allFinite())
            throw NumericError("predict_free_running: non-finite prediction at step "
                                   + std::to_string(t), t);
        out.col(t) = y;
        local.y_prev = y;
    }
    if (state) *state = local;
    return reg.output_norm.invert(out);
}

} // namespace nnmrom
