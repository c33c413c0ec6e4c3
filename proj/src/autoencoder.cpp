#include "nnmrom/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace nnmrom {

using nn::Activation;
using nn::Mlp;

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

Mlp assemble(const AutoencoderModel& model) {
    Mlp net;
    net.layers = model.encoder.layers;
    net.layers.insert(net.layers.end(), model.decoder.layers.begin(),
                      model.decoder.layers.end());
    return net;
}

void split_back(AutoencoderModel& model, const Mlp& net) {
    const std::size_t ne = model.encoder.layers.size();
    for (std::size_t i = 0; i < ne; ++i) model.encoder.layers[i] = net.layers[i];
    for (std::size_t i = 0; i < model.decoder.layers.size(); ++i)
        model.decoder.layers[i] = net.layers[ne + i];
}

Mat pool_displacements(const std::vector<Trajectory>& trajectories) {
    check(!trajectories.empty(), "train_ae: no trajectories");
    const Eigen::Index n_dof = trajectories.front().displacements.rows();
    Eigen::Index total = 0;
    for (const auto& t : trajectories) {
        check(t.displacements.rows() == n_dof, "train_ae: trajectories disagree on n_dof");
        total += t.steps();
    }
    Mat pooled(n_dof, total);
    Eigen::Index at = 0;
    for (const auto& t : trajectories) {
        pooled.middleCols(at, t.steps()) = t.displacements;
        at += t.steps();
    }
    return pooled;
}

} // namespace

void AutoencoderModel::validate() const {
    check(!encoder.layers.empty() && !decoder.layers.empty(),
          "AutoencoderModel: empty encoder or decoder");
    check(encoder.out_dim() == bottleneck_dim, "AutoencoderModel: encoder output != bottleneck");
    check(decoder.in_dim() == bottleneck_dim, "AutoencoderModel: decoder input != bottleneck");
    check(encoder.in_dim() == decoder.out_dim(), "AutoencoderModel: outer dims differ");
    check(norm.mean.size() == encoder.in_dim() && norm.std.size() == encoder.in_dim(),
          "AutoencoderModel: normalization dims differ from n_dof");
    check((norm.std.array() > 0.0).all(), "AutoencoderModel: std entries must be positive");
}

AutoencoderModel build_ae(int n_dof, int bottleneck, Activation hidden_activation,
                          std::uint64_t seed) {
    check(bottleneck >= 1 && bottleneck <= n_dof, "build_ae: bottleneck must be in [1, n_dof]");
    Rng rng(seed);
    AutoencoderModel model;
    model.bottleneck_dim = bottleneck;
    model.encoder.layers.push_back(nn::make_dense(n_dof, n_dof, hidden_activation));
    model.encoder.layers.push_back(nn::make_dense(bottleneck, n_dof, hidden_activation));
    model.decoder.layers.push_back(nn::make_dense(n_dof, bottleneck, hidden_activation));
    model.decoder.layers.push_back(nn::make_dense(n_dof, n_dof, Activation::Linear));
    for (auto& l : model.encoder.layers) nn::glorot_init(l, rng);
    for (auto& l : model.decoder.layers) nn::glorot_init(l, rng);
    model.norm = nn::Normalizer::identity(n_dof);
    return model;
}

AutoencoderModel build_paper_ae(int n_dof, int bottleneck, std::uint64_t seed) {
    return build_ae(n_dof, bottleneck, Activation::Tanh, seed);
}

Mat encode(const AutoencoderModel& model, const Mat& displacements) {
    check(displacements.rows() == model.encoder.in_dim(), "encode: channel count mismatch");
    return model.encoder.forward(model.norm.apply(displacements));
}

Mat decode(const AutoencoderModel& model, const Mat& latents) {
    check(latents.rows() == model.bottleneck_dim, "decode: latent dim mismatch");
    return model.norm.invert(model.decoder.forward(latents));
}

double reconstruction_mse(const AutoencoderModel& model, const Mat& displacements) {
    const Mat xn = model.norm.apply(displacements);
    const Mat recon = model.decoder.forward(model.encoder.forward(xn));
    return nn::mse_loss(recon, xn).value;
}

AeTrainResult train_ae(AutoencoderModel& model, const Mat& snapshot_columns,
                       const AeTrainConfig& config) {
    check(snapshot_columns.cols() >= 4, "train_ae: need at least a few snapshot columns");
    check(config.batch_size >= 1 && config.max_epochs >= 1, "train_ae: bad config");

    model.norm = nn::Normalizer::fit(snapshot_columns);
    const Mat x = model.norm.apply(snapshot_columns);

    // deterministic shuffled holdout split
    Rng rng(config.shuffle_seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i))]);

    const auto n_holdout = static_cast<Eigen::Index>(
        std::floor(config.holdout_fraction * static_cast<double>(x.cols())));
    const auto n_train = x.cols() - n_holdout;
    check(n_train >= 1, "train_ae: holdout fraction leaves no training data");

    Mat train(x.rows(), n_train), holdout(x.rows(), std::max<Eigen::Index>(n_holdout, 1));
    for (Eigen::Index i = 0; i < n_train; ++i)
        train.col(i) = x.col(order[static_cast<std::size_t>(i)]);
    if (n_holdout > 0)
        for (Eigen::Index i = 0; i < n_holdout; ++i)
            holdout.col(i) = x.col(order[static_cast<std::size_t>(n_train + i)]);
    const Mat& monitor = n_holdout > 0 ? holdout : train;

    Mlp net = assemble(model);
    Vec params = nn::flatten_params(net);
    nn::AdamState adam(params.size(), config.lr);

    AeTrainResult result;
    double best = std::numeric_limits<double>::infinity();
    Vec best_params = params;
    int since_best = 0;

    std::vector<Eigen::Index> train_order(static_cast<std::size_t>(n_train));
    std::iota(train_order.begin(), train_order.end(), 0);

    auto run_phase = [&](int epochs, double lr, bool early_stop) {
        adam.lr = lr;
        for (int epoch = 0; epoch < epochs; ++epoch) {
            // fresh shuffle per epoch
            for (std::size_t i = train_order.size(); i > 1; --i)
                std::swap(train_order[i - 1],
                          train_order[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i))]);

            for (Eigen::Index start = 0; start < n_train; start += config.batch_size) {
                const auto len = std::min<Eigen::Index>(config.batch_size, n_train - start);
                Mat batch(x.rows(), len);
                for (Eigen::Index i = 0; i < len; ++i)
                    batch.col(i) = train.col(train_order[static_cast<std::size_t>(start + i)]);
                nn::MlpCache cache;
                auto grads = nn::zero_grads(net);
                const Mat out = nn::mlp_forward_cached(net, batch, cache);
                const auto loss = nn::mse_loss(out, batch);
                if (!std::isfinite(loss.value))
                    throw NumericError("train_ae: loss diverged");
                nn::mlp_backward(net, cache, loss.grad, grads);
                nn::adam_step(adam, params, nn::flatten_grads(grads));
                nn::unflatten_params(net, params);
            }

            const double val = nn::mse_loss(net.forward(monitor), monitor).value;
            if (!std::isfinite(val)) throw NumericError("train_ae: validation loss diverged");
            result.raw_loss_history.push_back(val);
            if (val < best) {
                best = val;
                best_params = params;
                since_best = 0;
            } else {
                ++since_best;
            }
            result.loss_history.push_back(best);
            ++result.epochs_run;
            if (early_stop && since_best > config.patience) break;
        }
    };

    run_phase(config.max_epochs, config.lr, true);
    if (config.fine_tune_epochs > 0) {
        params = best_params;
        nn::unflatten_params(net, params);
        since_best = 0;
        run_phase(config.fine_tune_epochs, config.fine_tune_lr, true);
    }

    nn::unflatten_params(net, best_params);
    split_back(model, net);
    result.train_mse = nn::mse_loss(net.forward(train), train).value;
    result.holdout_mse = best;
    return result;
}

AeTrainResult train_ae(AutoencoderModel& model, const std::vector<Trajectory>& trajectories,
                       const AeTrainConfig& config) {
    return train_ae(model, pool_displacements(trajectories), config);
}

SweepResult bottleneck_sweep(const Mat& train_columns, const Mat& test_columns,
                             const std::vector<int>& sizes, int restarts,
                             const AeTrainConfig& config, std::uint64_t seed_base) {
    check(!sizes.empty(), "bottleneck_sweep: sizes must be non-empty");
    check(restarts >= 1, "bottleneck_sweep: restarts must be >= 1");
    const int n_dof = static_cast<int>(train_columns.rows());

    SweepResult sweep;
    for (int size : sizes) {
        for (int restart = 0; restart < restarts; ++restart) {
            const std::uint64_t seed =
                seed_base + 1000ULL * static_cast<std::uint64_t>(size)
                + static_cast<std::uint64_t>(restart);
            SweepCell cell{size, restart,
                           std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN()};
            try {
                AutoencoderModel model = build_paper_ae(n_dof, size, seed);
                AeTrainConfig cfg = config;
                cfg.shuffle_seed = seed ^ 0x5bd1e995ULL;
                const auto res = train_ae(model, train_columns, cfg);
                cell.train_mse = res.train_mse;
                cell.test_mse = reconstruction_mse(model, test_columns);
                auto it = sweep.best_test_mse.find(size);
                if (it == sweep.best_test_mse.end() || cell.test_mse < it->second) {
                    sweep.best_test_mse[size] = cell.test_mse;
                    sweep.best_models[size] = std::move(model);
                }
            } catch (const NumericError&) {
                // diverged restart: keep the NaN cell
            }
            sweep.cells.push_back(cell);
        }
    }
    return sweep;
}

void save_sweep_csv(const SweepResult& sweep, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "bottleneck,restart,train_mse,test_mse\n";
    char buf[32];
    for (const auto& cell : sweep.cells) {
        os << cell.bottleneck << ',' << cell.restart << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", cell.train_mse);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", cell.test_mse);
        os << buf << '\n';
    }
}

} // namespace nnmrom
