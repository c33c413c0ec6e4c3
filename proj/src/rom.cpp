#include "nnmrom/rom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace nnmrom {

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::uint64_t hash_config(const RomTrainConfig& cfg) {
    std::string s = std::to_string(cfg.bottleneck) + "|" + std::to_string(cfg.lookback) + "|"
                    + std::to_string(cfg.autoregressive) + "|";
    for (int c : cfg.cell_dims) s += std::to_string(c) + ",";
    s += "|" + std::to_string(cfg.ae.max_epochs) + "|" + std::to_string(cfg.ae.lr) + "|"
         + std::to_string(cfg.lstm.epochs) + "|" + std::to_string(cfg.lstm.lr) + "|"
         + std::to_string(cfg.ae_seed) + "|" + std::to_string(cfg.lstm_seed);
    return fnv1a64(s);
}

std::uint64_t digest_trajectories(const std::vector<Trajectory>& trajs) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : trajs) {
        h = fnv1a64(t.displacements.data(),
                    static_cast<std::size_t>(t.displacements.size()) * sizeof(double), h);
        h = fnv1a64(t.forcing.samples.data(),
                    static_cast<std::size_t>(t.forcing.samples.size()) * sizeof(double), h);
    }
    return h;
}

} // namespace

void RomModel::validate() const {
    autoencoder.validate();
    regressor.validate();
    check(regressor.latent_dim() == autoencoder.bottleneck_dim,
          "RomModel: regressor output dim != autoencoder bottleneck");
}

RomModel build_rom(const std::vector<Trajectory>& train_trajectories,
                   const RomTrainConfig& config) {
    check(!train_trajectories.empty(), "build_rom: no training trajectories");
    const int n_dof = train_trajectories.front().n_dof();
    const int channels = train_trajectories.front().forcing.channels();
    for (const auto& t : train_trajectories) {
        check(t.n_dof() == n_dof, "build_rom: trajectories disagree on n_dof");
        check(t.forcing.channels() == channels, "build_rom: forcing channel mismatch");
    }

    RomModel rom;
    rom.autoencoder = build_paper_ae(n_dof, config.bottleneck, config.ae_seed);
    train_ae(rom.autoencoder, train_trajectories, config.ae);

    std::vector<SequencePair> sequences;
    sequences.reserve(train_trajectories.size());
    for (const auto& t : train_trajectories)
        sequences.push_back({t.forcing.samples, encode(rom.autoencoder, t.displacements)});

    rom.regressor = make_regressor(config.cell_dims, channels, config.bottleneck,
                                   config.lookback, config.autoregressive, config.lstm_seed);
    train_teacher_forced(rom.regressor, sequences, config.lstm);

    rom.provenance.config_hash = hash_config(config);
    rom.provenance.data_digest = digest_trajectories(train_trajectories);
    rom.provenance.ae_seed = config.ae_seed;
    rom.provenance.lstm_seed = config.lstm_seed;
    rom.validate();
    return rom;
}

Trajectory rom_predict(const RomModel& rom, const ForcingSignal& forcing, PredictStart mode,
                       const Trajectory* prefix) {
    rom.validate();
    forcing.validate();
    check(forcing.channels() == static_cast<int>(rom.regressor.forcing_dim()),
          "rom_predict: forcing channel mismatch");

    Mat latents;
    if (mode == PredictStart::ContinueFromPrefix) {
        check(prefix != nullptr, "rom_predict: continue mode needs a prefix trajectory");
        const Eigen::Index warm =
            std::min<Eigen::Index>(rom.regressor.lookback, prefix->steps());
        check(warm > 0, "rom_predict: prefix is empty");
        const Mat prefix_latents =
            encode(rom.autoencoder, prefix->displacements.rightCols(warm));
        const Mat prefix_forcing = prefix->forcing.samples.rightCols(warm);
        LstmState state = rom.regressor.zero_state();
        teacher_forced_warmup(rom.regressor, prefix_forcing, prefix_latents, state);
        latents = predict_free_running(rom.regressor, forcing.samples, std::nullopt, &state);
    } else {
        // zero state plus a `lookback` warm-up that is zero in normalized
        // space (the padding regime the regressor was trained with); a raw
        // zero column would not normalize to zero, so invert the normalizer
        const Eigen::Index warm = rom.regressor.lookback;
        Mat full(forcing.channels(), warm + forcing.steps());
        full.leftCols(warm).colwise() =
            rom.regressor.input_norm.invert(Vec(Vec::Zero(forcing.channels())));
        full.rightCols(forcing.steps()) = forcing.samples;
        const Mat all = predict_free_running(rom.regressor, full);
        latents = all.rightCols(forcing.steps());
    }

    Trajectory out;
    out.dt = forcing.dt;
    out.displacements = decode(rom.autoencoder, latents);
    out.forcing = forcing;
    out.validate();
    return out;
}

EvalReport evaluate(const Trajectory& predicted, const Trajectory& truth) {
    check(predicted.displacements.rows() == truth.displacements.rows()
              && predicted.displacements.cols() == truth.displacements.cols(),
          "evaluate: shape mismatch");
    const auto n_dof = truth.displacements.rows();
    EvalReport report;
    report.per_dof_mse = Vec(n_dof);
    double power_sum = 0.0;
    for (Eigen::Index i = 0; i < n_dof; ++i) {
        report.per_dof_mse[i] =
            (predicted.displacements.row(i) - truth.displacements.row(i)).squaredNorm()
            / static_cast<double>(truth.displacements.cols());
        power_sum += truth.displacements.row(i).squaredNorm()
                     / static_cast<double>(truth.displacements.cols());
    }
    report.mean_mse = report.per_dof_mse.mean();
    const double mean_power = power_sum / static_cast<double>(n_dof);
    if (mean_power <= 0.0)
        throw NumericError("evaluate: zero signal power, NMSE undefined");
    report.nmse = report.mean_mse / mean_power;
    return report;
}

void save_eval_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json j;
    j["mean_mse"] = report.mean_mse;
    j["nmse"] = report.nmse;
    j["per_dof_mse"] = std::vector<double>(report.per_dof_mse.data(),
                                           report.per_dof_mse.data() + report.per_dof_mse.size());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << j.dump(2) << "\n";
}

void save_eval_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "dof,mse\n";
    char buf[32];
    for (Eigen::Index i = 0; i < report.per_dof_mse.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", report.per_dof_mse[i]);
        os << i << ',' << buf << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", report.mean_mse);
    os << "mean," << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.17g", report.nmse);
    os << "nmse," << buf << '\n';
}

Vec rms_nonlinearity_ratio(const MdofSystem& sys, const Trajectory& traj) {
    check(!sys.cubic_springs.empty(), "rms_nonlinearity_ratio: system has no cubic elements");
    check(traj.n_dof() == sys.n_dof, "rms_nonlinearity_ratio: trajectory/system mismatch");
    const auto steps = traj.steps();

    Mat linear_f = Mat::Zero(sys.n_dof, steps);
    Mat nonlinear_f = Mat::Zero(sys.n_dof, steps);
    for (const auto& e : sys.linear_springs) {
        for (Eigen::Index t = 0; t < steps; ++t) {
            const double ub = e.b == kGround ? 0.0 : traj.displacements(e.b, t);
            const double f = e.value * (traj.displacements(e.a, t) - ub);
            linear_f(e.a, t) += f;
            if (e.b != kGround) linear_f(e.b, t) -= f;
        }
    }
    for (const auto& e : sys.cubic_springs) {
        for (Eigen::Index t = 0; t < steps; ++t) {
            const double ub = e.b == kGround ? 0.0 : traj.displacements(e.b, t);
            const double d = traj.displacements(e.a, t) - ub;
            const double f = e.value * d * d * d;
            nonlinear_f(e.a, t) += f;
            if (e.b != kGround) nonlinear_f(e.b, t) -= f;
        }
    }

    Vec ratio(sys.n_dof);
    for (int i = 0; i < sys.n_dof; ++i) {
        const double lin_rms = std::sqrt(linear_f.row(i).squaredNorm()
                                         / static_cast<double>(steps));
        const double nl_rms = std::sqrt(nonlinear_f.row(i).squaredNorm()
                                        / static_cast<double>(steps));
        if (lin_rms <= 0.0)
            throw NumericError("rms_nonlinearity_ratio: zero linear RMS at dof "
                                   + std::to_string(i));
        ratio[i] = nl_rms / lin_rms;
    }
    return ratio;
}

void interpretation_export(const std::map<int, AutoencoderModel>& per_size_models,
                           const Trajectory& truth, const std::vector<int>& sizes,
                           const std::vector<int>& dofs,
                           const std::vector<std::pair<double, double>>& windows,
                           const std::string& csv_path) {
    check(!sizes.empty() && !dofs.empty() && !windows.empty(),
          "interpretation_export: empty request");
    for (int size : sizes)
        if (per_size_models.find(size) == per_size_models.end())
            throw std::invalid_argument("interpretation_export: missing sweep artifact for size "
                                        + std::to_string(size));
    for (int dof : dofs)
        check(dof >= 0 && dof < truth.n_dof(), "interpretation_export: dof out of range");

    std::ofstream os(csv_path);
    if (!os) throw std::runtime_error("cannot open " + csv_path + " for writing");
    os << "size,dof,t,truth,reconstructed\n";
    char buf[32];
    for (int size : sizes) {
        const auto& model = per_size_models.at(size);
        const Mat recon = decode(model, encode(model, truth.displacements));
        for (const auto& window : windows) {
            auto first = static_cast<Eigen::Index>(std::ceil(window.first / truth.dt));
            auto last = static_cast<Eigen::Index>(std::floor(window.second / truth.dt));
            first = std::max<Eigen::Index>(first, 0);
            last = std::min<Eigen::Index>(last, truth.steps() - 1);
            check(first <= last, "interpretation_export: empty window");
            for (int dof : dofs) {
                for (Eigen::Index t = first; t <= last; ++t) {
                    os << size << ',' << dof << ',';
                    std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(t) * truth.dt);
                    os << buf << ',';
                    std::snprintf(buf, sizeof(buf), "%.17g", truth.displacements(dof, t));
                    os << buf << ',';
                    std::snprintf(buf, sizeof(buf), "%.17g", recon(dof, t));
                    os << buf << '\n';
                }
            }
        }
    }
}

} // namespace nnmrom
