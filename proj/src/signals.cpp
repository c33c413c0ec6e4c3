#include "nnmrom/signals.hpp"

#include <cmath>

namespace nnmrom {

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::vector<int> default_map(int n_channels, std::vector<int> map) {
    if (map.empty()) {
        map.resize(static_cast<std::size_t>(n_channels));
        for (int i = 0; i < n_channels; ++i) map[static_cast<std::size_t>(i)] = i;
    }
    return map;
}

struct Biquad {
    double b0, b1, b2, a1, a2; // y = b0 x + b1 x1 + b2 x2 - a1 y1 - a2 y2
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

    double step(double x) {
        const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x;
        y2 = y1;
        y1 = y;
        return y;
    }
};

// Low-pass biquad from the analog prototype s^2 + (1/Q)s + 1 via the bilinear
// transform with frequency pre-warping.
Biquad lowpass_biquad(double cutoff_hz, double dt, double q) {
    const double w0 = 2.0 * M_PI * cutoff_hz * dt;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    Biquad bq{};
    bq.b0 = (1.0 - cw) / 2.0 / a0;
    bq.b1 = (1.0 - cw) / a0;
    bq.b2 = bq.b0;
    bq.a1 = -2.0 * cw / a0;
    bq.a2 = (1.0 - alpha) / a0;
    return bq;
}

} // namespace

void ForcingSignal::validate() const {
    check(dt > 0.0, "ForcingSignal: dt must be positive");
    check(samples.rows() == static_cast<Eigen::Index>(channel_map.size()),
          "ForcingSignal: channel_map length must equal channel count");
}

Vec ForcingSignal::at_time(double t) const {
    const Eigen::Index n = steps();
    const double s = t / dt;
    if (s <= 0.0) return samples.col(0);
    if (s >= static_cast<double>(n - 1)) return samples.col(n - 1);
    const auto k = static_cast<Eigen::Index>(std::floor(s));
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * samples.col(k) + w * samples.col(k + 1);
}

std::vector<double> butterworth4_lowpass(const std::vector<double>& x,
                                         double cutoff_hz, double dt) {
    check(cutoff_hz > 0.0 && dt > 0.0, "butterworth4_lowpass: bad cutoff or dt");
    check(cutoff_hz < 0.5 / dt, "butterworth4_lowpass: cutoff must be below Nyquist");
    // Butterworth pole-pair Q values for order 4.
    Biquad s1 = lowpass_biquad(cutoff_hz, dt, 0.5411961001461969);
    Biquad s2 = lowpass_biquad(cutoff_hz, dt, 1.3065629648763766);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = s2.step(s1.step(x[i]));
    return y;
}

ForcingSignal make_filtered_noise(int n_channels, Eigen::Index steps, double dt,
                                  double cutoff_hz, double target_variance,
                                  std::uint64_t seed, std::vector<int> channel_map) {
    check(n_channels > 0 && steps > 0, "make_filtered_noise: empty signal requested");
    check(dt > 0.0, "make_filtered_noise: dt must be positive");
    check(cutoff_hz < 0.5 / dt, "make_filtered_noise: cutoff must be below Nyquist 1/(2 dt)");
    check(target_variance >= 0.0, "make_filtered_noise: variance must be >= 0");

    const auto warmup = static_cast<Eigen::Index>(std::llround(1.0 / dt));
    ForcingSignal sig;
    sig.dt = dt;
    sig.samples.resize(n_channels, steps);
    sig.channel_map = default_map(n_channels, std::move(channel_map));

    for (int ch = 0; ch < n_channels; ++ch) {
        Rng rng(seed + static_cast<std::uint64_t>(ch));
        std::vector<double> white(static_cast<std::size_t>(steps + warmup));
        for (auto& w : white) w = rng.normal();
        const std::vector<double> filtered = butterworth4_lowpass(white, cutoff_hz, dt);

        double mean = 0.0;
        for (Eigen::Index i = 0; i < steps; ++i)
            mean += filtered[static_cast<std::size_t>(warmup + i)];
        mean /= static_cast<double>(steps);
        double var = 0.0;
        for (Eigen::Index i = 0; i < steps; ++i) {
            const double d = filtered[static_cast<std::size_t>(warmup + i)] - mean;
            var += d * d;
        }
        var /= static_cast<double>(steps);
        const double scale = var > 0.0 ? std::sqrt(target_variance / var) : 0.0;
        for (Eigen::Index i = 0; i < steps; ++i)
            sig.samples(ch, i) = scale * (filtered[static_cast<std::size_t>(warmup + i)] - mean);
    }
    sig.validate();
    return sig;
}

ForcingSignal make_sinusoid(int n_channels, Eigen::Index steps, double dt,
                            double freq_hz, const std::vector<double>& amplitudes,
                            const std::vector<double>& phase_offsets,
                            std::vector<int> channel_map) {
    check(n_channels > 0 && steps > 0, "make_sinusoid: empty signal requested");
    check(dt > 0.0, "make_sinusoid: dt must be positive");
    check(freq_hz < 0.5 / dt, "make_sinusoid: frequency must be below Nyquist");
    check(static_cast<int>(amplitudes.size()) == n_channels,
          "make_sinusoid: one amplitude per channel required");
    check(phase_offsets.empty() || static_cast<int>(phase_offsets.size()) == n_channels,
          "make_sinusoid: phase offsets must be empty or one per channel");

    ForcingSignal sig;
    sig.dt = dt;
    sig.samples.resize(n_channels, steps);
    sig.channel_map = default_map(n_channels, std::move(channel_map));
    const double omega = 2.0 * M_PI * freq_hz;
    for (int ch = 0; ch < n_channels; ++ch) {
        const double phi = phase_offsets.empty() ? 0.0 : phase_offsets[static_cast<std::size_t>(ch)];
        const double amp = amplitudes[static_cast<std::size_t>(ch)];
        for (Eigen::Index i = 0; i < steps; ++i)
            sig.samples(ch, i) = amp * std::sin(omega * (static_cast<double>(i) * dt) + phi);
    }
    sig.validate();
    return sig;
}

} // namespace nnmrom
