// Forcing-signal synthesis: band-limited white noise and sinusoidal loads.
#pragma once

#include "nnmrom/common.hpp"

#include <vector>

namespace nnmrom {

/// Multi-channel forcing sampled on a fixed grid. Row i of `samples` is
/// channel i; `channel_map[i]` names the DOF the channel drives.
struct ForcingSignal {
    double dt = 0.0;
    Mat samples;                 // channels x steps [N]
    std::vector<int> channel_map;

    int channels() const { return static_cast<int>(samples.rows()); }
    Eigen::Index steps() const { return samples.cols(); }
    void validate() const;

    /// Linear interpolation between samples; clamps at the ends.
    Vec at_time(double t) const;
};

/// Per-channel independent Gaussian white noise, low-pass filtered by a
/// 4th-order Butterworth (run forward, 1 s warm-up discarded), then centered
/// and rescaled so each channel's empirical (1/N) variance equals
/// `target_variance` exactly. Deterministic for a given seed; channel i uses
/// sub-seed seed+i.
ForcingSignal make_filtered_noise(int n_channels, Eigen::Index steps, double dt,
                                  double cutoff_hz, double target_variance,
                                  std::uint64_t seed,
                                  std::vector<int> channel_map = {});

/// amplitude_i · sin(2π·freq·t + phase_i) per channel.
ForcingSignal make_sinusoid(int n_channels, Eigen::Index steps, double dt,
                            double freq_hz, const std::vector<double>& amplitudes,
                            const std::vector<double>& phase_offsets = {},
                            std::vector<int> channel_map = {});

/// 4th-order Butterworth low-pass (two bilinear-transform biquads in cascade),
/// applied forward over the sequence from zero filter state.
std::vector<double> butterworth4_lowpass(const std::vector<double>& x,
                                         double cutoff_hz, double dt);

} // namespace nnmrom
