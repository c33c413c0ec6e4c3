// Time-stamped multi-channel response histories and their on-disk forms.
#pragma once

#include "nnmrom/signals.hpp"

#include <optional>
#include <string>

namespace nnmrom {

/// Snapshot data from one simulation: one column per time step.
struct Trajectory {
    double dt = 0.0;
    Mat displacements;            // n_dof x steps [m]
    std::optional<Mat> velocities; // n_dof x steps [m/s]
    ForcingSignal forcing;

    int n_dof() const { return static_cast<int>(displacements.rows()); }
    Eigen::Index steps() const { return displacements.cols(); }
    void validate() const;
};

/// CSV with header t,u_0..u_{n-1},f_0..f_{c-1}; one row per step, %.17g.
void save_trajectory_csv(const Trajectory& traj, const std::string& path);

/// Binary form: magic "NROMTRAJ", u32 version, u32 flags (bit0: velocities),
/// u32 n_dof, u32 n_channels, u64 steps, f64 dt, u32 channel_map[...],
/// then row-major little-endian f64 blocks: displacements, [velocities],
/// forcing samples.
void save_trajectory_bin(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory_bin(const std::string& path);

} // namespace nnmrom
