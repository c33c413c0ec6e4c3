// Fixed-step time integration of full-order systems.
#pragma once

#include "nnmrom/mdof_system.hpp"
#include "nnmrom/trajectory.hpp"

namespace nnmrom {

struct NewmarkParams {
    double gamma = 0.5;       // average acceleration
    double beta = 0.25;
    double newton_tol = 1e-8; // relative residual norm
    int max_iter = 50;
    int z_substeps = 4;       // RK4 sub-steps for the hysteretic state per step
};

/// Trajectory plus the internals tests and hysteresis analyses need.
struct IntegrationResult {
    Trajectory trajectory;
    Mat z_history;        // links x steps (0 rows when no Bouc-Wen links)
    SystemState final_state;
};

/// Classical 4th-order Runge-Kutta on the first-order form. Forcing is
/// linearly interpolated at half-steps; the trajectory has one column per
/// forcing sample. Throws NumericError naming the step when the state
/// becomes non-finite.
IntegrationResult integrate_rk4_full(const MdofSystem& sys, const SystemState& initial,
                                     const ForcingSignal& forcing);
Trajectory integrate_rk4(const MdofSystem& sys, const SystemState& initial,
                         const ForcingSignal& forcing);

/// Implicit Newmark with Newton-Raphson on the dynamic residual each step.
/// Bouc-Wen states advance by RK4 sub-stepping inside each iteration using
/// the current velocity iterate (relative velocity interpolated linearly
/// across the step). Throws NumericError with the step index and residual
/// when Newton fails to converge within max_iter.
IntegrationResult integrate_newmark_full(const MdofSystem& sys, const SystemState& initial,
                                         const ForcingSignal& forcing,
                                         const NewmarkParams& params = {});
Trajectory integrate_newmark(const MdofSystem& sys, const SystemState& initial,
                             const ForcingSignal& forcing,
                             const NewmarkParams& params = {});

/// Expands channel samples at column k into a per-DOF force vector.
Vec external_force_at(const MdofSystem& sys, const ForcingSignal& forcing, Eigen::Index k);

} // namespace nnmrom
