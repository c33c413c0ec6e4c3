#include "nnmrom/integrate.hpp"

#include <Eigen/LU>

#include <cmath>

namespace nnmrom {

namespace {

Vec map_channels(const MdofSystem& sys, const ForcingSignal& forcing, const Vec& channel_values) {
    Vec f = Vec::Zero(sys.n_dof);
    for (int ch = 0; ch < forcing.channels(); ++ch) {
        const int dof = forcing.channel_map[static_cast<std::size_t>(ch)];
        if (dof < 0 || dof >= sys.n_dof)
            throw std::invalid_argument("forcing channel_map dof out of range for system");
        f[dof] += channel_values[ch];
    }
    return f;
}

bool finite(const Vec& v) { return v.allFinite(); }

void add_axpy(SystemState& out, const SystemState& base, const StateRate& rate, double h) {
    out.u = base.u + h * rate.du;
    out.v = base.v + h * rate.dv;
    out.z = base.z + h * rate.dz;
}

// Tangent stiffness: linear springs + 3·k·δ² cubic terms + Bouc-Wen initial
// stiffness A·link_stiffness.
Mat tangent_stiffness(const MdofSystem& sys, const Vec& u) {
    Mat k = sys.linear_stiffness_matrix();
    for (const auto& e : sys.cubic_springs) {
        const double d = u[e.a] - (e.b == kGround ? 0.0 : u[e.b]);
        const double kt = 3.0 * e.value * d * d;
        k(e.a, e.a) += kt;
        if (e.b != kGround) {
            k(e.b, e.b) += kt;
            k(e.a, e.b) -= kt;
            k(e.b, e.a) -= kt;
        }
    }
    return k;
}

// Advances each link's z across one Newmark step with `substeps` RK4
// sub-steps, the relative velocity interpolated linearly from v0 to v1.
Vec advance_z(const MdofSystem& sys, const Vec& z0, const Vec& v0, const Vec& v1,
              double dt, int substeps) {
    Vec z = z0;
    if (sys.bouc_wen_links.empty()) return z;
    const double h = dt / substeps;
    for (std::size_t i = 0; i < sys.bouc_wen_links.size(); ++i) {
        const auto& l = sys.bouc_wen_links[i];
        const double xd0 = v0[l.a] - (l.b == kGround ? 0.0 : v0[l.b]);
        const double xd1 = v1[l.a] - (l.b == kGround ? 0.0 : v1[l.b]);
        auto xdot_at = [&](double tau) { return xd0 + (xd1 - xd0) * (tau / dt); };
        double zi = z0[static_cast<Eigen::Index>(i)];
        for (int s = 0; s < substeps; ++s) {
            const double t0 = s * h;
            const double k1 = bouc_wen_rate(l.params, xdot_at(t0), zi);
            const double k2 = bouc_wen_rate(l.params, xdot_at(t0 + 0.5 * h), zi + 0.5 * h * k1);
            const double k3 = bouc_wen_rate(l.params, xdot_at(t0 + 0.5 * h), zi + 0.5 * h * k2);
            const double k4 = bouc_wen_rate(l.params, xdot_at(t0 + h), zi + h * k3);
            zi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        z[static_cast<Eigen::Index>(i)] = zi;
    }
    return z;
}

} // namespace

Vec external_force_at(const MdofSystem& sys, const ForcingSignal& forcing, Eigen::Index k) {
    return map_channels(sys, forcing, forcing.samples.col(k));
}

IntegrationResult integrate_rk4_full(const MdofSystem& sys, const SystemState& initial,
                                     const ForcingSignal& forcing) {
    sys.validate();
    forcing.validate();
    const Eigen::Index steps = forcing.steps();
    const double dt = forcing.dt;
    const auto n_links = static_cast<Eigen::Index>(sys.bouc_wen_links.size());

    IntegrationResult res;
    res.trajectory.dt = dt;
    res.trajectory.displacements.resize(sys.n_dof, steps);
    res.trajectory.velocities = Mat(sys.n_dof, steps);
    res.trajectory.forcing = forcing;
    res.z_history.resize(n_links, steps);

    SystemState state = initial;
    SystemState tmp = state;
    for (Eigen::Index k = 0; k < steps; ++k) {
        res.trajectory.displacements.col(k) = state.u;
        res.trajectory.velocities->col(k) = state.v;
        if (n_links > 0) res.z_history.col(k) = state.z;
        if (k + 1 == steps) break;

        const double t = static_cast<double>(k) * dt;
        const Vec f0 = map_channels(sys, forcing, forcing.at_time(t));
        const Vec fh = map_channels(sys, forcing, forcing.at_time(t + 0.5 * dt));
        const Vec f1 = map_channels(sys, forcing, forcing.at_time(t + dt));

        const StateRate k1 = state_derivative(sys, state, f0);
        add_axpy(tmp, state, k1, 0.5 * dt);
        const StateRate k2 = state_derivative(sys, tmp, fh);
        add_axpy(tmp, state, k2, 0.5 * dt);
        const StateRate k3 = state_derivative(sys, tmp, fh);
        add_axpy(tmp, state, k3, dt);
        const StateRate k4 = state_derivative(sys, tmp, f1);

        state.u += dt / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
        state.v += dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
        if (n_links > 0)
            state.z += dt / 6.0 * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);

        if (!finite(state.u) || !finite(state.v) || !finite(state.z))
            throw NumericError("integrate_rk4: non-finite state at step " + std::to_string(k + 1),
                               k + 1);
    }
    res.final_state = state;
    return res;
}

Trajectory integrate_rk4(const MdofSystem& sys, const SystemState& initial,
                         const ForcingSignal& forcing) {
    return integrate_rk4_full(sys, initial, forcing).trajectory;
}

IntegrationResult integrate_newmark_full(const MdofSystem& sys, const SystemState& initial,
                                         const ForcingSignal& forcing,
                                         const NewmarkParams& params) {
    sys.validate();
    forcing.validate();
    if (params.gamma <= 0.0 || params.beta <= 0.0)
        throw std::invalid_argument("integrate_newmark: gamma and beta must be positive");

    const Eigen::Index steps = forcing.steps();
    const double dt = forcing.dt;
    const double gamma = params.gamma;
    const double beta = params.beta;
    const auto n_links = static_cast<Eigen::Index>(sys.bouc_wen_links.size());

    IntegrationResult res;
    res.trajectory.dt = dt;
    res.trajectory.displacements.resize(sys.n_dof, steps);
    res.trajectory.velocities = Mat(sys.n_dof, steps);
    res.trajectory.forcing = forcing;
    res.z_history.resize(n_links, steps);

    const Mat m = sys.mass_matrix();
    const Mat c = sys.damping_matrix();

    SystemState state = initial;
    Vec f_ext = external_force_at(sys, forcing, 0);
    Vec accel = (f_ext - restoring_force(sys, state)).cwiseQuotient(sys.masses);

    for (Eigen::Index k = 0; k < steps; ++k) {
        res.trajectory.displacements.col(k) = state.u;
        res.trajectory.velocities->col(k) = state.v;
        if (n_links > 0) res.z_history.col(k) = state.z;
        if (k + 1 == steps) break;

        const Vec f_next = external_force_at(sys, forcing, k + 1);

        // Newmark kinematic coefficients
        const double c_a0 = 1.0 / (beta * dt * dt);
        const double c_a1 = 1.0 / (beta * dt);
        const double c_a2 = 1.0 / (2.0 * beta) - 1.0;
        const double c_v0 = gamma / (beta * dt);
        const double c_v1 = 1.0 - gamma / beta;
        const double c_v2 = dt * (1.0 - gamma / (2.0 * beta));

        SystemState it = state;
        it.u = state.u + dt * state.v + 0.5 * dt * dt * accel; // explicit predictor
        double ref = 0.0;
        double residual_norm = 0.0;
        bool converged = false;
        for (int iter = 0; iter < params.max_iter; ++iter) {
            it.v = c_v0 * (it.u - state.u) + c_v1 * state.v + c_v2 * accel;
            const Vec a_next = c_a0 * (it.u - state.u) - c_a1 * state.v - c_a2 * accel;
            it.z = advance_z(sys, state.z, state.v, it.v, dt, params.z_substeps);

            const Vec f_int = restoring_force(sys, it);
            const Vec inertia = (sys.masses.array() * a_next.array()).matrix();
            const Vec r = inertia + f_int - f_next;
            residual_norm = r.norm();
            if (iter == 0)
                ref = std::max({f_next.norm(), f_int.norm(), inertia.norm()});
            if (!std::isfinite(residual_norm))
                throw NumericError("integrate_newmark: non-finite residual at step "
                                       + std::to_string(k + 1), k + 1);
            if (residual_norm <= params.newton_tol * ref || residual_norm == 0.0) {
                converged = true;
                break;
            }
            Mat jac = c_a0 * m + c_v0 * c + tangent_stiffness(sys, it.u);
            it.u -= jac.partialPivLu().solve(r);
        }
        if (!converged)
            throw NumericError("integrate_newmark: Newton did not converge at step "
                                   + std::to_string(k + 1) + " (residual "
                                   + std::to_string(residual_norm) + ")", k + 1);

        accel = c_a0 * (it.u - state.u) - c_a1 * state.v - c_a2 * accel;
        state = it;
        if (!finite(state.u) || !finite(state.v) || !finite(state.z))
            throw NumericError("integrate_newmark: non-finite state at step "
                                   + std::to_string(k + 1), k + 1);
    }
    res.final_state = state;
    return res;
}

Trajectory integrate_newmark(const MdofSystem& sys, const SystemState& initial,
                             const ForcingSignal& forcing, const NewmarkParams& params) {
    return integrate_newmark_full(sys, initial, forcing, params).trajectory;
}

} // namespace nnmrom
