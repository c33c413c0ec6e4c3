#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nnmrom/integrate.hpp"

#include <cmath>

using namespace nnmrom;

namespace {

MdofSystem make_sdof(double mass, double stiffness, double damping = 0.0) {
    MdofSystem sys;
    sys.n_dof = 1;
    sys.masses = Vec::Constant(1, mass);
    sys.linear_springs.push_back({0, kGround, stiffness});
    if (damping > 0.0) sys.linear_dampers.push_back({0, kGround, damping});
    sys.force_map = {0};
    sys.validate();
    return sys;
}

ForcingSignal zero_forcing(int channels, Eigen::Index steps, double dt,
                           std::vector<int> map) {
    ForcingSignal f;
    f.dt = dt;
    f.samples = Mat::Zero(channels, steps);
    f.channel_map = std::move(map);
    return f;
}

// max |u_num - cos(w t)| for the undamped SDOF released from u0=1
double rk4_sdof_error(double omega, double dt, double t_end) {
    const MdofSystem sys = make_sdof(1.0, omega * omega);
    SystemState init = SystemState::zero(sys);
    init.u[0] = 1.0;
    const auto steps = static_cast<Eigen::Index>(std::llround(t_end / dt)) + 1;
    const Trajectory traj = integrate_rk4(sys, init, zero_forcing(1, steps, dt, {0}));
    double max_err = 0.0;
    for (Eigen::Index k = 0; k < traj.steps(); ++k) {
        const double exact = std::cos(omega * static_cast<double>(k) * dt);
        max_err = std::max(max_err, std::abs(traj.displacements(0, k) - exact));
    }
    return max_err;
}

} // namespace

TEST_CASE("rk4: zero forcing and zero initial state stay identically zero") {
    const MdofSystem sys = make_single_nl_chain();
    const auto traj = integrate_rk4(sys, SystemState::zero(sys),
                                    zero_forcing(2, 500, 0.01, {0, 19}));
    CHECK(traj.displacements.cwiseAbs().maxCoeff() == 0.0);
    CHECK(traj.velocities->cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rk4 matches the closed-form SDOF solution at 4th order") {
    // At omega=2pi, dt=0.01 the true error constant is (w t)(w dt)^4/120 ~ 8e-6.
    const double e1 = rk4_sdof_error(2.0 * M_PI, 0.01, 10.0);
    CHECK(e1 < 1e-5);
    CHECK(e1 > 1e-6); // documents the actual magnitude
    const double e2 = rk4_sdof_error(2.0 * M_PI, 0.005, 10.0);
    const double ratio = e1 / e2;
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("rk4 energy drift on an undamped unforced oscillator stays below 1e-6") {
    const double omega = M_PI;
    const MdofSystem sys = make_sdof(1.0, omega * omega);
    SystemState init = SystemState::zero(sys);
    init.u[0] = 1.0;
    const auto traj = integrate_rk4(sys, init, zero_forcing(1, 10001, 0.01, {0}));
    const double e0 = 0.5 * omega * omega;
    double max_drift = 0.0;
    for (Eigen::Index k = 0; k < traj.steps(); ++k) {
        const double u = traj.displacements(0, k);
        const double v = (*traj.velocities)(0, k);
        const double e = 0.5 * v * v + 0.5 * omega * omega * u * u;
        max_drift = std::max(max_drift, std::abs(e - e0) / e0);
    }
    CHECK(max_drift < 1e-6);
}

TEST_CASE("rk4 reports divergence with the step index") {
    MdofSystem sys;
    sys.n_dof = 1;
    sys.masses = Vec::Constant(1, 1.0);
    sys.linear_springs.push_back({0, kGround, -1e8}); // unstable
    sys.force_map = {0};
    sys.validate();
    SystemState init = SystemState::zero(sys);
    init.u[0] = 1.0;
    CHECK_THROWS_AS(integrate_rk4(sys, init, zero_forcing(1, 2000, 0.01, {0})),
                    NumericError);
}

TEST_CASE("integrators are deterministic") {
    const MdofSystem sys = make_single_nl_chain();
    const auto forcing = make_filtered_noise(2, 600, 0.01, 7.5, 24.0, 9, {0, 19});
    const auto a = integrate_rk4(sys, SystemState::zero(sys), forcing);
    const auto b = integrate_rk4(sys, SystemState::zero(sys), forcing);
    CHECK(a.displacements == b.displacements);

    const auto c = integrate_newmark(sys, SystemState::zero(sys), forcing);
    const auto d = integrate_newmark(sys, SystemState::zero(sys), forcing);
    CHECK(c.displacements == d.displacements);
}

TEST_CASE("newmark: zero forcing from rest stays zero") {
    const MdofSystem sys = make_single_nl_chain();
    const auto traj = integrate_newmark(sys, SystemState::zero(sys),
                                        zero_forcing(2, 300, 0.01, {0, 19}));
    CHECK(traj.displacements.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("newmark matches rk4 on a linear chain") {
    const MdofSystem sys = make_chain(20, 0.1, 100.0, 0.1);
    const double dt = 5e-4;
    const auto steps = static_cast<Eigen::Index>(std::llround(5.0 / dt)) + 1;
    const auto forcing = make_sinusoid(2, steps, dt, 1.5, {1.0, 1.0}, {}, {0, 19});

    const auto rk = integrate_rk4(sys, SystemState::zero(sys), forcing);
    const auto nm = integrate_newmark(sys, SystemState::zero(sys), forcing);
    const double rel_rms = (nm.displacements - rk.displacements).norm()
                           / rk.displacements.norm();
    CHECK(rel_rms < 1e-4);
}

TEST_CASE("newmark rejects bad parameters and reports non-convergence") {
    const MdofSystem sys = make_single_nl_chain();
    const auto forcing = make_filtered_noise(2, 100, 0.01, 7.5, 24.0, 3, {0, 19});
    NewmarkParams bad;
    bad.beta = 0.0;
    CHECK_THROWS_AS(integrate_newmark(sys, SystemState::zero(sys), forcing, bad),
                    std::invalid_argument);

    NewmarkParams strict;
    strict.max_iter = 1;
    strict.newton_tol = 1e-14;
    CHECK_THROWS_AS(integrate_newmark(sys, SystemState::zero(sys), forcing, strict),
                    NumericError);
}

TEST_CASE("bouc-wen sdof under a 1.5 Hz sinusoid dissipates energy in a closed loop") {
    MdofSystem sys;
    sys.n_dof = 1;
    sys.masses = Vec::Constant(1, 1.0);
    sys.linear_springs.push_back({0, kGround, 400.0});
    sys.linear_dampers.push_back({0, kGround, 1.0});
    sys.bouc_wen_links.push_back({0, kGround,
                                  BoucWenParams::from_amplitude(0.3, 1e-4, 1.0, 5000.0)});
    sys.force_map = {0};
    sys.validate();

    const double dt = 0.01;
    const auto steps = static_cast<Eigen::Index>(std::llround(8.0 / dt)) + 1;
    const auto forcing = make_sinusoid(1, steps, dt, 1.5, {2.0}, {}, {0});
    const auto res = integrate_newmark_full(sys, SystemState::zero(sys), forcing);

    // hysteretic state respects its saturation bound
    CHECK(res.z_history.cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + 1e-6));

    // work done by the hysteretic force over the trailing 3 s (steady state)
    const auto& u = res.trajectory.displacements;
    double work = 0.0;
    for (Eigen::Index k = steps - 301; k + 1 < steps; ++k) {
        const double f0 = 5000.0 * res.z_history(0, k);
        const double f1 = 5000.0 * res.z_history(0, k + 1);
        work += 0.5 * (f0 + f1) * (u(0, k + 1) - u(0, k));
    }
    CHECK(work > 0.0);

    // steady-state periodicity: peak amplitude repeats cycle to cycle within 2%
    const double peak_last = u.row(0).segment(steps - 68, 67).cwiseAbs().maxCoeff();
    const double peak_prev = u.row(0).segment(steps - 135, 67).cwiseAbs().maxCoeff();
    CHECK(peak_last == doctest::Approx(peak_prev).epsilon(0.02));
}

TEST_CASE("newmark keeps |z| within z_max under sustained cyclic loading") {
    MdofSystem sys;
    sys.n_dof = 2;
    sys.masses = Vec::Constant(2, 1.0);
    sys.linear_springs.push_back({0, kGround, 400.0});
    sys.linear_springs.push_back({0, 1, 400.0});
    sys.linear_dampers.push_back({0, kGround, 1.0});
    sys.linear_dampers.push_back({0, 1, 1.0});
    const auto p = BoucWenParams::from_amplitude(0.3, 1e-4, 1.0, 8000.0);
    sys.bouc_wen_links.push_back({0, kGround, p});
    sys.bouc_wen_links.push_back({0, 1, p});
    sys.force_map = {1};
    sys.validate();

    const auto steps = static_cast<Eigen::Index>(std::llround(20.0 / 0.01)) + 1;
    const auto forcing = make_sinusoid(1, steps, 0.01, 1.5, {2.0}, {}, {1});
    const auto res = integrate_newmark_full(sys, SystemState::zero(sys), forcing);
    CHECK(res.z_history.cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + 1e-6));
}
