#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nnmrom/mdof_system.hpp"

#include <cmath>

using namespace nnmrom;

namespace {

// Independent scalar-by-scalar restoring-force oracle: walks every element
// and accumulates per-DOF forces with plain loops, no shared code path.
Vec restoring_force_oracle(const MdofSystem& sys, const SystemState& s) {
    Vec f = Vec::Zero(sys.n_dof);
    for (const auto& e : sys.linear_springs) {
        const double ub = e.b == kGround ? 0.0 : s.u[e.b];
        const double fe = e.value * (s.u[e.a] - ub);
        f[e.a] += fe;
        if (e.b != kGround) f[e.b] -= fe;
    }
    for (const auto& e : sys.linear_dampers) {
        const double vb = e.b == kGround ? 0.0 : s.v[e.b];
        const double fe = e.value * (s.v[e.a] - vb);
        f[e.a] += fe;
        if (e.b != kGround) f[e.b] -= fe;
    }
    for (const auto& e : sys.cubic_springs) {
        const double ub = e.b == kGround ? 0.0 : s.u[e.b];
        const double d = s.u[e.a] - ub;
        const double fe = e.value * d * d * d;
        f[e.a] += fe;
        if (e.b != kGround) f[e.b] -= fe;
    }
    for (std::size_t i = 0; i < sys.bouc_wen_links.size(); ++i) {
        const auto& l = sys.bouc_wen_links[i];
        const double fe = l.params.link_stiffness * s.z[static_cast<Eigen::Index>(i)];
        f[l.a] += fe;
        if (l.b != kGround) f[l.b] -= fe;
    }
    for (int i = 0; i < sys.n_dof; ++i)
        f[i] += sys.mass_damping_alpha * sys.masses[i] * s.v[i];
    return f;
}

SystemState random_state(const MdofSystem& sys, Rng& rng, double scale = 1.0) {
    SystemState s = SystemState::zero(sys);
    for (int i = 0; i < sys.n_dof; ++i) {
        s.u[i] = scale * rng.uniform(-1.0, 1.0);
        s.v[i] = scale * rng.uniform(-1.0, 1.0);
    }
    for (Eigen::Index i = 0; i < s.z.size(); ++i)
        s.z[i] = 0.5 * sys.bouc_wen_links[static_cast<std::size_t>(i)].params.z_max
                 * rng.uniform(-1.0, 1.0);
    return s;
}

// Analytic natural frequencies of a uniform fixed-fixed chain:
// omega_j = 2 sqrt(k/m) sin(j pi / (2(N+1))).
std::vector<double> chain_frequencies_hz(int n, double mass, double stiffness) {
    std::vector<double> f(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j)
        f[static_cast<std::size_t>(j - 1)] =
            2.0 * std::sqrt(stiffness / mass)
            * std::sin(j * M_PI / (2.0 * (n + 1))) / (2.0 * M_PI);
    return f;
}

} // namespace

TEST_CASE("restoring force is zero at equilibrium") {
    const MdofSystem sys = make_single_nl_chain();
    const SystemState s = SystemState::zero(sys);
    CHECK(restoring_force(sys, s).norm() == 0.0);
}

TEST_CASE("single ground cubic spring produces k*u^3") {
    MdofSystem sys;
    sys.n_dof = 1;
    sys.masses = Vec::Constant(1, 1.0);
    sys.cubic_springs.push_back({0, kGround, 2500.0});
    sys.validate();
    SystemState s = SystemState::zero(sys);
    s.u[0] = 0.1;
    const Vec f = restoring_force(sys, s);
    CHECK(f[0] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("restoring force is reflection-equivariant on the uniform chain") {
    const MdofSystem sys = make_chain(20, 0.1, 100.0, 0.1);
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const SystemState s = random_state(sys, rng);
        SystemState mirrored = s;
        mirrored.u = s.u.reverse();
        mirrored.v = s.v.reverse();
        const Vec f = restoring_force(sys, s);
        const Vec fm = restoring_force(sys, mirrored);
        CHECK((fm - Vec(f.reverse())).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("restoring force is odd for linear+cubic systems") {
    const MdofSystem sys = make_multi_nl_chain();
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        SystemState s = random_state(sys, rng);
        SystemState neg = s;
        neg.u = -s.u;
        neg.v = -s.v;
        const Vec f = restoring_force(sys, s);
        const Vec fn = restoring_force(sys, neg);
        CHECK((fn + f).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, f.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("bouc-wen rate") {
    const auto p = BoucWenParams::from_amplitude(0.3, 1e-4, 1.0, 1e4);

    SUBCASE("zero velocity gives zero rate") {
        CHECK(bouc_wen_rate(p, 0.0, 0.0) == 0.0);
        CHECK(bouc_wen_rate(p, 0.0, 5e-5) == 0.0);
        CHECK(bouc_wen_rate(p, 0.0, -1e-4) == 0.0);
    }

    SUBCASE("at z=0 only the A term survives") {
        CHECK(bouc_wen_rate(p, 1.0, 0.0) == doctest::Approx(0.3).epsilon(1e-14));
    }

    SUBCASE("steady positive velocity saturates z at z_max") {
        // independently integrate the scalar ODE with small forward-Euler steps
        double z = 0.0;
        const double xdot = 0.02;
        const double h = 1e-5;
        double z_peak = 0.0;
        for (int i = 0; i < 2'000'000; ++i) {
            z += h * bouc_wen_rate(p, xdot, z);
            z_peak = std::max(z_peak, z);
        }
        CHECK(z == doctest::Approx(p.z_max).epsilon(1e-6));
        CHECK(z_peak <= p.z_max + 1e-9);
    }
}

TEST_CASE("bouc-wen constructor solves beta+gamma from (A, z_max, n)") {
    const auto p = BoucWenParams::from_amplitude(0.3, 1e-4, 1.5, 2e8);
    CHECK(std::pow(p.amplitude_a / (p.beta + p.gamma), 1.0 / p.exponent_n)
          == doctest::Approx(1e-4).epsilon(1e-13));
    CHECK_THROWS_AS(BoucWenParams::from_amplitude(-1.0, 1e-4, 1.0, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(BoucWenParams::from_amplitude(0.3, 1e-4, 0.5, 1.0),
                    std::invalid_argument);
    BoucWenParams bad = p;
    bad.z_max = 2e-4; // now inconsistent with beta+gamma
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("state derivative basics") {
    SUBCASE("zero state, zero force -> zero rate") {
        const MdofSystem sys = make_single_nl_chain();
        const auto rate = state_derivative(sys, SystemState::zero(sys), Vec::Zero(sys.n_dof));
        CHECK(rate.du.norm() == 0.0);
        CHECK(rate.dv.norm() == 0.0);
    }

    SUBCASE("1-DOF linear oscillator obeys Newton's law") {
        MdofSystem sys;
        sys.n_dof = 1;
        sys.masses = Vec::Constant(1, 1.0);
        sys.linear_springs.push_back({0, kGround, 1.0});
        sys.validate();
        SystemState s = SystemState::zero(sys);
        s.u[0] = 1.0;
        const auto rate = state_derivative(sys, s, Vec::Zero(1));
        CHECK(rate.dv[0] == doctest::Approx(-1.0).epsilon(1e-14));
        CHECK(rate.du[0] == 0.0);
    }

    SUBCASE("matches the scalar-by-scalar oracle on the 20-DOF single-NL system") {
        const MdofSystem sys = make_single_nl_chain();
        Rng rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            const SystemState s = random_state(sys, rng, 0.5);
            Vec f_ext(sys.n_dof);
            for (int i = 0; i < sys.n_dof; ++i) f_ext[i] = rng.uniform(-10.0, 10.0);
            const auto rate = state_derivative(sys, s, f_ext);
            const Vec expected_dv =
                (f_ext - restoring_force_oracle(sys, s)).cwiseQuotient(sys.masses);
            CHECK((rate.dv - expected_dv).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((rate.du - s.v).norm() == 0.0);
        }
    }

    SUBCASE("linear subsystem matches the K/M matrix oracle") {
        const MdofSystem sys = make_chain(12, 0.1, 100.0, 0.1);
        const Mat k = sys.linear_stiffness_matrix();
        const Mat c = sys.damping_matrix();
        Rng rng(11);
        const SystemState s = random_state(sys, rng);
        const Vec f_ext = Vec::Zero(sys.n_dof);
        const auto rate = state_derivative(sys, s, f_ext);
        const Vec expected = (-(k * s.u) - c * s.v).cwiseQuotient(sys.masses);
        CHECK((rate.dv - expected).cwiseAbs().maxCoeff()
              < 1e-12 * expected.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("bouc-wen derivative uses the link relative velocity") {
    const auto p = BoucWenParams::from_amplitude(0.3, 1e-4, 1.0, 1e4);
    MdofSystem sys;
    sys.n_dof = 2;
    sys.masses = Vec::Constant(2, 1.0);
    sys.linear_springs.push_back({0, 1, 10.0});
    sys.bouc_wen_links.push_back({0, 1, p});
    sys.validate();
    SystemState s = SystemState::zero(sys);
    s.v[0] = 0.4;
    s.v[1] = 0.1;
    const auto rate = state_derivative(sys, s, Vec::Zero(2));
    CHECK(rate.dz[0] == doctest::Approx(bouc_wen_rate(p, 0.3, 0.0)).epsilon(1e-14));
}

TEST_CASE("linearized frequencies") {
    SUBCASE("1-DOF with k=4pi^2 is 1 Hz") {
        MdofSystem sys;
        sys.n_dof = 1;
        sys.masses = Vec::Constant(1, 1.0);
        sys.linear_springs.push_back({0, kGround, 4.0 * M_PI * M_PI});
        sys.validate();
        const auto f = linearized_frequencies_hz(sys);
        CHECK(f[0] == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("paper chain places 7.5 Hz between the 11th and 12th frequencies") {
        const MdofSystem sys = make_single_nl_chain();
        const auto f = linearized_frequencies_hz(sys);
        REQUIRE(f.size() == 20);
        CHECK(f[10] < 7.5);
        CHECK(f[11] > 7.5);
        // eigen-solve matches the analytic tridiagonal solution
        const auto expected = chain_frequencies_hz(20, 0.1, 100.0);
        for (int j = 0; j < 20; ++j)
            CHECK(f[static_cast<std::size_t>(j)]
                  == doctest::Approx(expected[static_cast<std::size_t>(j)]).epsilon(1e-10));
    }

    SUBCASE("doubling stiffness scales frequencies by sqrt(2)") {
        const MdofSystem sys1 = make_chain(8, 0.5, 50.0, 0.0);
        const MdofSystem sys2 = make_chain(8, 0.5, 100.0, 0.0);
        const auto f1 = linearized_frequencies_hz(sys1);
        const auto f2 = linearized_frequencies_hz(sys2);
        for (std::size_t j = 0; j < f1.size(); ++j)
            CHECK(f2[j] == doctest::Approx(f1[j] * std::sqrt(2.0)).epsilon(1e-12));
    }

    SUBCASE("bouc-wen links contribute their initial stiffness") {
        MdofSystem sys;
        sys.n_dof = 1;
        sys.masses = Vec::Constant(1, 1.0);
        sys.bouc_wen_links.push_back({0, kGround,
                                      BoucWenParams::from_amplitude(0.5, 1e-3, 1.0, 8.0 * M_PI * M_PI)});
        sys.validate();
        const auto f = linearized_frequencies_hz(sys);
        CHECK(f[0] == doctest::Approx(1.0).epsilon(1e-12)); // A*kz = 4pi^2
    }
}

TEST_CASE("system validation rejects bad definitions") {
    MdofSystem sys = make_single_nl_chain();
    SUBCASE("negative mass") {
        sys.masses[3] = -0.1;
        CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
    }
    SUBCASE("endpoint out of range") {
        sys.linear_springs.push_back({0, 20, 1.0});
        CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
    }
    SUBCASE("duplicate force map entries") {
        sys.force_map = {0, 0};
        CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
    }
    SUBCASE("dimension mismatch in restoring_force") {
        SystemState s = SystemState::zero(sys);
        s.u.resize(3);
        CHECK_THROWS_AS(restoring_force(sys, s), std::invalid_argument);
    }
}

TEST_CASE("mass-proportional damping targets the first mode ratio") {
    MdofSystem sys = make_chain(6, 2.0, 500.0, 0.0);
    sys.set_mass_damping_from_ratio(0.04);
    const double w1 = 2.0 * M_PI * linearized_frequencies_hz(sys)[0];
    CHECK(sys.mass_damping_alpha == doctest::Approx(2.0 * 0.04 * w1).epsilon(1e-12));
}
