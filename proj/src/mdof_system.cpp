#include "nnmrom/mdof_system.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace nnmrom {

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Relative displacement/velocity across an element; ground contributes zero.
inline double rel(const Vec& q, int a, int b) {
    return q[a] - (b == kGround ? 0.0 : q[b]);
}

// Accumulates an internal force f acting on endpoint a (and -f on b).
inline void accumulate(Vec& out, int a, int b, double f) {
    out[a] += f;
    if (b != kGround) out[b] -= f;
}

void check_endpoints(int n_dof, int a, int b, const char* what) {
    if (a < 0 || a >= n_dof || (b != kGround && (b < 0 || b >= n_dof)))
        throw std::invalid_argument(std::string(what) + ": element endpoint out of range");
}

} // namespace

// =============================================================================
// BoucWenParams
// =============================================================================

BoucWenParams BoucWenParams::from_amplitude(double amplitude_a, double z_max,
                                            double exponent_n, double link_stiffness) {
    check(amplitude_a > 0.0, "BoucWenParams: amplitude A must be positive");
    check(z_max > 0.0, "BoucWenParams: z_max must be positive");
    check(exponent_n >= 1.0, "BoucWenParams: exponent n must be >= 1");
    BoucWenParams p;
    p.amplitude_a = amplitude_a;
    p.z_max = z_max;
    p.exponent_n = exponent_n;
    p.link_stiffness = link_stiffness;
    const double sum = amplitude_a / std::pow(z_max, exponent_n);
    p.beta = 0.5 * sum;
    p.gamma = 0.5 * sum;
    p.validate();
    return p;
}

void BoucWenParams::validate() const {
    check(beta + gamma > 0.0, "BoucWenParams: beta + gamma must be positive");
    check(exponent_n >= 1.0, "BoucWenParams: exponent n must be >= 1");
    check(z_max > 0.0, "BoucWenParams: z_max must be positive");
    const double implied = std::pow(amplitude_a / (beta + gamma), 1.0 / exponent_n);
    check(std::abs(implied - z_max) <= 1e-12 * std::max(std::abs(implied), std::abs(z_max)),
          "BoucWenParams: z_max inconsistent with (A/(beta+gamma))^(1/n)");
}

double bouc_wen_rate(const BoucWenParams& p, double xdot, double z) {
    const double abs_z = std::abs(z);
    const double zn1 = std::pow(abs_z, p.exponent_n - 1.0);
    return p.amplitude_a * xdot - p.beta * std::abs(xdot) * z * zn1
           - p.gamma * xdot * zn1 * abs_z;
}

// =============================================================================
// MdofSystem
// =============================================================================

void MdofSystem::validate() const {
    check(n_dof > 0, "MdofSystem: n_dof must be positive");
    check(masses.size() == n_dof, "MdofSystem: masses length != n_dof");
    check((masses.array() > 0.0).all(), "MdofSystem: all masses must be strictly positive");
    for (const auto& e : linear_springs) check_endpoints(n_dof, e.a, e.b, "linear spring");
    for (const auto& e : linear_dampers) check_endpoints(n_dof, e.a, e.b, "linear damper");
    for (const auto& e : cubic_springs) check_endpoints(n_dof, e.a, e.b, "cubic spring");
    for (const auto& l : bouc_wen_links) {
        check_endpoints(n_dof, l.a, l.b, "bouc-wen link");
        l.params.validate();
    }
    std::set<int> seen;
    for (int dof : force_map) {
        check(dof >= 0 && dof < n_dof, "MdofSystem: force_map dof out of range");
        check(seen.insert(dof).second, "MdofSystem: force_map dofs must be distinct");
    }
    check(mass_damping_alpha >= 0.0, "MdofSystem: mass damping alpha must be >= 0");
}

Mat MdofSystem::mass_matrix() const {
    return masses.asDiagonal();
}

Mat MdofSystem::linear_stiffness_matrix() const {
    Mat k = Mat::Zero(n_dof, n_dof);
    auto add = [&](int a, int b, double v) {
        k(a, a) += v;
        if (b != kGround) {
            k(b, b) += v;
            k(a, b) -= v;
            k(b, a) -= v;
        }
    };
    for (const auto& e : linear_springs) add(e.a, e.b, e.value);
    for (const auto& l : bouc_wen_links)
        add(l.a, l.b, l.params.amplitude_a * l.params.link_stiffness);
    return k;
}

Mat MdofSystem::damping_matrix() const {
    Mat c = Mat::Zero(n_dof, n_dof);
    for (const auto& e : linear_dampers) {
        c(e.a, e.a) += e.value;
        if (e.b != kGround) {
            c(e.b, e.b) += e.value;
            c(e.a, e.b) -= e.value;
            c(e.b, e.a) -= e.value;
        }
    }
    c += mass_damping_alpha * Mat(masses.asDiagonal());
    return c;
}

void MdofSystem::set_mass_damping_from_ratio(double zeta) {
    check(zeta >= 0.0, "mass damping ratio must be >= 0");
    const auto freqs = linearized_frequencies_hz(*this);
    check(!freqs.empty(), "mass damping ratio needs at least one mode");
    mass_damping_alpha = 2.0 * zeta * (2.0 * M_PI * freqs.front());
}

SystemState SystemState::zero(const MdofSystem& sys) {
    SystemState s;
    s.u = Vec::Zero(sys.n_dof);
    s.v = Vec::Zero(sys.n_dof);
    s.z = Vec::Zero(static_cast<Eigen::Index>(sys.bouc_wen_links.size()));
    return s;
}

// =============================================================================
// Operations
// =============================================================================

Vec restoring_force(const MdofSystem& sys, const SystemState& state) {
    check(state.u.size() == sys.n_dof && state.v.size() == sys.n_dof,
          "restoring_force: state dimensions do not match system");
    check(state.z.size() == static_cast<Eigen::Index>(sys.bouc_wen_links.size()),
          "restoring_force: hysteretic state length does not match link count");

    Vec f = Vec::Zero(sys.n_dof);
    for (const auto& e : sys.linear_springs)
        accumulate(f, e.a, e.b, e.value * rel(state.u, e.a, e.b));
    for (const auto& e : sys.linear_dampers)
        accumulate(f, e.a, e.b, e.value * rel(state.v, e.a, e.b));
    for (const auto& e : sys.cubic_springs) {
        const double d = rel(state.u, e.a, e.b);
        accumulate(f, e.a, e.b, e.value * d * d * d);
    }
    for (std::size_t i = 0; i < sys.bouc_wen_links.size(); ++i) {
        const auto& l = sys.bouc_wen_links[i];
        accumulate(f, l.a, l.b, l.params.link_stiffness * state.z[static_cast<Eigen::Index>(i)]);
    }
    if (sys.mass_damping_alpha != 0.0)
        f += sys.mass_damping_alpha * (sys.masses.array() * state.v.array()).matrix();
    return f;
}

StateRate state_derivative(const MdofSystem& sys, const SystemState& state,
                           const Vec& external_force) {
    check(external_force.size() == sys.n_dof,
          "state_derivative: external force length does not match n_dof");
    StateRate rate;
    rate.du = state.v;
    rate.dv = (external_force - restoring_force(sys, state)).cwiseQuotient(sys.masses);
    rate.dz = Vec(state.z.size());
    for (std::size_t i = 0; i < sys.bouc_wen_links.size(); ++i) {
        const auto& l = sys.bouc_wen_links[i];
        const auto idx = static_cast<Eigen::Index>(i);
        rate.dz[idx] = bouc_wen_rate(l.params, rel(state.v, l.a, l.b), state.z[idx]);
    }
    return rate;
}

std::vector<double> linearized_frequencies_hz(const MdofSystem& sys) {
    check(!sys.linear_springs.empty() || !sys.bouc_wen_links.empty(),
          "linearized_frequencies: no linear stiffness present");
    const Mat k = sys.linear_stiffness_matrix();
    const Mat m = sys.mass_matrix();
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> solver(k, m);
    if (solver.info() != Eigen::Success)
        throw NumericError("linearized_frequencies: generalized eigen-solve failed");
    std::vector<double> freqs(static_cast<std::size_t>(sys.n_dof));
    for (int i = 0; i < sys.n_dof; ++i) {
        const double lambda = std::max(solver.eigenvalues()[i], 0.0);
        freqs[static_cast<std::size_t>(i)] = std::sqrt(lambda) / (2.0 * M_PI);
    }
    std::sort(freqs.begin(), freqs.end());
    return freqs;
}

// =============================================================================
// Builders
// =============================================================================

MdofSystem make_chain(int n_dof, double mass, double stiffness, double damping,
                      const std::vector<Element>& cubic,
                      const std::vector<int>& force_map) {
    MdofSystem sys;
    sys.n_dof = n_dof;
    sys.masses = Vec::Constant(n_dof, mass);
    // ground-0, 0-1, ..., (n-2)-(n-1), (n-1)-ground
    sys.linear_springs.push_back({0, kGround, stiffness});
    sys.linear_dampers.push_back({0, kGround, damping});
    for (int i = 0; i + 1 < n_dof; ++i) {
        sys.linear_springs.push_back({i, i + 1, stiffness});
        sys.linear_dampers.push_back({i, i + 1, damping});
    }
    sys.linear_springs.push_back({n_dof - 1, kGround, stiffness});
    sys.linear_dampers.push_back({n_dof - 1, kGround, damping});
    sys.cubic_springs = cubic;
    sys.force_map = force_map.empty() ? std::vector<int>{0, n_dof - 1} : force_map;
    sys.validate();
    return sys;
}

MdofSystem make_single_nl_chain(int n_dof, double mass, double stiffness,
                                double damping, double cubic_coeff) {
    return make_chain(n_dof, mass, stiffness, damping, {{0, kGround, cubic_coeff}});
}

MdofSystem make_multi_nl_chain(int n_dof, double mass, double stiffness, double damping,
                               double cubic_coeff) {
    std::vector<Element> cubic;
    cubic.push_back({0, kGround, cubic_coeff});
    for (int i = 0; i + 1 < n_dof; ++i) cubic.push_back({i, i + 1, cubic_coeff});
    cubic.push_back({n_dof - 1, kGround, cubic_coeff});
    return make_chain(n_dof, mass, stiffness, damping, cubic);
}

MdofSystem make_bouc_wen_chain(int n_dof, double mass, double stiffness,
                               const BoucWenParams& link, double zeta,
                               const std::vector<int>& force_map) {
    MdofSystem sys;
    sys.n_dof = n_dof;
    sys.masses = Vec::Constant(n_dof, mass);
    sys.linear_springs.push_back({0, kGround, stiffness});
    sys.bouc_wen_links.push_back({0, kGround, link});
    for (int i = 0; i + 1 < n_dof; ++i) {
        sys.linear_springs.push_back({i, i + 1, stiffness});
        sys.bouc_wen_links.push_back({i, i + 1, link});
    }
    sys.force_map = force_map.empty() ? std::vector<int>{0, n_dof - 1} : force_map;
    sys.validate();
    sys.set_mass_damping_from_ratio(zeta);
    return sys;
}

} // namespace nnmrom
