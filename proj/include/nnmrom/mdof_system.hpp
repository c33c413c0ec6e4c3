// Full-order nonlinear MDOF system definitions: lumped-mass chains with
// linear spring/damper elements, cubic springs and Bouc-Wen hysteretic links.
#pragma once

#include "nnmrom/common.hpp"

#include <vector>

namespace nnmrom {

// =============================================================================
// Bouc-Wen hysteretic link
// =============================================================================

/// Parameters of the Bouc-Wen law
///   ż = A·ẋ − β·|ẋ|·z·|z|^(n−1) − γ·ẋ·|z|^n
/// with the saturation bound z_max = (A/(β+γ))^(1/n). The hysteretic state z
/// maps to a restoring force through `link_stiffness` (force = link_stiffness·z).
struct BoucWenParams {
    double amplitude_a = 1.0;
    double beta = 0.5;
    double gamma = 0.5;
    double exponent_n = 1.0;
    double z_max = 1.0;
    double link_stiffness = 1.0; // N/m

    /// Builds a parameter set from (A, z_max, n), solving β+γ = A / z_max^n
    /// and splitting the sum equally between β and γ.
    static BoucWenParams from_amplitude(double amplitude_a, double z_max,
                                        double exponent_n, double link_stiffness);

    /// Throws std::invalid_argument when β+γ ≤ 0, n < 1, or z_max is
    /// inconsistent with (A/(β+γ))^(1/n) beyond 1e-12 relative.
    void validate() const;
};

/// ż for a single link given the relative velocity across it.
double bouc_wen_rate(const BoucWenParams& params, double xdot, double z);

// =============================================================================
// System definition
// =============================================================================

/// Two-terminal element; `b == kGround` attaches the element to ground.
/// The element acts on the relative displacement u_a − u_b (ground reads 0).
struct Element {
    int a = 0;
    int b = kGround;
    double value = 0.0; // stiffness [N/m], damping [kg/s] or cubic coeff [N/m^3]
};

struct BoucWenLink {
    int a = 0;
    int b = kGround;
    BoucWenParams params;
};

/// Lumped-mass model. Immutable by convention after validate(); all
/// operations on it are pure.
struct MdofSystem {
    int n_dof = 0;
    Vec masses;                            // strictly positive, length n_dof
    std::vector<Element> linear_springs;
    std::vector<Element> linear_dampers;
    std::vector<Element> cubic_springs;
    std::vector<BoucWenLink> bouc_wen_links;
    std::vector<int> force_map;            // input channel -> dof, distinct
    double mass_damping_alpha = 0.0;       // adds α·M·v to the restoring force

    void validate() const;

    Mat mass_matrix() const;
    /// Stiffness of the linear part. Bouc-Wen links contribute their
    /// initial stiffness A·link_stiffness; cubic springs contribute nothing.
    Mat linear_stiffness_matrix() const;
    /// Element dampers plus the mass-proportional term α·M.
    Mat damping_matrix() const;

    /// Sets mass_damping_alpha = 2·ζ·ω₁ so the first linearized mode sees the
    /// requested damping ratio ζ.
    void set_mass_damping_from_ratio(double zeta);
};

/// Full dynamic state: displacements, velocities, and one hysteretic z per
/// Bouc-Wen link (empty when the system has none).
struct SystemState {
    Vec u;
    Vec v;
    Vec z;

    static SystemState zero(const MdofSystem& sys);
};

struct StateRate {
    Vec du;
    Vec dv;
    Vec dz;
};

// =============================================================================
// Operations
// =============================================================================

/// Total internal force per DOF (linear springs + dampers + cubic springs +
/// Bouc-Wen link forces + mass-proportional damping). Sign convention:
/// positive force opposes positive relative displacement, i.e. the equation
/// of motion reads M·v̇ = f_ext − restoring_force.
Vec restoring_force(const MdofSystem& sys, const SystemState& state);

/// First-order form: u̇ = v, v̇ = M⁻¹(f_ext − restoring_force), ż per link.
StateRate state_derivative(const MdofSystem& sys, const SystemState& state,
                           const Vec& external_force);

/// Natural frequencies (Hz, ascending) of the linearized system; cubic terms
/// dropped, Bouc-Wen links linearized as A·link_stiffness.
std::vector<double> linearized_frequencies_hz(const MdofSystem& sys);

// =============================================================================
// Chain builders
// =============================================================================

/// Mass-spring-damper chain grounded at both ends (n+1 springs and dampers).
/// `cubic` lists extra cubic springs as (a, b, coefficient) tuples.
MdofSystem make_chain(int n_dof, double mass, double stiffness, double damping,
                      const std::vector<Element>& cubic = {},
                      const std::vector<int>& force_map = {});

/// The 20-DOF cubic chain of the single-nonlinearity example: one cubic
/// spring between the first mass and ground.
MdofSystem make_single_nl_chain(int n_dof = 20, double mass = 0.1,
                                double stiffness = 100.0, double damping = 0.1,
                                double cubic_coeff = 2500.0);

/// Cubic chain with a cubic spring in parallel with every linear spring.
/// The default coefficient places the per-DOF RMS nonlinearity ratios in the
/// 0.15-0.27 range under variance-2.5 N^2 band-limited forcing.
MdofSystem make_multi_nl_chain(int n_dof = 20, double mass = 0.1,
                               double stiffness = 100.0, double damping = 0.1,
                               double cubic_coeff = 12000.0);

/// Chain grounded at the first mass only, with a Bouc-Wen link in parallel
/// with every linear spring and mass-proportional damping set from `zeta` at
/// the first linearized mode.
MdofSystem make_bouc_wen_chain(int n_dof, double mass, double stiffness,
                               const BoucWenParams& link, double zeta,
                               const std::vector<int>& force_map = {});

} // namespace nnmrom
