// Declarative system-definition files (key = value lines plus element lists).
// Schema: see configs/README or the project README.
#pragma once

#include "nnmrom/mdof_system.hpp"

#include <string>

namespace nnmrom {

/// Loads a system definition. Recognized lines (order free, '#' comments):
///   n_dof = N
///   mass = all <kg>            | mass = <dof> <kg>
///   mass_damping_ratio = <zeta>          (alpha set from the first mode)
///   spring = <a> <b|ground> <N/m>
///   damper = <a> <b|ground> <kg/s>
///   cubic  = <a> <b|ground> <N/m^3>
///   boucwen = <a> <b|ground> <A> <z_max> <n> <link_stiffness>
///   force  = <channel> <dof>             (channels must appear in order)
MdofSystem load_system(const std::string& path);

/// Built-in example systems: single_nl_20dof, multi_nl_20dof, boucwen_chain.
MdofSystem system_preset(const std::string& name);
bool is_system_preset(const std::string& name);

} // namespace nnmrom
