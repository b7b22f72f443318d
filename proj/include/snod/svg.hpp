#pragma once

#include <span>
#include <string>

#include "snod/analysis.hpp"
#include "snod/robot_nav.hpp"
#include "snod/simulate.hpp"

namespace snod {

// Standalone SVG documents; no external fonts, scripts or images.

/// Branches in the (u0, z) plane: stable solid, unstable dotted, folds as
/// open circles.
std::string bifurcation_svg(std::span<const BifurcationBranch> branches, const std::string& title);

/// Nullclines in the (u_s, z) plane with equilibria and, when given, the
/// path of agent 0 of `traj`.
std::string phase_plane_svg(const Nullclines& nc, std::span<const EquilibriumPoint> equilibria,
                            const Trajectory* traj, const std::string& title);

/// z_i(t) of every agent.
std::string timeseries_svg(const Trajectory& traj, const std::string& title);

/// Overhead view: robot paths, goals as stars, humans in black.
std::string scenario_svg(const ScenarioConfig& cfg, const ScenarioResult& result,
                         const std::string& title);

}  // namespace snod
