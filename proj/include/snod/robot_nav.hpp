#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "snod/dynamics.hpp"
#include "snod/simulate.hpp"

namespace snod {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2&) const = default;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

struct RobotState {
  Vec2 position;
  double heading = 0.0;
  double speed = 1.0;
  AgentState opinion;
};

struct Waypoint {
  double t = 0.0;
  Vec2 position;
};

/// Scripted human moving along a piecewise-linear path. Before the first
/// waypoint and after the last one the human stands still.
struct HumanMover {
  std::vector<Waypoint> path;
  double radius = 0.3;

  Vec2 position(double t) const;
  /// Direction of travel of the active segment. While standing still the
  /// heading of the nearest moving segment is kept.
  double heading(double t) const;
  void validate() const;
};

struct PerceptionSample {
  double rho = 0.0;
  double eta = 0.0;
  double eta_h = 0.0;
};

struct AttentionGains {
  double c_u = 0.6;
  double r_a = 2.0;
  double e_a = 1.0;
};

struct SteerGains {
  double k_h = 1.0;
  double k_z = 2.0;
};

struct HumanProxy {
  double value = 0.0;
  bool saturated = false;
};

PerceptionSample perceive(const RobotState& robot, const HumanMover& human, double t);

/// u0 + c_u exp(-rho / r_a) exp(-|eta| / e_a).
double attention(double rho, double eta, const ModelParams& p, const AttentionGains& gains);

/// tan(eta_h) clamped to [-z_h_max, z_h_max]; saturated when clamped or when
/// |eta_h| is within 1e-3 of pi/2.
HumanProxy human_opinion_proxy(double eta_h, double z_h_max = 5.0);

/// base * exp(-dist / decay).
double coupling_gain(double base, double dist, double decay);

/// -k_h wrap(heading - bearing to goal) + k_z z. Positive means turning left.
double steer(const RobotState& robot, Vec2 goal, double opinion_z, const SteerGains& gains);

struct RobotSpec {
  Vec2 start;
  double heading = 0.0;
  Vec2 goal;
  AgentState opinion;
};

struct ScenarioConfig {
  std::vector<RobotSpec> robots;
  std::vector<HumanMover> humans;
  /// Row-major robot coupling. Diagonal entries are the self-reinforcement
  /// a_ii; off-diagonal entries decay with robot-robot distance.
  std::vector<double> adjacency;
  double decay = 2.0;
  ModelParams params;
  IntegrationConfig integration;
  AttentionGains attention;
  SteerGains steer;
  double speed = 1.0;
  double v_max = 1.5;
  double goal_radius = 0.25;
  double collision_radius = 0.3;
  double sensing_range = 6.0;
  double z_h_max = 5.0;
  double spike_threshold = 0.5;

  void validate() const;
  /// The same world reflected about the x-axis, with the noise sign flipped.
  ScenarioConfig mirrored() const;
};

struct RobotSample {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double z = 0.0;
  double u_s = 0.0;
};

struct ScenarioResult {
  std::size_t n_robots = 0;
  std::vector<double> times;
  std::vector<RobotSample> samples;  // index k * n_robots + i
  Trajectory opinions;               // z and u_s of every robot, for spike analysis
  std::vector<double> min_human_distance;
  std::vector<std::optional<double>> time_to_goal;
  std::vector<bool> collision;
  std::vector<SpikeEvent> spikes;
  std::size_t proxy_saturations = 0;

  const RobotSample& sample(std::size_t k, std::size_t i) const { return samples[k * n_robots + i]; }
};

/// Integrates robots and their opinions together. A robot that comes within
/// goal_radius of its goal stops and leaves every coupling sum.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// CSV with header t,robot,x,y,theta,z,u_s.
void write_scenario_csv(std::ostream& os, const ScenarioResult& result);

}  // namespace snod
