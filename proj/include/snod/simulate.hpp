#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "snod/dynamics.hpp"

namespace snod {

enum class Scheme { DeterministicRK4, StochasticEulerMaruyama };

enum class SystemKind { NOD, SNOD, Network };

struct IntegrationConfig {
  double dt = 0.01;
  double t_end = 200.0;
  double noise_sigma = 0.0;  // on the opinion equations only
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::DeterministicRK4;
  // Multiplies every noise increment. Flipping it together with the initial
  // opinion mirrors a stochastic run exactly.
  double noise_sign = 1.0;

  /// Throws ConfigError for dt <= 0, t_end <= 0, sigma < 0, |noise_sign| != 1,
  /// or noise requested under the deterministic scheme.
  void validate() const;

  /// Warns when dt > tau_z / 20.
  std::vector<std::string> warnings(const ModelParams& p) const;

  std::size_t steps() const;
};

/// Sampled solution. States and inputs are stored time-major:
/// index k * n_agents + i.
struct Trajectory {
  std::size_t n_agents = 0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<AgentState> states;
  std::vector<double> inputs;
  ModelParams params;

  std::size_t size() const { return times.size(); }
  const AgentState& state(std::size_t k, std::size_t i) const { return states[k * n_agents + i]; }
  double input(std::size_t k, std::size_t i) const { return inputs[k * n_agents + i]; }
};

enum class Direction { Up, Down };

struct SpikeEvent {
  std::size_t agent = 0;
  double t_on = 0.0;
  double t_peak = 0.0;
  double t_off = 0.0;
  Direction direction = Direction::Up;
  double amplitude = 0.0;
};

struct SyncResult {
  double value = 0.0;
  bool degenerate = false;  // one of the signals is constant over the window
};

/// Seed of agent i's noise stream. Depends only on (master, i), so adding
/// agents leaves earlier streams untouched.
std::uint64_t agent_stream_seed(std::uint64_t master, std::size_t agent);

/// Fixed-step integration of `init.size()` agents.
///
/// NOD and SNOD integrate each agent independently with `inputs[i]` (an empty
/// span means b = 0). NOD leaves u_s at its initial value. Network requires
/// `net`; its own inputs are used unless `inputs` is non-empty.
/// Throws DivergenceError as soon as a state becomes non-finite.
Trajectory integrate(SystemKind kind, std::span<const AgentState> init, const NetworkConfig* net,
                     const ModelParams& p, const IntegrationConfig& cfg,
                     std::span<const InputSignal> inputs = {});

/// Maximal runs with z >= threshold (Up) or z <= -threshold (Down). Crossing
/// times are linearly interpolated between samples. Runs still above
/// threshold at either end of the record are not reported.
std::vector<SpikeEvent> detect_spikes(const Trajectory& traj, double threshold = 0.5);

/// Events with t_peak in [t0, t1), divided by t1 - t0.
double spike_frequency(std::span<const SpikeEvent> events, std::pair<double, double> window);

/// Zero-lag Pearson correlation of z_i and z_k over samples with t in
/// [window.first, window.second] (the whole record when absent).
SyncResult sync_metric(const Trajectory& traj, std::size_t i, std::size_t k,
                       std::optional<std::pair<double, double>> window = std::nullopt);

std::string_view to_string(Direction d);
std::string_view to_string(Scheme s);
std::string_view to_string(SystemKind k);

/// CSV with header t,agent,z,u_s,b, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// CSV with header agent,t_on,t_peak,t_off,direction,amplitude.
void write_spikes_csv(std::ostream& os, std::span<const SpikeEvent> events);

/// One classical RK4 step of y' = f(t, y) in place. `f(t, y, dy)` fills dy.
template <class F>
void rk4_step(std::vector<double>& y, double t, double dt, F&& f) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(t, y, k1);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * dt * k1[j];
  f(t + 0.5 * dt, tmp, k2);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * dt * k2[j];
  f(t + 0.5 * dt, tmp, k3);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + dt * k3[j];
  f(t + dt, tmp, k4);
  for (std::size_t j = 0; j < n; ++j) {
    y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
}

}  // namespace snod
