#include "snod/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "snod/errors.hpp"

namespace snod {

void IntegrationConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError(fmt::format("dt must be > 0 (got {})", dt));
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw ConfigError(fmt::format("t_end must be > 0 (got {})", t_end));
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError(fmt::format("noise_sigma must be >= 0 (got {})", noise_sigma));
  }
  if (noise_sign != 1.0 && noise_sign != -1.0) throw ConfigError("noise_sign must be +1 or -1");
  if (scheme == Scheme::DeterministicRK4 && noise_sigma > 0.0) {
    throw ConfigError("noise_sigma > 0 requires the Euler-Maruyama scheme");
  }
  if (t_end / dt > 1e9) throw ConfigError("t_end / dt exceeds 1e9 steps");
}

std::vector<std::string> IntegrationConfig::warnings(const ModelParams& p) const {
  std::vector<std::string> out;
  if (dt > p.tau_z / 20.0) {
    out.push_back(fmt::format("dt = {} exceeds tau_z / 20 = {}; the fast timescale is under-resolved",
                              dt, p.tau_z / 20.0));
  }
  return out;
}

std::size_t IntegrationConfig::steps() const {
  return static_cast<std::size_t>(std::llround(t_end / dt));
}

std::uint64_t agent_stream_seed(std::uint64_t master, std::size_t agent) {
  // splitmix64 of a per-agent counter offset.
  std::uint64_t x = master + (static_cast<std::uint64_t>(agent) + 1) * 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string_view to_string(Direction d) { return d == Direction::Up ? "up" : "down"; }

std::string_view to_string(Scheme s) {
  return s == Scheme::DeterministicRK4 ? "rk4" : "euler_maruyama";
}

std::string_view to_string(SystemKind k) {
  switch (k) {
    case SystemKind::NOD: return "nod";
    case SystemKind::SNOD: return "snod";
    case SystemKind::Network: return "network";
  }
  return "unknown";
}

Trajectory integrate(SystemKind kind, std::span<const AgentState> init, const NetworkConfig* net,
                     const ModelParams& p, const IntegrationConfig& cfg,
                     std::span<const InputSignal> inputs) {
  p.validate();
  cfg.validate();
  const std::size_t n = init.size();
  if (n == 0) throw ConfigError("no initial states given");
  for (const auto& s : init) {
    if (!std::isfinite(s.z) || !std::isfinite(s.u_s)) throw ConfigError("initial state is not finite");
  }
  if (!inputs.empty() && inputs.size() != n) {
    throw ConfigError(fmt::format("{} input signals for {} agents", inputs.size(), n));
  }
  NetworkConfig network;
  if (kind == SystemKind::Network) {
    if (net == nullptr) throw ConfigError("network integration requires a NetworkConfig");
    network = *net;
    if (!inputs.empty()) network.inputs.assign(inputs.begin(), inputs.end());
    network.validate();
    if (network.n_agents != n) {
      throw ConfigError(fmt::format("{} initial states for a network of {} agents", n, network.n_agents));
    }
  }

  const auto input_at = [&](std::size_t i, double t) -> double {
    if (kind == SystemKind::Network) return network.inputs.empty() ? 0.0 : network.inputs[i](t);
    return inputs.empty() ? 0.0 : inputs[i](t);
  };

  // Flat state vector [z_0, u_s0, z_1, u_s1, ...].
  const auto rhs = [&](double t, const std::vector<double>& y, std::vector<double>& dy) {
    if (kind == SystemKind::Network) {
      std::vector<AgentState> states(n);
      for (std::size_t i = 0; i < n; ++i) states[i] = {y[2 * i], y[2 * i + 1]};
      const auto rates = network_snod_rhs(states, t, network, p);
      for (std::size_t i = 0; i < n; ++i) {
        dy[2 * i] = rates[i].dz;
        dy[2 * i + 1] = rates[i].dus;
      }
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double b = input_at(i, t);
      if (kind == SystemKind::NOD) {
        dy[2 * i] = nod_rhs(y[2 * i], b, p);
        dy[2 * i + 1] = 0.0;
      } else {
        const auto r = snod_rhs({y[2 * i], y[2 * i + 1]}, b, p);
        dy[2 * i] = r.dz;
        dy[2 * i + 1] = r.dus;
      }
    }
  };

  const std::size_t steps = cfg.steps();
  Trajectory traj;
  traj.n_agents = n;
  traj.dt = cfg.dt;
  traj.params = p;
  traj.times.reserve(steps + 1);
  traj.states.reserve((steps + 1) * n);
  traj.inputs.reserve((steps + 1) * n);

  std::vector<double> y(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y[2 * i] = init[i].z;
    y[2 * i + 1] = init[i].u_s;
  }
  const auto record = [&](double t) {
    traj.times.push_back(t);
    for (std::size_t i = 0; i < n; ++i) {
      traj.states.push_back({y[2 * i], y[2 * i + 1]});
      traj.inputs.push_back(input_at(i, t));
    }
  };

  const bool stochastic = cfg.scheme == Scheme::StochasticEulerMaruyama;
  std::vector<std::mt19937_64> streams;
  // One distribution per stream: libstdc++ caches the second normal of each pair.
  std::vector<std::normal_distribution<double>> normals;
  if (stochastic) {
    for (std::size_t i = 0; i < n; ++i) streams.emplace_back(agent_stream_seed(cfg.seed, i));
    normals.resize(n);
  }
  const double noise_scale = cfg.noise_sign * cfg.noise_sigma * std::sqrt(cfg.dt);
  std::vector<double> dy(2 * n);

  record(0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    try {
      if (stochastic) {
        rhs(t, y, dy);
        for (std::size_t j = 0; j < 2 * n; ++j) y[j] += cfg.dt * dy[j];
        for (std::size_t i = 0; i < n; ++i) {
          const double xi = normals[i](streams[i]);
          y[2 * i] += noise_scale * xi;
        }
      } else {
        rk4_step(y, t, cfg.dt, rhs);
      }
    } catch (const DomainError& e) {
      throw DivergenceError(fmt::format("state became non-finite after t = {}: {}", t, e.what()), t);
    }
    if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
      throw DivergenceError(fmt::format("state became non-finite after t = {}", t), t);
    }
    record(static_cast<double>(k + 1) * cfg.dt);
  }
  return traj;
}

std::vector<SpikeEvent> detect_spikes(const Trajectory& traj, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("spike threshold must be > 0");
  std::vector<SpikeEvent> events;
  const std::size_t m = traj.size();
  for (std::size_t i = 0; i < traj.n_agents; ++i) {
    const auto z = [&](std::size_t k) { return traj.state(k, i).z; };
    const auto side = [&](double v) { return v >= threshold ? 1 : (v <= -threshold ? -1 : 0); };
    // Time at which the segment k-1 -> k crosses level `sign * threshold`.
    const auto crossing = [&](std::size_t k, int sign) {
      const double level = sign * threshold;
      const double z0 = z(k - 1), z1 = z(k);
      const double frac = z1 == z0 ? 0.0 : (level - z0) / (z1 - z0);
      return traj.times[k - 1] + std::clamp(frac, 0.0, 1.0) * (traj.times[k] - traj.times[k - 1]);
    };
    std::size_t k = 0;
    while (k < m) {
      const int s = side(z(k));
      if (s == 0) {
        ++k;
        continue;
      }
      const std::size_t start = k;
      std::size_t peak = k;
      while (k < m && side(z(k)) == s) {
        if (std::abs(z(k)) > std::abs(z(peak))) peak = k;
        ++k;
      }
      if (start == 0 || k == m) continue;  // truncated by the record
      SpikeEvent ev;
      ev.agent = i;
      ev.t_on = crossing(start, s);
      ev.t_off = crossing(k, s);
      ev.t_peak = traj.times[peak];
      ev.direction = s > 0 ? Direction::Up : Direction::Down;
      ev.amplitude = std::abs(z(peak));
      events.push_back(ev);
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const SpikeEvent& x, const SpikeEvent& y) {
    return x.t_on < y.t_on || (x.t_on == y.t_on && x.agent < y.agent);
  });
  return events;
}

double spike_frequency(std::span<const SpikeEvent> events, std::pair<double, double> window) {
  const auto [t0, t1] = window;
  if (!(t1 > t0)) throw ConfigError("spike-frequency window is empty");
  const auto count = std::count_if(events.begin(), events.end(), [&](const SpikeEvent& e) {
    return e.t_peak >= t0 && e.t_peak < t1;
  });
  return static_cast<double>(count) / (t1 - t0);
}

SyncResult sync_metric(const Trajectory& traj, std::size_t i, std::size_t k,
                       std::optional<std::pair<double, double>> window) {
  if (i >= traj.n_agents || k >= traj.n_agents) {
    throw ConfigError(fmt::format("agent index out of range ({} agents)", traj.n_agents));
  }
  double sx = 0.0, sy = 0.0;
  double lo_x = INFINITY, hi_x = -INFINITY, lo_y = INFINITY, hi_y = -INFINITY;
  std::size_t count = 0;
  const auto in_window = [&](double t) {
    return !window || (t >= window->first && t <= window->second);
  };
  for (std::size_t s = 0; s < traj.size(); ++s) {
    if (!in_window(traj.times[s])) continue;
    const double x = traj.state(s, i).z, y = traj.state(s, k).z;
    sx += x;
    sy += y;
    lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
    ++count;
  }
  // Exact constancy check; the centred sums below can be off by rounding.
  if (count < 2 || lo_x == hi_x || lo_y == hi_y) return {0.0, true};
  const double mx = sx / static_cast<double>(count), my = sy / static_cast<double>(count);
  double cxy = 0.0, cxx = 0.0, cyy = 0.0;
  for (std::size_t s = 0; s < traj.size(); ++s) {
    if (!in_window(traj.times[s])) continue;
    const double dx = traj.state(s, i).z - mx;
    const double dy = traj.state(s, k).z - my;
    cxy += dx * dy;
    cxx += dx * dx;
    cyy += dy * dy;
  }
  if (cxx == 0.0 || cyy == 0.0) return {0.0, true};
  return {std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0), false};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  fmt::print(os, "t,agent,z,u_s,b\n");
  for (std::size_t k = 0; k < traj.size(); ++k) {
    for (std::size_t i = 0; i < traj.n_agents; ++i) {
      const auto& s = traj.state(k, i);
      fmt::print(os, "{:.17g},{},{:.17g},{:.17g},{:.17g}\n", traj.times[k], i, s.z, s.u_s,
                 traj.input(k, i));
    }
  }
}

void write_spikes_csv(std::ostream& os, std::span<const SpikeEvent> events) {
  fmt::print(os, "agent,t_on,t_peak,t_off,direction,amplitude\n");
  for (const auto& e : events) {
    fmt::print(os, "{},{:.17g},{:.17g},{:.17g},{},{:.17g}\n", e.agent, e.t_on, e.t_peak, e.t_off,
               to_string(e.direction), e.amplitude);
  }
}

}  // namespace snod
