#include "snod/robot_nav.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "snod/errors.hpp"

namespace snod {

namespace {

constexpr double kPi = std::numbers::pi;

double distance(Vec2 a, Vec2 b) { return std::hypot(b.x - a.x, b.y - a.y); }

double bearing(Vec2 from, Vec2 to) { return std::atan2(to.y - from.y, to.x - from.x); }

}  // namespace

double wrap_angle(double theta) {
  if (!std::isfinite(theta)) throw DomainError("non-finite angle");
  double w = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

Vec2 HumanMover::position(double t) const {
  if (path.empty()) throw ConfigError("human path has no waypoints");
  if (t <= path.front().t) return path.front().position;
  if (t >= path.back().t) return path.back().position;
  const auto it = std::upper_bound(path.begin(), path.end(), t,
                                   [](double lhs, const Waypoint& w) { return lhs < w.t; });
  const Waypoint& w1 = *it;
  const Waypoint& w0 = *std::prev(it);
  const double f = (t - w0.t) / (w1.t - w0.t);
  return {w0.position.x + f * (w1.position.x - w0.position.x),
          w0.position.y + f * (w1.position.y - w0.position.y)};
}

double HumanMover::heading(double t) const {
  if (path.size() < 2) return 0.0;
  // Active segment index, clamped to the path.
  const auto it = std::upper_bound(path.begin(), path.end(), t,
                                   [](double lhs, const Waypoint& w) { return lhs < w.t; });
  std::size_t seg = it == path.begin() ? 0 : static_cast<std::size_t>(it - path.begin()) - 1;
  seg = std::min(seg, path.size() - 2);
  const auto moving = [&](std::size_t s) { return !(path[s].position == path[s + 1].position); };
  for (std::size_t off = 0; off < path.size(); ++off) {
    for (std::size_t s : {seg - std::min(seg, off), std::min(seg + off, path.size() - 2)}) {
      if (moving(s)) return bearing(path[s].position, path[s + 1].position);
    }
  }
  return 0.0;
}

void HumanMover::validate() const {
  if (path.empty()) throw ConfigError("human path has no waypoints");
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& w = path[i];
    if (!std::isfinite(w.t) || !std::isfinite(w.position.x) || !std::isfinite(w.position.y)) {
      throw ConfigError(fmt::format("human waypoint {} is not finite", i));
    }
    if (i > 0 && !(w.t > path[i - 1].t)) {
      throw ConfigError(fmt::format("human waypoint times must increase (index {})", i));
    }
  }
  if (!(radius >= 0.0)) throw ConfigError("human radius must be >= 0");
}

PerceptionSample perceive(const RobotState& robot, const HumanMover& human, double t) {
  const Vec2 h = human.position(t);
  PerceptionSample s;
  s.rho = distance(robot.position, h);
  s.eta = wrap_angle(bearing(robot.position, h) - robot.heading);
  s.eta_h = wrap_angle(human.heading(t) - bearing(h, robot.position));
  return s;
}

double attention(double rho, double eta, const ModelParams& p, const AttentionGains& gains) {
  if (!(rho >= 0.0)) throw DomainError("distance must be >= 0");
  return p.u0 + gains.c_u * std::exp(-rho / gains.r_a) * std::exp(-std::abs(eta) / gains.e_a);
}

HumanProxy human_opinion_proxy(double eta_h, double z_h_max) {
  if (std::abs(std::abs(eta_h) - kPi / 2.0) < 1e-3) {
    // tan is finite and correctly signed this close to the pole.
    return {std::copysign(z_h_max, std::tan(eta_h)), true};
  }
  const double v = std::tan(eta_h);
  if (std::abs(v) > z_h_max) return {std::copysign(z_h_max, v), true};
  return {v, false};
}

double coupling_gain(double base, double dist, double decay) {
  if (!(dist >= 0.0)) throw DomainError("distance must be >= 0");
  if (!(decay > 0.0)) throw ConfigError("coupling decay length must be > 0");
  return base * std::exp(-dist / decay);
}

double steer(const RobotState& robot, Vec2 goal, double opinion_z, const SteerGains& gains) {
  const double error = wrap_angle(robot.heading - bearing(robot.position, goal));
  return -gains.k_h * error + gains.k_z * opinion_z;
}

void ScenarioConfig::validate() const {
  params.validate();
  integration.validate();
  const std::size_t n = robots.size();
  if (n == 0) throw ConfigError("scenario needs at least one robot");
  if (adjacency.size() != n * n) {
    throw ConfigError(fmt::format("adjacency has {} entries for {} robots", adjacency.size(), n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(adjacency[i * n + i] >= 0.0)) throw ConfigError("self-reinforcement must be >= 0");
  }
  for (double w : adjacency) {
    if (!std::isfinite(w)) throw ConfigError("adjacency entries must be finite");
  }
  for (const auto& h : humans) h.validate();
  const auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("{} must be > 0", what));
  };
  positive(decay, "decay");
  positive(v_max, "v_max");
  positive(goal_radius, "goal_radius");
  positive(collision_radius, "collision_radius");
  positive(sensing_range, "sensing_range");
  positive(z_h_max, "z_h_max");
  positive(spike_threshold, "spike_threshold");
  positive(attention.r_a, "attention.r_a");
  positive(attention.e_a, "attention.e_a");
  positive(steer.k_h, "steer.k_h");
  positive(steer.k_z, "steer.k_z");
  if (!(attention.c_u >= 0.0)) throw ConfigError("attention.c_u must be >= 0");
  if (!(speed >= 0.0) || speed > v_max) throw ConfigError("speed must lie in [0, v_max]");
}

ScenarioConfig ScenarioConfig::mirrored() const {
  ScenarioConfig m = *this;
  for (auto& r : m.robots) {
    r.start.y = -r.start.y;
    r.goal.y = -r.goal.y;
    r.heading = -r.heading;
    r.opinion.z = -r.opinion.z;
  }
  for (auto& h : m.humans) {
    for (auto& w : h.path) w.position.y = -w.position.y;
  }
  m.integration.noise_sign = -integration.noise_sign;
  return m;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.robots.size();
  const ModelParams& p = cfg.params;
  const IntegrationConfig& ic = cfg.integration;
  constexpr std::size_t kDim = 5;  // x, y, theta, z, u_s

  std::vector<double> y(kDim * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = cfg.robots[i];
    y[kDim * i + 0] = r.start.x;
    y[kDim * i + 1] = r.start.y;
    y[kDim * i + 2] = r.heading;
    y[kDim * i + 3] = r.opinion.z;
    y[kDim * i + 4] = r.opinion.u_s;
  }
  std::vector<bool> active(n, true);

  const auto robot_at = [&](const std::vector<double>& s, std::size_t i) {
    return RobotState{{s[kDim * i], s[kDim * i + 1]}, s[kDim * i + 2], cfg.speed,
                      {s[kDim * i + 3], s[kDim * i + 4]}};
  };

  std::vector<AgentState> states(n);
  std::vector<double> coupling(n * n), external(n), basal(n), no_input(n, 0.0);
  const auto rhs = [&](double t, const std::vector<double>& s, std::vector<double>& ds) {
    for (std::size_t i = 0; i < n; ++i) {
      const RobotState r = robot_at(s, i);
      states[i] = r.opinion;
      double u_eff = p.u0;
      double ext = 0.0;
      for (const auto& h : cfg.humans) {
        const auto ps = perceive(r, h, t);
        if (ps.rho > cfg.sensing_range) continue;
        u_eff = std::max(u_eff, attention(ps.rho, ps.eta, p, cfg.attention));
        ext += human_opinion_proxy(ps.eta_h, cfg.z_h_max).value;
      }
      basal[i] = u_eff;
      external[i] = ext;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        double w = 0.0;
        if (i == k) {
          w = cfg.adjacency[i * n + i];
        } else if (active[i] && active[k]) {
          const double dist = std::hypot(s[kDim * k] - s[kDim * i], s[kDim * k + 1] - s[kDim * i + 1]);
          w = coupling_gain(cfg.adjacency[i * n + k], dist, cfg.decay);
        }
        coupling[i * n + k] = w;
      }
    }
    const auto rates = network_snod_rhs(states, coupling, no_input, p, external, basal);
    for (std::size_t i = 0; i < n; ++i) {
      double* d = &ds[kDim * i];
      if (!active[i]) {
        std::fill(d, d + kDim, 0.0);
        continue;
      }
      const RobotState r = robot_at(s, i);
      d[0] = cfg.speed * std::cos(r.heading);
      d[1] = cfg.speed * std::sin(r.heading);
      d[2] = steer(r, cfg.robots[i].goal, r.opinion.z, cfg.steer);
      d[3] = rates[i].dz;
      d[4] = rates[i].dus;
    }
  };

  ScenarioResult res;
  res.n_robots = n;
  res.min_human_distance.assign(n, std::numeric_limits<double>::infinity());
  res.time_to_goal.assign(n, std::nullopt);
  res.collision.assign(n, false);
  res.opinions.n_agents = n;
  res.opinions.dt = ic.dt;
  res.opinions.params = p;

  const auto record = [&](double t) {
    res.times.push_back(t);
    res.opinions.times.push_back(t);
    for (std::size_t i = 0; i < n; ++i) {
      const RobotState r = robot_at(y, i);
      res.samples.push_back({r.position.x, r.position.y, wrap_angle(r.heading), r.opinion.z,
                             r.opinion.u_s});
      res.opinions.states.push_back(r.opinion);
      res.opinions.inputs.push_back(0.0);
      for (const auto& h : cfg.humans) {
        const auto ps = perceive(r, h, t);
        res.min_human_distance[i] = std::min(res.min_human_distance[i], ps.rho);
        if (ps.rho <= cfg.sensing_range && active[i] &&
            human_opinion_proxy(ps.eta_h, cfg.z_h_max).saturated) {
          ++res.proxy_saturations;
        }
      }
    }
  };
  const auto check_arrivals = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      const Vec2 pos{y[kDim * i], y[kDim * i + 1]};
      if (distance(pos, cfg.robots[i].goal) <= cfg.goal_radius) {
        active[i] = false;
        res.time_to_goal[i] = t;
      }
    }
  };

  const bool stochastic = ic.scheme == Scheme::StochasticEulerMaruyama;
  std::vector<std::mt19937_64> streams;
  if (stochastic) {
    for (std::size_t i = 0; i < n; ++i) streams.emplace_back(agent_stream_seed(ic.seed, i));
  }
  std::vector<std::normal_distribution<double>> normals(streams.size());
  const double noise_scale = ic.noise_sign * ic.noise_sigma * std::sqrt(ic.dt);
  std::vector<double> dy(kDim * n);

  check_arrivals(0.0);
  record(0.0);
  const std::size_t steps = ic.steps();
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * ic.dt;
    try {
      if (stochastic) {
        rhs(t, y, dy);
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += ic.dt * dy[j];
        for (std::size_t i = 0; i < n; ++i) {
          const double xi = normals[i](streams[i]);
          if (active[i]) y[kDim * i + 3] += noise_scale * xi;
        }
      } else {
        rk4_step(y, t, ic.dt, rhs);
      }
    } catch (const DomainError& e) {
      throw DivergenceError(fmt::format("scenario state became non-finite after t = {}: {}", t, e.what()), t);
    }
    if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
      throw DivergenceError(fmt::format("scenario state became non-finite after t = {}", t), t);
    }
    const double t_next = static_cast<double>(k + 1) * ic.dt;
    check_arrivals(t_next);
    record(t_next);
    if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) break;
  }

  for (std::size_t i = 0; i < n; ++i) {
    res.collision[i] = res.min_human_distance[i] < cfg.collision_radius;
  }
  res.spikes = detect_spikes(res.opinions, cfg.spike_threshold);
  return res;
}

void write_scenario_csv(std::ostream& os, const ScenarioResult& result) {
  fmt::print(os, "t,robot,x,y,theta,z,u_s\n");
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    for (std::size_t i = 0; i < result.n_robots; ++i) {
      const auto& s = result.sample(k, i);
      fmt::print(os, "{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", result.times[k], i,
                 s.x, s.y, s.theta, s.z, s.u_s);
    }
  }
}

}  // namespace snod
