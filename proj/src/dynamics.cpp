#include "snod/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "snod/errors.hpp"

namespace snod {

void ModelParams::validate() const {
  const auto check = [](bool ok, const char* what, double value) {
    if (!ok || !std::isfinite(value)) {
      throw ConfigError(fmt::format("invalid model parameter: {} (got {})", what, value));
    }
  };
  check(d > 0.0, "d must be > 0", d);
  check(a > 0.0, "a must be > 0", a);
  check(u0 >= 0.0, "u0 must be >= 0", u0);
  check(ku >= 0.0, "ku must be >= 0", ku);
  check(kus >= 0.0, "kus must be >= 0", kus);
  check(tau_z > 0.0, "tau_z must be > 0", tau_z);
  check(tau_us > 0.0, "tau_us must be > 0", tau_us);
}

std::vector<std::string> ModelParams::warnings() const {
  std::vector<std::string> out;
  if (tau_us / tau_z < 10.0) {
    out.push_back(fmt::format(
        "weak timescale separation: tau_us / tau_z = {:.4g} < 10, spiking analysis may not apply",
        tau_us / tau_z));
  }
  return out;
}

InputSignal::InputSignal(std::vector<std::pair<double, double>> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    const auto [t, v] = breakpoints_[i];
    if (std::isnan(t) || !std::isfinite(v)) {
      throw ConfigError(fmt::format("input breakpoint {} is not finite", i));
    }
    if (i > 0 && !(t > breakpoints_[i - 1].first)) {
      throw ConfigError(
          fmt::format("input breakpoints must be strictly increasing in time (index {})", i));
    }
  }
}

InputSignal InputSignal::constant(double value) {
  return InputSignal({{-std::numeric_limits<double>::infinity(), value}});
}

double InputSignal::operator()(double t) const {
  // Last breakpoint with t_start <= t.
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t,
                                   [](double lhs, const auto& bp) { return lhs < bp.first; });
  if (it == breakpoints_.begin()) return 0.0;
  return std::prev(it)->second;
}

void NetworkConfig::validate() const {
  if (n_agents < 1) throw ConfigError("network needs at least one agent");
  if (adjacency.size() != n_agents * n_agents) {
    throw ConfigError(fmt::format("adjacency has {} entries, expected {}x{}", adjacency.size(),
                                  n_agents, n_agents));
  }
  for (std::size_t i = 0; i < n_agents; ++i) {
    if (!(weight(i, i) >= 0.0)) {
      throw ConfigError(fmt::format("self-reinforcement a_{}{} must be >= 0", i, i));
    }
  }
  for (double w : adjacency) {
    if (!std::isfinite(w)) throw ConfigError("adjacency entries must be finite");
  }
  if (!inputs.empty() && inputs.size() != n_agents) {
    throw ConfigError(
        fmt::format("network has {} inputs for {} agents", inputs.size(), n_agents));
  }
  if (!agent_params.empty()) {
    if (agent_params.size() != n_agents) {
      throw ConfigError("agent_params must list one parameter set per agent");
    }
    for (const auto& q : agent_params) q.validate();
    const bool homogeneous = std::all_of(agent_params.begin(), agent_params.end(),
                                         [&](const auto& q) { return q == agent_params.front(); });
    if (!homogeneous && !allow_heterogeneous) {
      throw ConfigError("heterogeneous agent parameters require allow_heterogeneous");
    }
  }
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(fmt::format("non-finite {}: {}", what, v));
}

// Opinion rate for a coupling sum `drive` and attention `u`.
inline double opinion_rate(double z, double drive, double u, double b, const ModelParams& p) {
  return (-p.d * z + std::tanh((u + p.ku * z * z) * drive + b)) / p.tau_z;
}

inline double slow_rate(double z, double u_s, const ModelParams& p) {
  const double z2 = z * z;
  return (p.kus * z2 * z2 - u_s) / p.tau_us;
}

}  // namespace

double nod_rhs(double z, double b, const ModelParams& p) {
  require_finite(z, "opinion");
  require_finite(b, "input");
  return opinion_rate(z, p.a * z, p.u0, b, p);
}

StateRate snod_rhs(const AgentState& s, double b, const ModelParams& p) {
  require_finite(s.z, "opinion");
  require_finite(s.u_s, "slow variable");
  require_finite(b, "input");
  return {opinion_rate(s.z, p.a * s.z, p.u0 - s.u_s, b, p), slow_rate(s.z, s.u_s, p)};
}

std::vector<StateRate> network_snod_rhs(std::span<const AgentState> states,
                                        std::span<const double> adjacency,
                                        std::span<const double> inputs, const ModelParams& p,
                                        std::span<const double> external,
                                        std::span<const double> basal) {
  const std::size_t n = states.size();
  if (adjacency.size() != n * n) {
    throw ConfigError(fmt::format("adjacency has {} entries for {} agents", adjacency.size(), n));
  }
  if (inputs.size() != n) throw ConfigError("one input value per agent required");
  if (!external.empty() && external.size() != n) {
    throw ConfigError("external opinion terms must be empty or one per agent");
  }
  if (!basal.empty() && basal.size() != n) {
    throw ConfigError("basal attention overrides must be empty or one per agent");
  }
  for (const auto& s : states) {
    require_finite(s.z, "opinion");
    require_finite(s.u_s, "slow variable");
  }

  std::vector<StateRate> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double drive = 0.0;
    for (std::size_t k = 0; k < n; ++k) drive += adjacency[i * n + k] * states[k].z;
    if (!external.empty()) drive += external[i];
    const double u0 = basal.empty() ? p.u0 : basal[i];
    require_finite(inputs[i], "input");
    out[i] = {opinion_rate(states[i].z, drive, u0 - states[i].u_s, inputs[i], p),
              slow_rate(states[i].z, states[i].u_s, p)};
  }
  return out;
}

std::vector<StateRate> network_snod_rhs(std::span<const AgentState> states, double t,
                                        const NetworkConfig& net, const ModelParams& p,
                                        std::span<const double> external) {
  if (states.size() != net.n_agents) {
    throw ConfigError(
        fmt::format("{} states for a network of {} agents", states.size(), net.n_agents));
  }
  if (net.adjacency.size() != net.n_agents * net.n_agents) {
    throw ConfigError("adjacency is not square with dimension n_agents");
  }
  std::vector<double> b(net.n_agents, 0.0);
  if (!net.inputs.empty()) {
    if (net.inputs.size() != net.n_agents) throw ConfigError("one input signal per agent required");
    for (std::size_t i = 0; i < net.n_agents; ++i) b[i] = net.inputs[i](t);
  }
  if (net.agent_params.empty()) {
    return network_snod_rhs(states, net.adjacency, b, p, external);
  }

  // Per-agent parameters: evaluate row by row.
  std::vector<StateRate> out(net.n_agents);
  for (std::size_t i = 0; i < net.n_agents; ++i) {
    const auto& q = net.agent_params[i];
    const auto rates = network_snod_rhs(states, net.adjacency, b, q, external);
    out[i] = rates[i];
  }
  return out;
}

}  // namespace snod
