#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace snod {

/// Scalar parameters shared by NOD and S-NOD.
///
/// `u0` is the basal attention and `ku` the gain of the quadratic attention
/// feedback. `kus` and `tau_us` only matter for the spiking model.
struct ModelParams {
  double d = 1.0;
  double a = 2.0;
  double u0 = 0.5;
  double ku = 2.0;
  double kus = 6.0;
  double tau_z = 1.0;
  double tau_us = 10.0;

  /// Throws ConfigError unless d, a, tau_z, tau_us > 0 and u0, ku, kus >= 0.
  void validate() const;

  /// Non-fatal diagnostics, currently the timescale-separation check
  /// tau_us / tau_z >= 10 that the spiking model relies on.
  std::vector<std::string> warnings() const;

  bool operator==(const ModelParams&) const = default;
};

struct AgentState {
  double z = 0.0;
  double u_s = 0.0;

  bool operator==(const AgentState&) const = default;
};

/// Time derivative of an AgentState.
struct StateRate {
  double dz = 0.0;
  double dus = 0.0;

  bool operator==(const StateRate&) const = default;
};

/// Piecewise-constant input b(t).
///
/// Each breakpoint (t_start, value) holds from t_start until the next
/// breakpoint. Before the first breakpoint the signal is zero.
class InputSignal {
 public:
  InputSignal() = default;
  explicit InputSignal(std::vector<std::pair<double, double>> breakpoints);

  /// b(t) = value for all t.
  static InputSignal constant(double value);

  double operator()(double t) const;

  const std::vector<std::pair<double, double>>& breakpoints() const { return breakpoints_; }

 private:
  std::vector<std::pair<double, double>> breakpoints_;
};

/// Adjacency and inputs of a multi-agent S-NOD network.
///
/// `adjacency` is row-major: entry (i, k) is the weight of agent k's opinion
/// in agent i's coupling sum.
struct NetworkConfig {
  std::size_t n_agents = 1;
  std::vector<double> adjacency{1.0};
  std::vector<InputSignal> inputs;

  /// Per-agent parameters. Empty means every agent uses the shared params.
  /// Differing entries are rejected unless `allow_heterogeneous` is set.
  std::vector<ModelParams> agent_params;
  bool allow_heterogeneous = false;

  double weight(std::size_t i, std::size_t k) const { return adjacency[i * n_agents + k]; }

  /// Square adjacency of size n_agents, a_ii >= 0, inputs empty or one per
  /// agent, homogeneous agent_params.
  void validate() const;
};

/// NOD opinion rate (-d z + tanh((u0 + ku z^2) a z + b)) / tau_z.
double nod_rhs(double z, double b, const ModelParams& p);

/// S-NOD rate: the NOD opinion rate with effective attention u0 - u_s, and
/// (kus z^4 - u_s) / tau_us for the slow variable.
StateRate snod_rhs(const AgentState& s, double b, const ModelParams& p);

/// Multi-agent S-NOD with the adjacency given explicitly.
///
/// `inputs[i]` is b_i at the evaluation time. `external[i]`, when non-empty,
/// is added to agent i's coupling sum. `basal[i]`, when non-empty, replaces
/// p.u0 for agent i.
std::vector<StateRate> network_snod_rhs(std::span<const AgentState> states,
                                        std::span<const double> adjacency,
                                        std::span<const double> inputs, const ModelParams& p,
                                        std::span<const double> external = {},
                                        std::span<const double> basal = {});

/// Multi-agent S-NOD evaluated at time t with inputs taken from `net`.
std::vector<StateRate> network_snod_rhs(std::span<const AgentState> states, double t,
                                        const NetworkConfig& net, const ModelParams& p,
                                        std::span<const double> external = {});

}  // namespace snod
