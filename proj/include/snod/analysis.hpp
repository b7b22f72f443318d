#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "snod/dynamics.hpp"

namespace snod {

/// Coefficients of the odd Taylor expansion of the NOD rate about z = 0,
/// including the 1/tau_z factor, plus the normal-form coefficients evaluated
/// at the singular attention d/a.
struct TaylorCoefficients {
  double c1 = 0.0;
  double c3 = 0.0;
  double c5 = 0.0;
  double p_norm = 0.0;  // ku - d^3 / (3a)
  double q_norm = 0.0;  // 2 d^3 / (15a) - ku
};

enum class PitchforkClass { Supercritical, Quintic, Subcritical };

enum class Stability { Stable, Unstable, Saddle, Fold };

std::string_view to_string(PitchforkClass c);
std::string_view to_string(Stability s);

/// Unstable or saddle: not attracting.
inline bool is_unstable(Stability s) { return s == Stability::Unstable || s == Stability::Saddle; }

struct EquilibriumPoint {
  double z = 0.0;
  double u_s = 0.0;
  Stability stability = Stability::Stable;
  std::vector<std::complex<double>> eigenvalues;
};

struct BranchPoint {
  double u0 = 0.0;
  double z = 0.0;
  Stability stability = Stability::Stable;
};

struct FoldPoint {
  double u0 = 0.0;
  double z = 0.0;
};

struct BifurcationBranch {
  std::vector<BranchPoint> points;
  std::vector<FoldPoint> fold_points;
};

struct FoldSensitivity {
  double u0_dagger = 0.0;
  double z_dagger = 0.0;
  double du0_dku = 0.0;
};

struct NullclinePoint {
  double u_s = 0.0;
  double z = 0.0;
  Stability stability = Stability::Stable;
  int branch_id = 0;
};

struct Nullclines {
  std::vector<NullclinePoint> z_nullcline;
  std::vector<NullclinePoint> us_nullcline;
};

struct Tolerances {
  double eq = 1e-10;     // residual of the rate at a returned equilibrium
  double eig = 1e-6;     // |eigenvalue| below which a point is a fold
  double dedup = 1e-7;   // roots closer than this are merged
  double cls = 1e-12;    // |ku - d^3/(3a)| below which the pitchfork is quintic
};

/// Root scan over |z| <= 1/d + margin with `grid_points` samples.
struct ScanOptions {
  int grid_points = 4096;
  double margin = 0.5;
};

struct ContinuationOptions {
  ScanOptions scan;
  double max_dz = 0.05;  // largest opinion jump accepted between neighbouring samples
  int max_refine = 12;   // how many times an interval may be halved to restore continuity
};

constexpr Tolerances kDefaultTolerances{};

TaylorCoefficients taylor_coefficients(const ModelParams& p);

/// Attention at which the neutral opinion loses stability, d/a.
double critical_attention(const ModelParams& p);

PitchforkClass classify_pitchfork(const ModelParams& p, const Tolerances& tol = kDefaultTolerances);

/// d/dz of the NOD rate.
double nod_rhs_dz(double z, double b, const ModelParams& p);

/// Equilibria of the scalar NOD model, sorted by z. `u0_override` replaces
/// p.u0 and may be negative (continuation sweeps cross u0 = 0).
std::vector<EquilibriumPoint> find_equilibria(const ModelParams& p, double b,
                                              std::optional<double> u0_override = std::nullopt,
                                              const ScanOptions& scan = {},
                                              const Tolerances& tol = kDefaultTolerances);

/// Equilibrium branches of the NOD model over u0 in [u0_lo, u0_hi].
///
/// The sweep samples u0 every `step`, halving intervals where consecutive
/// root sets cannot be matched, and joins branches through the folds it finds.
/// Throws ContinuationError when continuity cannot be restored.
std::vector<BifurcationBranch> trace_branches(const ModelParams& p, double b,
                                              std::pair<double, double> u0_range, double step,
                                              const ContinuationOptions& opts = {},
                                              const Tolerances& tol = kDefaultTolerances);

/// Every fold point over all branches.
std::vector<FoldPoint> all_folds(std::span<const BifurcationBranch> branches);

/// Upper saddle-node (z > 0) of the unbiased NOD model and the slope of its
/// u0 with respect to ku, which is -(z^dagger)^2. Throws RegimeError unless
/// the pitchfork is subcritical.
FoldSensitivity fold_sensitivity(const ModelParams& p, const Tolerances& tol = kDefaultTolerances);

/// z- and u_s-nullclines of S-NOD in the (u_s, z) plane.
///
/// The z-nullcline is computed in closed form; points with |d z| >= 1 are
/// skipped. Branch ids: 0 for z < 0, 1 for z > 0, 2 for the z = 0 line
/// (present only when b == 0, sampled over `us_span` or, if absent, over the
/// u_s extent of the other branches).
Nullclines nullclines(const ModelParams& p, double b, std::span<const double> z_grid,
                      std::optional<std::pair<double, double>> us_span = std::nullopt,
                      const Tolerances& tol = kDefaultTolerances);

/// Equilibria of single-agent S-NOD with eigenvalues of the 2x2 Jacobian.
std::vector<EquilibriumPoint> snod_equilibria(const ModelParams& p, double b,
                                              const ScanOptions& scan = {},
                                              const Tolerances& tol = kDefaultTolerances);

/// Jacobian of the S-NOD vector field, row-major [[dz/dz, dz/dus], [dus/dz, dus/dus]].
std::array<double, 4> snod_jacobian(const AgentState& s, double b, const ModelParams& p);

}  // namespace snod
