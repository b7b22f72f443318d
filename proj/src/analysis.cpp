#include "snod/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "snod/errors.hpp"

namespace snod {

std::string_view to_string(PitchforkClass c) {
  switch (c) {
    case PitchforkClass::Supercritical: return "supercritical";
    case PitchforkClass::Quintic: return "quintic";
    case PitchforkClass::Subcritical: return "subcritical";
  }
  return "unknown";
}

std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Saddle: return "saddle";
    case Stability::Fold: return "fold";
  }
  return "unknown";
}

TaylorCoefficients taylor_coefficients(const ModelParams& p) {
  p.validate();
  const double a = p.a, d = p.d, u0 = p.u0, ku = p.ku;
  const double u0_3 = u0 * u0 * u0;
  TaylorCoefficients t;
  t.c1 = (a * u0 - d) / p.tau_z;
  t.c3 = a * (ku - a * a * u0_3 / 3.0) / p.tau_z;
  t.c5 = a * a * a * u0 * u0 * (2.0 * a * a * u0_3 / 15.0 - ku) / p.tau_z;
  const double d3 = d * d * d;
  t.p_norm = ku - d3 / (3.0 * a);
  t.q_norm = 2.0 * d3 / (15.0 * a) - ku;
  return t;
}

double critical_attention(const ModelParams& p) {
  p.validate();
  return p.d / p.a;
}

PitchforkClass classify_pitchfork(const ModelParams& p, const Tolerances& tol) {
  p.validate();
  const double gap = p.ku - p.d * p.d * p.d / (3.0 * p.a);
  if (std::abs(gap) <= tol.cls) return PitchforkClass::Quintic;
  return gap < 0.0 ? PitchforkClass::Supercritical : PitchforkClass::Subcritical;
}

double nod_rhs_dz(double z, double b, const ModelParams& p) {
  const double arg = (p.u0 + p.ku * z * z) * (p.a * z) + b;
  const double th = std::tanh(arg);
  const double sech2 = 1.0 - th * th;
  return (-p.d + sech2 * (p.a * p.u0 + 3.0 * p.a * p.ku * z * z)) / p.tau_z;
}

namespace {

struct ValueSlope {
  double f;
  double df;
};

// Safeguarded Newton inside a sign-change bracket [lo, hi].
template <class F>
double refine_root(F&& f, double lo, double hi, double flo) {
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const auto [fx, dfx] = f(x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    const double width = hi - lo;
    if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
    double next = 0.5 * (lo + hi);
    if (dfx != 0.0 && std::isfinite(dfx)) {
      const double newton = x - fx / dfx;
      if (newton > lo && newton < hi) next = newton;
    }
    if (std::abs(next - x) <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

// All sign changes of f on the uniform grid over [lo, hi] (n samples),
// refined to roots. Exact zeros at grid points are returned as they are.
template <class F>
std::vector<double> grid_roots(F&& f, double lo, double hi, int n) {
  std::vector<double> roots;
  double x_prev = lo;
  double f_prev = f(lo).f;
  if (f_prev == 0.0) roots.push_back(lo);
  for (int i = 1; i < n; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    const double fx = f(x).f;
    if (fx == 0.0) {
      roots.push_back(x);
    } else if (f_prev != 0.0 && (fx < 0.0) != (f_prev < 0.0)) {
      roots.push_back(refine_root(f, x_prev, x, f_prev));
    }
    x_prev = x;
    f_prev = fx;
  }
  return roots;
}

// Roots of an odd function on [-L, L]: scan (0, L], mirror, add z = 0.
template <class F>
std::vector<double> odd_roots(F&& f, double half_width, int n) {
  const int half = std::max(2, n / 2);
  std::vector<double> roots;
  double x_prev = half_width / static_cast<double>(half);
  double f_prev = f(x_prev).f;
  if (f_prev == 0.0) roots.push_back(x_prev);
  for (int i = 2; i <= half; ++i) {
    const double x = half_width * static_cast<double>(i) / static_cast<double>(half);
    const double fx = f(x).f;
    if (fx == 0.0) {
      roots.push_back(x);
    } else if (f_prev != 0.0 && (fx < 0.0) != (f_prev < 0.0)) {
      roots.push_back(refine_root(f, x_prev, x, f_prev));
    }
    x_prev = x;
    f_prev = fx;
  }
  std::vector<double> out;
  out.reserve(2 * roots.size() + 1);
  for (auto it = roots.rbegin(); it != roots.rend(); ++it) out.push_back(-*it);
  out.push_back(0.0);
  out.insert(out.end(), roots.begin(), roots.end());
  return out;
}

std::vector<double> dedup_sorted(std::vector<double> roots, double tol) {
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots) {
    if (out.empty() || r - out.back() > tol) out.push_back(r);
  }
  return out;
}

Stability classify_scalar(double slope, const Tolerances& tol) {
  if (std::abs(slope) <= tol.eig) return Stability::Fold;
  return slope < 0.0 ? Stability::Stable : Stability::Unstable;
}

Stability classify_planar(const std::array<std::complex<double>, 2>& ev, const Tolerances& tol) {
  for (const auto& l : ev) {
    if (std::abs(l) <= tol.eig) return Stability::Fold;
  }
  const bool real = ev[0].imag() == 0.0;
  if (real && ev[0].real() * ev[1].real() < 0.0) return Stability::Saddle;
  if (ev[0].real() < 0.0 && ev[1].real() < 0.0) return Stability::Stable;
  return Stability::Unstable;
}

std::array<std::complex<double>, 2> eigenvalues_2x2(const std::array<double, 4>& j) {
  const double tr = j[0] + j[3];
  const double det = j[0] * j[3] - j[1] * j[2];
  const double disc = tr * tr - 4.0 * det;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    // Stable form of the quadratic roots.
    const double q = -0.5 * (tr + std::copysign(s, tr == 0.0 ? 1.0 : tr));
    if (q == 0.0) return {std::complex<double>(0.0), std::complex<double>(0.0)};
    double l1 = -q;
    double l2 = det / l1;
    if (l1 > l2) std::swap(l1, l2);
    return {std::complex<double>(l1), std::complex<double>(l2)};
  }
  const double im = 0.5 * std::sqrt(-disc);
  return {std::complex<double>(0.5 * tr, -im), std::complex<double>(0.5 * tr, im)};
}

double scan_half_width(const ModelParams& p, const ScanOptions& scan) {
  return 1.0 / p.d + scan.margin;
}

// Attention at which z is an equilibrium of the NOD model (z != 0, |dz| < 1).
double attention_on_branch(double z, double b, const ModelParams& p) {
  return (std::atanh(p.d * z) - b) / (p.a * z) - p.ku * z * z;
}

ModelParams with_u0(ModelParams p, double u0) {
  p.u0 = u0;
  return p;
}

}  // namespace

std::vector<EquilibriumPoint> find_equilibria(const ModelParams& p, double b,
                                              std::optional<double> u0_override,
                                              const ScanOptions& scan, const Tolerances& tol) {
  ModelParams q = p;
  if (u0_override) {
    q.u0 = 0.0;  // the override may be negative; validate the rest
    q.validate();
    q.u0 = *u0_override;
  } else {
    q.validate();
  }
  if (!std::isfinite(b) || !std::isfinite(q.u0)) throw DomainError("non-finite input or attention");

  const auto f = [&](double z) {
    const double arg = (q.u0 + q.ku * z * z) * (q.a * z) + b;
    return ValueSlope{(-q.d * z + std::tanh(arg)) / q.tau_z, nod_rhs_dz(z, b, q)};
  };
  const double half_width = scan_half_width(q, scan);
  std::vector<double> roots = b == 0.0 ? odd_roots(f, half_width, scan.grid_points)
                                       : grid_roots(f, -half_width, half_width, scan.grid_points);
  roots = dedup_sorted(std::move(roots), tol.dedup);

  std::vector<EquilibriumPoint> out;
  out.reserve(roots.size());
  for (double z : roots) {
    const double slope = nod_rhs_dz(z, b, q);
    out.push_back({z, 0.0, classify_scalar(slope, tol), {std::complex<double>(slope)}});
  }
  return out;
}

namespace {

struct Sample {
  double u0;
  std::vector<EquilibriumPoint> roots;
};

struct FoldPair {
  int lo;
  int hi;
};

struct Link {
  std::vector<int> next_of;  // old root index -> new root index or -1
  std::vector<FoldPair> deaths;
  std::vector<FoldPair> births;
};

bool opposite(Stability x, Stability y) {
  if (x == Stability::Fold || y == Stability::Fold) return true;
  return (x == Stability::Stable) != (y == Stability::Stable);
}

// Unmatched roots of one sample must pair up into folds or sit next to a
// matched root (a pitchfork end). Returns false if neither applies.
// A root whose stability flips between samples marks a pitchfork; its direct
// neighbours of opposite stability may then appear or vanish at any distance.
bool classify_unmatched(const std::vector<EquilibriumPoint>& roots,
                        const std::vector<bool>& matched, const std::vector<bool>& flipped,
                        double max_dz, std::vector<FoldPair>& folds) {
  const int n = static_cast<int>(roots.size());
  for (int i = 0; i < n; ++i) {
    if (matched[i]) continue;
    if (i + 1 < n && !matched[i + 1] &&
        roots[i + 1].z - roots[i].z <= 2.0 * max_dz &&
        opposite(roots[i].stability, roots[i + 1].stability)) {
      folds.push_back({i, i + 1});
      ++i;
      continue;
    }
    bool near_matched = false;
    for (int j = 0; j < n; ++j) {
      if (matched[j] && std::abs(roots[j].z - roots[i].z) <= max_dz) near_matched = true;
      if (matched[j] && flipped[j] && std::abs(j - i) == 1 &&
          roots[j].stability != Stability::Fold && roots[i].stability != Stability::Fold &&
          opposite(roots[j].stability, roots[i].stability)) {
        near_matched = true;
      }
    }
    if (!near_matched) return false;
  }
  return true;
}

std::optional<Link> link_samples(const Sample& a, const Sample& b, double max_dz) {
  const int na = static_cast<int>(a.roots.size());
  const int nb = static_cast<int>(b.roots.size());
  struct Candidate {
    double dist;
    int i;
    int j;
  };
  std::vector<Candidate> cands;
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      const double dist = std::abs(a.roots[i].z - b.roots[j].z);
      if (dist <= max_dz) cands.push_back({dist, i, j});
    }
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& x, const Candidate& y) { return x.dist < y.dist; });

  Link link;
  link.next_of.assign(na, -1);
  std::vector<bool> used_a(na, false), used_b(nb, false);
  for (const auto& c : cands) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = true;
    link.next_of[c.i] = c.j;
  }
  std::vector<bool> flipped_a(na, false), flipped_b(nb, false);
  for (int i = 0; i < na; ++i) {
    const int j = link.next_of[i];
    if (j >= 0 && a.roots[i].stability != b.roots[j].stability) flipped_a[i] = flipped_b[j] = true;
  }
  // Branches of a scalar equation cannot cross between samples.
  int last = -1;
  for (int i = 0; i < na; ++i) {
    if (link.next_of[i] < 0) continue;
    if (link.next_of[i] < last) return std::nullopt;
    last = link.next_of[i];
  }
  if (!classify_unmatched(a.roots, used_a, flipped_a, max_dz, link.deaths)) return std::nullopt;
  if (!classify_unmatched(b.roots, used_b, flipped_b, max_dz, link.births)) return std::nullopt;
  return link;
}

// Locate the fold between two equilibria z1, z2 of opposite stability by
// bisection on d(rate)/dz along the branch parametrised by z.
FoldPoint refine_fold(const ModelParams& p, double b, double z1, double z2, double u_lo,
                      double u_hi) {
  const bool usable = z1 * z2 > 0.0 && std::abs(p.d * z1) < 1.0 && std::abs(p.d * z2) < 1.0;
  if (!usable) return {0.5 * (u_lo + u_hi), 0.5 * (z1 + z2)};
  const auto g = [&](double z) { return nod_rhs_dz(z, b, with_u0(p, attention_on_branch(z, b, p))); };
  double lo = std::min(z1, z2), hi = std::max(z1, z2);
  double glo = g(lo);
  const double ghi = g(hi);
  if (glo == 0.0) return {attention_on_branch(lo, b, p), lo};
  if (ghi == 0.0) return {attention_on_branch(hi, b, p), hi};
  if ((glo < 0.0) == (ghi < 0.0)) {
    const double z = std::abs(glo) < std::abs(ghi) ? lo : hi;
    return {attention_on_branch(z, b, p), z};
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  const double z = 0.5 * (lo + hi);
  return {attention_on_branch(z, b, p), z};
}

struct Segment {
  std::vector<BranchPoint> points;
  int start_fold = -1;
  int end_fold = -1;
};

enum class Side { Start, End };

struct Endpoint {
  int segment;
  Side side;
};

}  // namespace

std::vector<BifurcationBranch> trace_branches(const ModelParams& p, double b,
                                              std::pair<double, double> u0_range, double step,
                                              const ContinuationOptions& opts,
                                              const Tolerances& tol) {
  const auto [lo, hi] = u0_range;
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw ConfigError(fmt::format("empty or non-finite u0 range [{}, {}]", lo, hi));
  }
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("continuation step must be > 0");

  const auto sample_at = [&](double u0) {
    return Sample{u0, find_equilibria(p, b, u0, opts.scan, tol)};
  };

  // Accepted samples and the links between consecutive ones.
  std::vector<Sample> samples;
  std::vector<Link> links;
  const auto advance = [&](auto&& self, const Sample& from, Sample to, int depth) -> void {
    if (auto link = link_samples(from, to, opts.max_dz)) {
      links.push_back(std::move(*link));
      samples.push_back(std::move(to));
      return;
    }
    if (depth >= opts.max_refine) {
      throw ContinuationError(fmt::format(
          "branch continuity lost between u0 = {:.10g} and u0 = {:.10g} ({} vs {} equilibria); "
          "reduce the step",
          from.u0, to.u0, from.roots.size(), to.roots.size()));
    }
    Sample mid = sample_at(0.5 * (from.u0 + to.u0));
    self(self, from, mid, depth + 1);
    const Sample left = samples.back();
    self(self, left, std::move(to), depth + 1);
  };

  const auto count = static_cast<long>(std::ceil((hi - lo) / step - 1e-9));
  samples.push_back(sample_at(lo));
  for (long k = 1; k <= count; ++k) {
    const double u0 = k == count ? hi : lo + static_cast<double>(k) * step;
    const Sample from = samples.back();
    advance(advance, from, sample_at(u0), 0);
  }

  // Chain roots into segments; folds join segment ends.
  std::vector<Segment> segments;
  std::vector<FoldPoint> folds;
  std::vector<std::array<Endpoint, 2>> fold_ends;
  std::vector<int> seg_of(samples.front().roots.size());
  for (std::size_t r = 0; r < samples.front().roots.size(); ++r) {
    const auto& e = samples.front().roots[r];
    segments.push_back({{{samples.front().u0, e.z, e.stability}}, -1, -1});
    seg_of[r] = static_cast<int>(segments.size()) - 1;
  }
  for (std::size_t s = 0; s + 1 < samples.size(); ++s) {
    const Sample& from = samples[s];
    const Sample& to = samples[s + 1];
    const Link& link = links[s];
    std::vector<int> next_seg(to.roots.size(), -1);
    for (std::size_t i = 0; i < from.roots.size(); ++i) {
      const int j = link.next_of[i];
      if (j < 0) continue;
      const auto& e = to.roots[j];
      segments[seg_of[i]].points.push_back({to.u0, e.z, e.stability});
      next_seg[j] = seg_of[i];
    }
    for (const auto& pair : link.deaths) {
      const int f = static_cast<int>(folds.size());
      folds.push_back(refine_fold(p, b, from.roots[pair.lo].z, from.roots[pair.hi].z, from.u0, to.u0));
      segments[seg_of[pair.lo]].end_fold = f;
      segments[seg_of[pair.hi]].end_fold = f;
      fold_ends.push_back({Endpoint{seg_of[pair.lo], Side::End}, Endpoint{seg_of[pair.hi], Side::End}});
    }
    std::vector<bool> born_in_fold(to.roots.size(), false);
    for (const auto& pair : link.births) {
      const int f = static_cast<int>(folds.size());
      folds.push_back(refine_fold(p, b, to.roots[pair.lo].z, to.roots[pair.hi].z, from.u0, to.u0));
      std::array<Endpoint, 2> ends{};
      int slot = 0;
      for (int j : {pair.lo, pair.hi}) {
        const auto& e = to.roots[j];
        segments.push_back({{{to.u0, e.z, e.stability}}, f, -1});
        next_seg[j] = static_cast<int>(segments.size()) - 1;
        born_in_fold[j] = true;
        ends[slot++] = Endpoint{next_seg[j], Side::Start};
      }
      fold_ends.push_back(ends);
    }
    for (std::size_t j = 0; j < to.roots.size(); ++j) {
      if (next_seg[j] >= 0) continue;
      const auto& e = to.roots[j];
      segments.push_back({{{to.u0, e.z, e.stability}}, -1, -1});
      next_seg[j] = static_cast<int>(segments.size()) - 1;
    }
    seg_of = std::move(next_seg);
  }

  // Walk segment chains into branches, starting from free ends.
  std::vector<bool> visited(segments.size(), false);
  std::vector<BifurcationBranch> branches;
  const auto walk = [&](int seg, Side enter) {
    BifurcationBranch branch;
    while (true) {
      visited[seg] = true;
      const auto& pts = segments[seg].points;
      if (enter == Side::Start) {
        branch.points.insert(branch.points.end(), pts.begin(), pts.end());
      } else {
        branch.points.insert(branch.points.end(), pts.rbegin(), pts.rend());
      }
      const Side exit = enter == Side::Start ? Side::End : Side::Start;
      const int f = exit == Side::End ? segments[seg].end_fold : segments[seg].start_fold;
      if (f < 0) break;
      branch.fold_points.push_back(folds[f]);
      branch.points.push_back({folds[f].u0, folds[f].z, Stability::Fold});
      const auto& ends = fold_ends[f];
      const Endpoint other =
          (ends[0].segment == seg && ends[0].side == exit) ? ends[1] : ends[0];
      if (visited[other.segment]) break;
      seg = other.segment;
      enter = other.side;
    }
    branches.push_back(std::move(branch));
  };
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (visited[s]) continue;
    if (segments[s].start_fold < 0) {
      walk(static_cast<int>(s), Side::Start);
    } else if (segments[s].end_fold < 0) {
      walk(static_cast<int>(s), Side::End);
    }
  }
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!visited[s]) walk(static_cast<int>(s), Side::Start);  // closed loops
  }
  return branches;
}

std::vector<FoldPoint> all_folds(std::span<const BifurcationBranch> branches) {
  std::vector<FoldPoint> out;
  for (const auto& br : branches) out.insert(out.end(), br.fold_points.begin(), br.fold_points.end());
  return out;
}

FoldSensitivity fold_sensitivity(const ModelParams& p, const Tolerances& tol) {
  if (classify_pitchfork(p, tol) != PitchforkClass::Subcritical) {
    throw RegimeError(fmt::format(
        "no saddle-node: pitchfork is {} (ku = {} vs d^3/(3a) = {})",
        to_string(classify_pitchfork(p, tol)), p.ku, p.d * p.d * p.d / (3.0 * p.a)));
  }
  // Along the upper branch the slope d(rate)/dz is positive (saddle) near
  // z = 0 and negative past the fold.
  const auto g = [&](double z) { return nod_rhs_dz(z, 0.0, with_u0(p, attention_on_branch(z, 0.0, p))); };
  const double z_max = (1.0 - 1e-9) / p.d;
  constexpr int kSamples = 20000;
  double prev_z = z_max / kSamples;
  double prev_g = g(prev_z);
  for (int i = 2; i < kSamples; ++i) {
    const double z = z_max * static_cast<double>(i) / kSamples;
    const double gz = g(z);
    if (prev_g > 0.0 && gz <= 0.0) {
      const FoldPoint fp = refine_fold(p, 0.0, prev_z, z, 0.0, 0.0);
      return {fp.u0, fp.z, -fp.z * fp.z};
    }
    prev_z = z;
    prev_g = gz;
  }
  throw RegimeError("saddle-node not resolved on (0, 1/d); ku is too close to d^3/(3a)");
}

std::array<double, 4> snod_jacobian(const AgentState& s, double b, const ModelParams& p) {
  const double z = s.z;
  const double u = p.u0 - s.u_s;
  const double arg = (u + p.ku * z * z) * (p.a * z) + b;
  const double th = std::tanh(arg);
  const double sech2 = 1.0 - th * th;
  return {(-p.d + sech2 * (p.a * u + 3.0 * p.a * p.ku * z * z)) / p.tau_z,
          -sech2 * p.a * z / p.tau_z, 4.0 * p.kus * z * z * z / p.tau_us, -1.0 / p.tau_us};
}

Nullclines nullclines(const ModelParams& p, double b, std::span<const double> z_grid,
                      std::optional<std::pair<double, double>> us_span, const Tolerances& tol) {
  p.validate();
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    if (!std::isfinite(z_grid[i]) || (i > 0 && !(z_grid[i] > z_grid[i - 1]))) {
      throw ConfigError("nullcline grid must be finite and strictly increasing");
    }
  }
  Nullclines out;
  double us_min = std::numeric_limits<double>::infinity();
  double us_max = -us_min;
  for (double z : z_grid) {
    const double z2 = z * z;
    out.us_nullcline.push_back({p.kus * z2 * z2, z, Stability::Stable, 0});
    if (z == 0.0 || std::abs(p.d * z) >= 1.0) continue;
    const double u_s = p.u0 + p.ku * z2 - (std::atanh(p.d * z) - b) / (p.a * z);
    if (!std::isfinite(u_s)) continue;
    const auto j = snod_jacobian({z, u_s}, b, p);
    out.z_nullcline.push_back({u_s, z, classify_scalar(j[0], tol), z < 0.0 ? 0 : 1});
    us_min = std::min(us_min, u_s);
    us_max = std::max(us_max, u_s);
  }
  if (b == 0.0) {
    auto span = us_span.value_or(std::make_pair(us_min, us_max));
    if (!std::isfinite(span.first) || !std::isfinite(span.second)) span = {p.u0 - 1.0, p.u0 + 1.0};
    const std::size_t n = std::max<std::size_t>(2, z_grid.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double u_s = span.first + (span.second - span.first) * static_cast<double>(i) /
                                          static_cast<double>(n - 1);
      const double slope = (p.a * (p.u0 - u_s) - p.d) / p.tau_z;
      out.z_nullcline.push_back({u_s, 0.0, classify_scalar(slope, tol), 2});
    }
  }
  return out;
}

std::vector<EquilibriumPoint> snod_equilibria(const ModelParams& p, double b,
                                              const ScanOptions& scan, const Tolerances& tol) {
  p.validate();
  if (!std::isfinite(b)) throw DomainError("non-finite input");
  // Restrict the opinion rate to the u_s-nullcline u_s = kus z^4.
  const auto g = [&](double z) {
    const double z2 = z * z;
    const double arg = (p.u0 - p.kus * z2 * z2 + p.ku * z2) * (p.a * z) + b;
    const double th = std::tanh(arg);
    const double slope = p.a * (p.u0 - 5.0 * p.kus * z2 * z2 + 3.0 * p.ku * z2);
    return ValueSlope{-p.d * z + th, -p.d + (1.0 - th * th) * slope};
  };
  const double half_width = scan_half_width(p, scan);
  std::vector<double> roots = b == 0.0 ? odd_roots(g, half_width, scan.grid_points)
                                       : grid_roots(g, -half_width, half_width, scan.grid_points);
  roots = dedup_sorted(std::move(roots), tol.dedup);

  std::vector<EquilibriumPoint> out;
  for (double z : roots) {
    const double z2 = z * z;
    const AgentState s{z, p.kus * z2 * z2};
    const auto ev = eigenvalues_2x2(snod_jacobian(s, b, p));
    out.push_back({s.z, s.u_s, classify_planar(ev, tol), {ev[0], ev[1]}});
  }
  return out;
}

}  // namespace snod
