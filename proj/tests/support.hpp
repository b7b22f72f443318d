#pragma once

// Independent reference computations and random generators for the tests.
// Nothing here calls into the library's analysis code.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "snod/dynamics.hpp"

namespace oracle {

using snod::ModelParams;

// NOD rate in extended precision, written out from the model definition.
inline long double nod_rate(long double z, long double b, const ModelParams& p) {
  const long double arg = (static_cast<long double>(p.u0) + p.ku * z * z) * (p.a * z) + b;
  return (-static_cast<long double>(p.d) * z + std::tanh(arg)) / p.tau_z;
}

inline std::array<long double, 2> snod_rate(long double z, long double us, long double b,
                                            const ModelParams& p) {
  const long double arg = (p.u0 - us + p.ku * z * z) * (p.a * z) + b;
  return {(-static_cast<long double>(p.d) * z + std::tanh(arg)) / p.tau_z,
          (p.kus * z * z * z * z - us) / p.tau_us};
}

// Roots of f on [lo, hi] located by sign changes on an n-point grid and
// bisected to machine precision.
inline std::vector<double> sign_scan_roots(const std::function<double(double)>& f, double lo,
                                           double hi, int n) {
  std::vector<double> roots;
  double x0 = lo, f0 = f(lo);
  for (int i = 1; i < n; ++i) {
    const double x1 = lo + (hi - lo) * i / (n - 1.0);
    const double f1 = f(x1);
    if (f0 == 0.0) {
      roots.push_back(x0);
    } else if (f1 != 0.0 && (f0 < 0) != (f1 < 0)) {
      double a = x0, b = x1, fa = f0;
      for (int k = 0; k < 200 && b - a > 1e-16; ++k) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm < 0) == (fa < 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    f0 = f1;
  }
  if (f0 == 0.0) roots.push_back(x0);
  return roots;
}

// Number of NOD equilibria at attention u0 counted by a dense sign scan.
inline int nod_root_count(ModelParams p, double u0, double b = 0.0, int n = 20001) {
  p.u0 = u0;
  const double half = 1.0 / p.d + 0.5;
  // Offset the grid so z = 0 never lands on a sample when b = 0.
  const auto f = [&](double z) { return static_cast<double>(nod_rate(z, b, p)); };
  const double shift = 0.37 * (2.0 * half) / (n - 1.0);
  return static_cast<int>(sign_scan_roots(f, -half + shift, half + shift, n).size());
}

// Fold attention of the b = 0 NOD: largest-magnitude u0 at which the root
// count changes, found by bisection on the count itself over [lo, hi].
inline double fold_by_root_count(const ModelParams& p, double lo, double hi) {
  const int n_lo = nod_root_count(p, lo);
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (nod_root_count(p, mid) == n_lo) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct PlanarEquilibrium {
  double z;
  double us;
  std::array<std::complex<double>, 2> eig;
};

// Equilibria of single-agent S-NOD from a 2-D grid of sign-change cells,
// each refined by Newton's method with a finite-difference Jacobian.
inline std::vector<PlanarEquilibrium> snod_grid_equilibria(const ModelParams& p, double b,
                                                           double us_lo, double us_hi, int nz,
                                                           int nus) {
  const double zmax = 1.0 / p.d + 0.2;
  const auto F = [&](double z, double us) {
    const auto r = snod_rate(z, us, b, p);
    return std::array<double, 2>{static_cast<double>(r[0]), static_cast<double>(r[1])};
  };
  const auto jac = [&](double z, double us) {
    const double h = 1e-7;
    const auto fzp = F(z + h, us), fzm = F(z - h, us), fup = F(z, us + h), fum = F(z, us - h);
    return std::array<double, 4>{(fzp[0] - fzm[0]) / (2 * h), (fup[0] - fum[0]) / (2 * h),
                                 (fzp[1] - fzm[1]) / (2 * h), (fup[1] - fum[1]) / (2 * h)};
  };
  std::vector<PlanarEquilibrium> out;
  const double dz = 2 * zmax / nz, dus = (us_hi - us_lo) / nus;
  for (int i = 0; i < nz; ++i) {
    for (int j = 0; j < nus; ++j) {
      // Cell corners, shifted off the symmetry axis.
      const double z0 = -zmax + (i + 0.123) * dz, u0 = us_lo + (j + 0.0917) * dus;
      bool c0 = false, c1 = false;
      {
        double mn0 = 1e300, mx0 = -1e300, mn1 = 1e300, mx1 = -1e300;
        for (int a = 0; a <= 1; ++a) {
          for (int c = 0; c <= 1; ++c) {
            const auto f = F(z0 + a * dz, u0 + c * dus);
            mn0 = std::min(mn0, f[0]), mx0 = std::max(mx0, f[0]);
            mn1 = std::min(mn1, f[1]), mx1 = std::max(mx1, f[1]);
          }
        }
        c0 = mn0 <= 0 && mx0 >= 0;
        c1 = mn1 <= 0 && mx1 >= 0;
      }
      if (!c0 || !c1) continue;
      double z = z0 + 0.5 * dz, us = u0 + 0.5 * dus;
      bool ok = false;
      for (int it = 0; it < 100; ++it) {
        const auto f = F(z, us);
        const auto J = jac(z, us);
        const double det = J[0] * J[3] - J[1] * J[2];
        if (det == 0.0) break;
        const double sz = (f[0] * J[3] - f[1] * J[1]) / det;
        const double su = (J[0] * f[1] - J[2] * f[0]) / det;
        z -= sz;
        us -= su;
        if (std::abs(sz) + std::abs(su) < 1e-15) {
          ok = true;
          break;
        }
      }
      const auto f = F(z, us);
      if (!ok && std::hypot(f[0], f[1]) > 1e-12) continue;
      if (std::abs(z - (z0 + 0.5 * dz)) > 2 * dz || std::abs(us - (u0 + 0.5 * dus)) > 2 * dus) continue;
      // Degenerate (fold) roots only converge to ~eps^(1/3), hence the wide merge radius.
      bool dup = false;
      for (const auto& e : out) {
        if (std::abs(e.z - z) < 1e-6 && std::abs(e.us - us) < 1e-6) dup = true;
      }
      if (dup) continue;
      const auto J = jac(z, us);
      const std::complex<double> tr = J[0] + J[3], det = J[0] * J[3] - J[1] * J[2];
      const auto s = std::sqrt(tr * tr - 4.0 * det);
      out.push_back({z, us, {(tr - s) / 2.0, (tr + s) / 2.0}});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.z < y.z; });
  return out;
}

}  // namespace oracle

namespace gen {

// Seeded generator so every property run is reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  std::uint64_t bits() { return eng_(); }

  snod::ModelParams params() {
    snod::ModelParams p;
    p.d = uniform(0.5, 2.0);
    p.a = uniform(0.5, 3.0);
    p.u0 = uniform(0.0, 1.5);
    p.ku = uniform(0.0, 4.0);
    p.kus = uniform(0.0, 20.0);
    p.tau_z = uniform(0.2, 2.0);
    p.tau_us = p.tau_z * uniform(10.0, 30.0);
    return p;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gen
