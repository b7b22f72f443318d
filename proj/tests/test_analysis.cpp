#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "snod/analysis.hpp"
#include "snod/errors.hpp"
#include "support.hpp"

using namespace snod;

namespace {

ModelParams params(double d, double a, double u0, double ku, double kus = 6.0) {
  return {d, a, u0, ku, kus, 1.0, 10.0};
}

double fd_rate(const ModelParams& p, double z) { return nod_rhs(z, 0.0, p); }

// Central stencils for the first, third and fifth derivative at z = 0.
double fd_d1(const ModelParams& p, double h) { return (fd_rate(p, h) - fd_rate(p, -h)) / (2 * h); }
double fd_d3(const ModelParams& p, double h) {
  return (fd_rate(p, 2 * h) - 2 * fd_rate(p, h) + 2 * fd_rate(p, -h) - fd_rate(p, -2 * h)) /
         (2 * h * h * h);
}
double fd_d5(const ModelParams& p, double h) {
  return (fd_rate(p, 3 * h) - 4 * fd_rate(p, 2 * h) + 5 * fd_rate(p, h) - 5 * fd_rate(p, -h) +
          4 * fd_rate(p, -2 * h) - fd_rate(p, -3 * h)) /
         (2 * std::pow(h, 5));
}

// One Richardson step removes the h^2 error of a stencil, so the spacing can
// stay wide without a large truncation error.
double fd_d3_extrapolated(const ModelParams& p, double h) {
  return (4 * fd_d3(p, h / 2) - fd_d3(p, h)) / 3;
}
double fd_d5_extrapolated(const ModelParams& p, double h) {
  return (4 * fd_d5(p, h / 2) - fd_d5(p, h)) / 3;
}

std::size_t count_stab(const std::vector<EquilibriumPoint>& eq, Stability s) {
  return static_cast<std::size_t>(
      std::count_if(eq.begin(), eq.end(), [&](const auto& e) { return e.stability == s; }));
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("critical attention") {
  CHECK(critical_attention(params(1, 2, 0.5, 2)) == 0.5);
  CHECK(critical_attention(params(1, 1, 0.5, 2)) == 1.0);
  const ModelParams p = params(0.8, 1.6, 0.5, 2);
  CHECK(critical_attention(p) == doctest::Approx(0.5).epsilon(1e-15));
  ModelParams lo = p, hi = p;
  lo.u0 = 0.49;
  hi.u0 = 0.51;
  CHECK(nod_rhs_dz(0.0, 0.0, lo) < 0.0);
  CHECK(nod_rhs_dz(0.0, 0.0, hi) > 0.0);
  CHECK(nod_rhs_dz(0.0, 0.0, lo) == doctest::Approx((1.6 * 0.49 - 0.8)).epsilon(1e-14));
}

TEST_CASE("pitchfork classification examples") {
  CHECK(classify_pitchfork(params(1, 2, 0.5, 0.1)) == PitchforkClass::Supercritical);
  CHECK(classify_pitchfork(params(1, 2, 0.5, 2)) == PitchforkClass::Subcritical);
  CHECK(classify_pitchfork(params(1, 2, 0.5, 1.0 / 6.0)) == PitchforkClass::Quintic);
  CHECK(to_string(PitchforkClass::Quintic) == "quintic");
  CHECK(to_string(Stability::Saddle) == "saddle");
}

TEST_CASE("property: classification flips at d^3/(3a)") {
  gen::Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    ModelParams p = rng.params();
    const double th = p.d * p.d * p.d / (3 * p.a);
    p.ku = th * (1 - 1e-9);
    CHECK(classify_pitchfork(p) == PitchforkClass::Supercritical);
    p.ku = th * (1 + 1e-9);
    CHECK(classify_pitchfork(p) == PitchforkClass::Subcritical);
    p.ku = th;
    CHECK(classify_pitchfork(p) == PitchforkClass::Quintic);
    const auto t = taylor_coefficients(p);
    CHECK(std::abs(t.p_norm) <= 1e-12);
  }
}

TEST_CASE("property: Taylor coefficients match finite differences") {
  gen::Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams p = rng.params();
    const auto t = taylor_coefficients(p);
    CHECK(fd_d1(p, 1e-4) == doctest::Approx(t.c1).epsilon(1e-4));
    CHECK(fd_d3_extrapolated(p, 1e-3) / 6.0 == doctest::Approx(t.c3).epsilon(1e-4));
    CHECK(fd_d5_extrapolated(p, 1e-2) / 120.0 == doctest::Approx(t.c5).epsilon(1e-2));
  }
}

TEST_CASE("normal-form coefficients") {
  const auto t = taylor_coefficients(params(1, 2, 0.5, 2));
  CHECK(t.p_norm == doctest::Approx(2 - 1.0 / 6.0));
  CHECK(t.q_norm == doctest::Approx(2.0 / 30.0 - 2));
}

TEST_CASE("find_equilibria examples") {
  const ModelParams p = params(1, 2, 0.7, 2);
  const auto eq = find_equilibria(p, 0.0);
  REQUIRE(eq.size() == 3);
  CHECK(eq[1].z == 0.0);
  CHECK(eq[1].stability == Stability::Unstable);
  CHECK(eq[0].stability == Stability::Stable);
  CHECK(eq[2].stability == Stability::Stable);
  CHECK(eq[0].z == doctest::Approx(-eq[2].z).epsilon(1e-12));

  gen::Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelParams q = rng.params();
    const auto e = find_equilibria(q, 0.0);
    CHECK(std::any_of(e.begin(), e.end(), [](const auto& x) { return x.z == 0.0; }));
    CHECK(e.size() % 2 == 1);
  }
}

TEST_CASE("find_equilibria at u0 = 0.3 against a 1e5-sample sign scan") {
  const ModelParams p = params(1, 2, 0.3, 2);
  const auto f = [&](double z) { return static_cast<double>(oracle::nod_rate(z, 0.0L, p)); };
  // Odd grid size puts a sample exactly on z = 0.
  const auto ref = oracle::sign_scan_roots(f, -1.5, 1.5, 100001);
  const auto eq = find_equilibria(p, 0.0);
  REQUIRE(eq.size() == ref.size());
  CHECK(eq.size() == 5);
  for (std::size_t i = 0; i < eq.size(); ++i) CHECK(eq[i].z == doctest::Approx(ref[i]).epsilon(1e-9).scale(1.0));
  CHECK(eq[0].stability == Stability::Stable);
  CHECK(eq[1].stability == Stability::Unstable);
  CHECK(eq[2].stability == Stability::Stable);
  CHECK(eq[3].stability == Stability::Unstable);
  CHECK(eq[4].stability == Stability::Stable);
}

TEST_CASE("property: roots bracketed by a dense sign scan, biased and unbiased") {
  gen::Rng rng(34);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelParams p = rng.params();
    const double b = trial % 2 == 0 ? 0.0 : rng.uniform(-0.3, 0.3);
    const double half = 1.0 / p.d + 0.5;
    const auto f = [&](double z) { return static_cast<double>(oracle::nod_rate(z, b, p)); };
    const auto ref = oracle::sign_scan_roots(f, -half, half, 100001);
    const auto eq = find_equilibria(p, b);
    // A sign scan cannot see tangencies; random params avoid them almost surely.
    REQUIRE(eq.size() == ref.size());
    for (std::size_t i = 0; i < eq.size(); ++i) {
      CHECK(eq[i].z == doctest::Approx(ref[i]).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("property: equilibrium residuals and stability signs") {
  gen::Rng rng(35);
  for (int trial = 0; trial < 200; ++trial) {
    const ModelParams p = rng.params();
    const double b = rng.uniform(-0.5, 0.5);
    for (const auto& e : find_equilibria(p, b)) {
      CHECK(std::abs(nod_rhs(e.z, b, p)) < 1e-10);
      // tanh rounds to exactly 1 for large arguments, so z = 1/d itself can be a root.
      CHECK(std::abs(e.z) <= 1.0 / p.d * (1 + 1e-15));
      const double slope = nod_rhs_dz(e.z, b, p);
      if (e.stability == Stability::Stable) CHECK(slope < 0.0);
      if (e.stability == Stability::Unstable) CHECK(slope > 0.0);
    }
  }
}

TEST_CASE("property: unbiased equilibria are symmetric") {
  gen::Rng rng(36);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = rng.params();
    const auto eq = find_equilibria(p, 0.0);
    for (std::size_t i = 0; i < eq.size(); ++i) {
      CHECK(eq[i].z == -eq[eq.size() - 1 - i].z);
      CHECK(eq[i].stability == eq[eq.size() - 1 - i].stability);
    }
  }
}

TEST_CASE("u0 override may be negative") {
  const ModelParams p = params(1, 2, 0.5, 2);
  const auto eq = find_equilibria(p, 0.0, -0.7);
  REQUIRE(eq.size() == 5);
  CHECK(eq[2].z == 0.0);
  for (const auto& e : eq) {
    ModelParams q = p;
    q.u0 = -0.7;
    CHECK(std::abs(oracle::nod_rate(e.z, 0.0L, q)) < 1e-10);
  }
}

TEST_CASE("trace_branches: supercritical has no folds") {
  const auto br = trace_branches(params(1, 2, 0.5, 0.9 / 6.0), 0.0, {-1.5, 1.5}, 0.01);
  CHECK(all_folds(br).empty());
  CHECK(br.size() == 3);
}

TEST_CASE("trace_branches: subcritical folds come in a symmetric pair") {
  const auto br = trace_branches(params(1, 2, 0.5, 1.1 / 6.0), 0.0, {-1.5, 1.5}, 0.01);
  const auto folds = all_folds(br);
  REQUIRE(folds.size() == 2);
  CHECK(folds[0].u0 == doctest::Approx(folds[1].u0).epsilon(1e-9));
  CHECK(folds[0].z == doctest::Approx(-folds[1].z).epsilon(1e-9));
  CHECK(folds[0].u0 < 0.5);
}

TEST_CASE("trace_branches: fold of Ku = 2 against a grid oracle") {
  const ModelParams p = params(1, 2, 0.5, 2);
  const auto br = trace_branches(p, 0.0, {-1.5, 1.5}, 0.01);
  const auto folds = all_folds(br);
  REQUIRE(folds.size() == 2);
  // Largest u0 below u0* where the root count jumps from 1 to 5.
  const double ref = oracle::fold_by_root_count(p, 0.4, -1.0);
  CHECK(folds[0].u0 == doctest::Approx(ref).epsilon(1e-3).scale(1.0));
  CHECK(std::abs(folds[0].z) == doctest::Approx(0.94266).epsilon(1e-3));
  for (const auto& f : folds) {
    ModelParams q = p;
    q.u0 = f.u0;
    CHECK(std::abs(nod_rhs(f.z, 0.0, q)) < 1e-9);
    CHECK(std::abs(nod_rhs_dz(f.z, 0.0, q)) < 1e-6);
  }
}

TEST_CASE("property: branch points are equilibria and mirror each other") {
  gen::Rng rng(37);
  for (int trial = 0; trial < 6; ++trial) {
    ModelParams p = rng.params();
    const auto br = trace_branches(p, 0.0, {-1.0, 1.5}, 0.02);
    std::vector<std::pair<double, double>> pts;
    for (const auto& b : br) {
      for (const auto& pt : b.points) {
        ModelParams q = p;
        q.u0 = pt.u0;
        CHECK(std::abs(nod_rhs(pt.z, 0.0, q)) < 1e-8);
        // Folds are tangent double roots, invisible to a sign scan.
        if (pt.stability != Stability::Fold) pts.emplace_back(pt.u0, pt.z);
      }
    }
    // Mirror of each sample lies on some branch at the same u0.
    for (std::size_t k = 0; k < pts.size(); k += 37) {
      const auto [u, z] = pts[k];
      const auto eq = find_equilibria(p, 0.0, u);
      const bool found = std::any_of(eq.begin(), eq.end(),
                                     [&](const auto& e) { return std::abs(e.z + z) < 1e-7; });
      CAPTURE(u);
      CAPTURE(z);
      CHECK(found);
    }
    const auto folds = all_folds(br);
    for (const auto& f : folds) {
      const bool mirrored = std::any_of(folds.begin(), folds.end(), [&](const auto& g) {
        return std::abs(g.u0 - f.u0) < 1e-9 && std::abs(g.z + f.z) < 1e-9;
      });
      CHECK(mirrored);
    }
  }
}

TEST_CASE("property: folds appear just above the threshold only") {
  gen::Rng rng(38);
  for (int trial = 0; trial < 4; ++trial) {
    ModelParams p = rng.params();
    const double th = p.d * p.d * p.d / (3 * p.a);
    const double us = p.d / p.a;
    p.ku = th * 0.9;
    CHECK(all_folds(trace_branches(p, 0.0, {us - 1.0, us + 0.5}, 0.01)).empty());
    p.ku = th * 1.1;
    CHECK(all_folds(trace_branches(p, 0.0, {us - 1.0, us + 0.5}, 0.01)).size() == 2);
  }
}

TEST_CASE("continuation failure is reported") {
  ContinuationOptions opts;
  opts.max_refine = 0;
  opts.max_dz = 1e-4;
  CHECK_THROWS_AS(trace_branches(params(1, 2, 0.5, 2), 0.0, {-1.5, 1.5}, 0.5, opts), ContinuationError);
  CHECK_THROWS_AS(trace_branches(params(1, 2, 0.5, 2), 0.0, {1.0, 1.0}, 0.01), ConfigError);
  CHECK_THROWS_AS(trace_branches(params(1, 2, 0.5, 2), 0.0, {0.0, 1.0}, 0.0), ConfigError);
}

TEST_CASE("fold sensitivity") {
  const auto fs = fold_sensitivity(params(1, 2, 0.5, 2));
  CHECK(fs.u0_dagger == doctest::Approx(-0.842941).epsilon(1e-5));
  CHECK(fs.z_dagger == doctest::Approx(0.94266).epsilon(1e-4));
  CHECK(fs.du0_dku == doctest::Approx(-fs.z_dagger * fs.z_dagger).epsilon(1e-15));

  CHECK_THROWS_AS(fold_sensitivity(params(1, 2, 0.5, 0.1)), RegimeError);
  CHECK_THROWS_AS(fold_sensitivity(params(1, 2, 0.5, 1.0 / 6.0)), RegimeError);

  // Sensitivity vanishes towards the quintic point.
  const auto near = fold_sensitivity(params(1, 2, 0.5, 1.0 / 6.0 + 1e-4));
  CHECK(near.du0_dku < 0.0);
  CHECK(near.du0_dku > -0.01);
}

TEST_CASE("property: fold sensitivity is negative and agrees with the root-count oracle") {
  gen::Rng rng(39);
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams p = rng.params();
    p.ku = p.d * p.d * p.d / (3 * p.a) * rng.uniform(1.2, 6.0);
    const auto fs = fold_sensitivity(p);
    CHECK(fs.du0_dku < 0.0);
    CHECK(fs.u0_dagger < p.d / p.a);
    const double ref = oracle::fold_by_root_count(p, p.d / p.a - 1e-6, -5.0);
    CHECK(fs.u0_dagger == doctest::Approx(ref).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("property: fold attention decreases with Ku") {
  gen::Rng rng(40);
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams p = rng.params();
    const double th = p.d * p.d * p.d / (3 * p.a);
    double prev = 1e300;
    for (double m : {1.1, 1.5, 2.0, 4.0, 8.0}) {
      p.ku = th * m;
      const double u = fold_sensitivity(p).u0_dagger;
      CHECK(u < prev);
      prev = u;
    }
  }
}

TEST_CASE("nullclines") {
  const ModelParams p = params(1, 2, 0.7, 2);
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(-1.2 + 2.4 * i / 400.0);
  const auto nc = nullclines(p, 0.0, grid, std::make_pair(-1.0, 3.0));

  // Quartic u_s-nullcline through the origin.
  for (const auto& pt : nc.us_nullcline) CHECK(pt.u_s == doctest::Approx(6 * std::pow(pt.z, 4)));
  const auto origin = std::find_if(nc.us_nullcline.begin(), nc.us_nullcline.end(),
                                   [](const auto& q) { return std::abs(q.z) < 1e-12; });
  REQUIRE(origin != nc.us_nullcline.end());
  CHECK(origin->u_s == 0.0);

  const double us_star = p.u0 - p.d / p.a;
  bool saw_line = false;
  for (const auto& pt : nc.z_nullcline) {
    CHECK(std::abs(pt.z) < 1.0);
    // On the z-nullcline the opinion rate vanishes.
    CHECK(std::abs(snod_rhs({pt.z, pt.u_s}, 0.0, p).dz) < 1e-9);
    if (pt.branch_id == 2) {
      saw_line = true;
      CHECK(pt.z == 0.0);
      if (pt.u_s > us_star + 1e-9) CHECK(pt.stability == Stability::Stable);
      if (pt.u_s < us_star - 1e-9) CHECK(pt.stability == Stability::Unstable);
    } else {
      CHECK(pt.branch_id == (pt.z > 0 ? 1 : 0));
    }
  }
  CHECK(saw_line);

  const auto biased = nullclines(p, 0.1, grid);
  CHECK(std::none_of(biased.z_nullcline.begin(), biased.z_nullcline.end(),
                     [](const auto& q) { return q.branch_id == 2; }));
}

TEST_CASE("nullcline intersections give the S-NOD equilibria") {
  const ModelParams p = params(1, 2, 0.7, 2);
  const auto eq = snod_equilibria(p, 0.0);
  const auto ref = oracle::snod_grid_equilibria(p, 0.0, -0.5, 8.0, 400, 400);
  REQUIRE(eq.size() == 3);
  REQUIRE(ref.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(eq[i].z == doctest::Approx(ref[i].z).epsilon(1e-6).scale(1.0));
    CHECK(eq[i].u_s == doctest::Approx(ref[i].us).epsilon(1e-6).scale(1.0));
    // Same point on the closed-form z-nullcline, z != 0.
    if (eq[i].z != 0.0) {
      const double z = eq[i].z;
      const double us = p.u0 + p.ku * z * z - std::atanh(p.d * z) / (p.a * z);
      CHECK(us == doctest::Approx(eq[i].u_s).epsilon(1e-9));
    }
  }
}

TEST_CASE("S-NOD equilibrium census for the Fig. 4 parameter set") {
  SUBCASE("u0 = 0.1") {
    const auto eq = snod_equilibria(params(1, 2, 0.1, 2), 0.0);
    REQUIRE(eq.size() == 1);
    CHECK(eq[0].z == 0.0);
    CHECK(eq[0].u_s == 0.0);
    CHECK(eq[0].stability == Stability::Stable);
  }
  SUBCASE("u0 = 0.5") {
    const auto eq = snod_equilibria(params(1, 2, 0.5, 2), 0.0);
    REQUIRE(eq.size() == 3);
    CHECK(eq[1].z == 0.0);
    CHECK(eq[1].stability == Stability::Fold);
    CHECK(is_unstable(eq[0].stability));
    CHECK(is_unstable(eq[2].stability));
  }
  SUBCASE("u0 = 0.7") {
    const auto eq = snod_equilibria(params(1, 2, 0.7, 2), 0.0);
    REQUIRE(eq.size() == 3);
    CHECK(count_stab(eq, Stability::Stable) == 0);
    for (const auto& e : eq) CHECK(is_unstable(e.stability));
  }
}

TEST_CASE("property: S-NOD equilibria against the 2-D grid oracle") {
  gen::Rng rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    ModelParams p = rng.params();
    p.kus = rng.uniform(1.0, 20.0);
    const double b = rng.uniform(-0.2, 0.2);
    const auto eq = snod_equilibria(p, b);
    const double us_hi = p.kus / std::pow(p.d, 4) + 1.0;
    const auto ref = oracle::snod_grid_equilibria(p, b, -0.5, us_hi, 300, 300);
    REQUIRE(eq.size() == ref.size());
    for (std::size_t i = 0; i < eq.size(); ++i) {
      CHECK(eq[i].z == doctest::Approx(ref[i].z).epsilon(1e-6).scale(1.0));
      CHECK(eq[i].u_s == doctest::Approx(ref[i].us).epsilon(1e-6).scale(1.0));
      const bool ref_stable = ref[i].eig[0].real() < 0 && ref[i].eig[1].real() < 0;
      CHECK((eq[i].stability == Stability::Stable) == ref_stable);
      const auto r = snod_rhs({eq[i].z, eq[i].u_s}, b, p);
      CHECK(std::hypot(r.dz, r.dus) < 1e-10);
    }
  }
}

TEST_CASE("S-NOD Jacobian against finite differences") {
  gen::Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = rng.params();
    const AgentState s{rng.uniform(-1, 1), rng.uniform(0, 2)};
    const double b = rng.uniform(-0.3, 0.3), h = 1e-6;
    const auto J = snod_jacobian(s, b, p);
    const auto zp = snod_rhs({s.z + h, s.u_s}, b, p), zm = snod_rhs({s.z - h, s.u_s}, b, p);
    const auto up = snod_rhs({s.z, s.u_s + h}, b, p), um = snod_rhs({s.z, s.u_s - h}, b, p);
    CHECK(J[0] == doctest::Approx((zp.dz - zm.dz) / (2 * h)).epsilon(1e-6).scale(1.0));
    CHECK(J[1] == doctest::Approx((up.dz - um.dz) / (2 * h)).epsilon(1e-6).scale(1.0));
    CHECK(J[2] == doctest::Approx((zp.dus - zm.dus) / (2 * h)).epsilon(1e-6).scale(1.0));
    CHECK(J[3] == doctest::Approx((up.dus - um.dus) / (2 * h)).epsilon(1e-6).scale(1.0));
  }
}

}  // TEST_SUITE
