#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "pml/errors.hpp"
#include "pml/monotonicity.hpp"
#include "pml/ot.hpp"
#include "pml/rng.hpp"

using namespace pml;

namespace {

Matching identity(std::size_t n, const PointCloud& mu, const PointCloud& nu, double p) {
  Matching m;
  for (std::size_t i = 0; i < n; ++i) {
    m.target.push_back(i);
    m.cost += std::pow(dist(mu.point(i), nu.point(i), mu.domain()), p);
  }
  return m;
}

}  // namespace

TEST(CycleCount, ClosedForm) {
  EXPECT_EQ(cycle_count(5, 2), 10u);
  EXPECT_EQ(cycle_count(5, 3), 20u);
  EXPECT_EQ(cycle_count(6, 4), 90u);
  EXPECT_EQ(cycle_count(8, 8), 5040u);
  EXPECT_EQ(cycle_count(3, 4), 0u);
  EXPECT_EQ(cycle_count(1000000, 12), UINT64_MAX);
}

TEST(Audit, OptimalMatchingIsClean) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Domain t = Domain::torus(2, 3.0);
    const std::size_t n = 3 + s % 6;
    const PointCloud mu = sample_uniform(n, t, s), nu = sample_uniform(n, t, 50 + s);
    for (double p : {1.0, 2.0, 3.0}) {
      const Matching m = solve_assignment_geometric(mu, nu, p);
      const AuditResult r = check_cyclical_monotonicity(mu, nu, m, p, n);
      EXPECT_TRUE(r.clean()) << "seed " << s << " p " << p;
      EXPECT_TRUE(r.exhaustive);
      EXPECT_EQ(r.cycles_checked, r.cycles_total);
      EXPECT_DOUBLE_EQ(r.coverage(), 1.0);
    }
  }
}

TEST(Audit, SwappedCrossingPairIsFound) {
  const Domain b = Domain::box({0, 0}, {4, 4});
  const PointCloud mu(b, {0.0, 0.0, 0.0, 2.0});
  const PointCloud nu(b, {2.0, 0.0, 2.0, 2.0});
  Matching crossed;
  crossed.target = {1, 0};
  crossed.cost = 16.0;
  const AuditResult r = check_cyclical_monotonicity(mu, nu, crossed, 2.0, 2);
  ASSERT_EQ(r.violation_count, 1u);
  const Violation& v = r.violations.front();
  EXPECT_EQ(v.cycle, (std::vector<std::size_t>{0, 1}));
  // Direct comparison: 8 + 8 crossed against 4 + 4 parallel.
  EXPECT_NEAR(v.original, 16.0, 1e-12);
  EXPECT_NEAR(v.rerouted, 8.0, 1e-12);
  EXPECT_NEAR(v.gap, 8.0, 1e-12);
}

TEST(Audit, ToleranceAbsorbsSmallGaps) {
  const Domain b = Domain::box({0, 0}, {4, 4});
  const PointCloud mu(b, {0.0, 0.0, 0.0, 2.0});
  const PointCloud nu(b, {2.0, 0.0, 2.0, 2.0});
  Matching crossed;
  crossed.target = {1, 0};
  AuditOptions o;
  o.tolerance = 0.75;  // gap / original = 0.5
  EXPECT_TRUE(check_cyclical_monotonicity(mu, nu, crossed, 2.0, 2, o).clean());
}

TEST(Audit, SampledModeReportsCoverage) {
  const Domain t = Domain::torus(2, 6.0);
  const PointCloud mu = sample_uniform(40, t, 1), nu = sample_uniform(40, t, 2);
  const Matching m = solve_assignment_geometric(mu, nu, 2.0);
  AuditOptions o;
  o.budget = 20000;
  const AuditResult r = check_cyclical_monotonicity(mu, nu, m, 2.0, 5, o);
  EXPECT_FALSE(r.exhaustive);
  EXPECT_TRUE(r.clean());
  EXPECT_LT(r.coverage(), 1.0);
  EXPECT_GE(r.cycles_checked, o.budget);
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_FALSE(j["exhaustive"].get<bool>());
  // Same seed, same sample.
  const AuditResult again = check_cyclical_monotonicity(mu, nu, m, 2.0, 5, o);
  EXPECT_EQ(again.cycles_checked, r.cycles_checked);
}

TEST(Audit, RejectsInvalidInput) {
  const Domain t = Domain::torus(2, 2.0);
  const PointCloud mu = sample_uniform(3, t, 1), nu = sample_uniform(3, t, 2);
  Matching bad;
  bad.target = {0, 0, 1};
  EXPECT_THROW(check_cyclical_monotonicity(mu, nu, bad, 2.0, 2), InvalidArgument);
  Matching ok;
  ok.target = {0, 1, 2};
  EXPECT_THROW(check_cyclical_monotonicity(mu, nu, ok, 2.0, 1), InvalidArgument);
  AuditOptions neg;
  neg.tolerance = -1.0;
  EXPECT_THROW(check_cyclical_monotonicity(mu, nu, ok, 2.0, 2, neg), InvalidArgument);
}

TEST(Barrier, ReferenceValues) {
  EXPECT_DOUBLE_EQ(barrier_F(2.0, 0.0, 2.0), 3.0);
  for (double y : {0.0, 0.7, 3.0}) EXPECT_NEAR(barrier_F(0.5, y, 1.7), 0.0, 1e-14);
  // 40-digit mpmath evaluation.
  EXPECT_NEAR(barrier_F(3.0, 1.0, 1.5), 2.2797117270213806839, 1e-12);
}

TEST(Barrier, MonotoneInY) {
  const double h = 1e-4;
  for (double p : {1.25, 1.5, 2.0, 3.0, 4.0}) {
    for (double x = 1.0; x <= 20.0; x += 0.5) {
      for (double y = 0.0; y <= 20.0; y += 0.25) {
        const double d = barrier_F(x, y + h, p) - barrier_F(x, y, p);
        if (p >= 2.0) {
          EXPECT_GE(d, -1e-12) << "p=" << p << " x=" << x << " y=" << y;
        }
        if (p <= 2.0) {
          EXPECT_LE(d, 1e-12) << "p=" << p << " x=" << x << " y=" << y;
        }
      }
    }
  }
}

TEST(Cone, VertexConstants) {
  EXPECT_EQ(cone_vertex_constant(2.0), 2.0);
  EXPECT_NEAR(cone_vertex_constant(3.0), 1.816496580927726, 1e-15);
  EXPECT_NEAR(cone_vertex_constant(4.0), 1.7937005259840997, 1e-15);
  // Root of h(c) = 2 by scipy brentq; bisection returns the upper bracket end.
  EXPECT_NEAR(cone_vertex_constant(1.5, 0.5), 12.840702365246287, 1e-9);
  EXPECT_NEAR(cone_vertex_constant(1.25, 0.5), 178.2504267470934, 1e-7);
  EXPECT_GE(cone_lower_barrier(1.5, 0.5, cone_vertex_constant(1.5, 0.5), cone_vertex_constant(1.5, 0.5)), 2.0);
  EXPECT_THROW(cone_vertex_constant(1.0), InvalidArgument);
  EXPECT_THROW(cone_vertex_constant(1.5, 1.6), InvalidArgument);
}

TEST(Cone, LowerBarrierOnBoundaryRay) {
  for (double p : {1.25, 1.5, 1.75}) {
    const double alpha = std::tan(0.5);
    const double c = cone_vertex_constant(p, 0.5);
    for (double x = c; x < c + 500.0; x += 3.7) {
      EXPECT_GE(barrier_F(x, alpha * (x - c), p), cone_lower_barrier(p, 0.5, c, x) - 1e-12)
          << "p=" << p << " x=" << x;
    }
  }
}

TEST(Cone, VerifiedAtComputedVertex) {
  ConeCheckOptions o;
  o.budget = 40000;
  for (double p : {1.25, 1.5, 2.0, 3.0, 4.0}) {
    const ConeSpec cone = ConeSpec::canonical(p, 0.5, cone_vertex_constant(p, 0.5));
    const ConeCheck r = verify_cone_in_U(cone, o);
    EXPECT_TRUE(r.ok) << "p=" << p;
    EXPECT_TRUE(r.tail_ok) << "p=" << p;
    EXPECT_EQ(r.counterexample_count, 0u);
    o.sampler = Sampler::Random;
    EXPECT_TRUE(verify_cone_in_U(cone, o).ok) << "p=" << p;
    o.sampler = Sampler::Grid;
  }
}

TEST(Cone, ShiftedVertexForTwoFails) {
  // c0 - 0.5 = 1.5: F(1.5, 0) = 2 is on the boundary; F(1.4, 0) < 2 needs a
  // vertex further in.
  ConeCheckOptions o;
  o.budget = 40000;
  const ConeCheck r = verify_cone_in_U(ConeSpec::canonical(2.0, 0.5, 1.4), o);
  EXPECT_FALSE(r.ok);
  ASSERT_GT(r.counterexample_count, 0u);
  EXPECT_LT(r.counterexamples.front().F, 2.0);
  EXPECT_NEAR(barrier_F(1.4, 0.0, 2.0), 1.8, 1e-12);
}

TEST(Cone, NarrowApertureAxisRay) {
  ConeCheckOptions o;
  o.budget = 10000;
  EXPECT_TRUE(verify_cone_in_U(ConeSpec::canonical(3.0, 1e-6, cone_vertex_constant(3.0)), o).ok);
}

TEST(Cone, ContainsHalfAngle) {
  const ConeSpec c = ConeSpec::canonical(2.0, 0.5, 2.0);
  const double on_axis[] = {5.0, 0.0}, inside[] = {4.0, 1.0}, outside[] = {3.0, 1.0};
  EXPECT_TRUE(c.contains(on_axis));
  EXPECT_TRUE(c.contains(inside));   // atan(1/2) < 0.5
  EXPECT_FALSE(c.contains(outside));  // atan(1) > 0.5
}

TEST(ExclusionCone, Coordinates) {
  const double x[] = {0.0, 0.0}, xp[] = {2.0, 0.0};
  const ConeSpec c = build_exclusion_cone(x, xp, 2.0, 1.0);
  EXPECT_NEAR(c.axis[0], 1.0, 1e-15);
  EXPECT_NEAR(c.axis[1], 0.0, 1e-15);
  EXPECT_NEAR(c.vertex[0], 4.0, 1e-12);
  EXPECT_NEAR(c.vertex[1], 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(c.scale, 2.0);
  EXPECT_NEAR(exclusion_displacement_limit(c), 2.0 * (std::sqrt(2.0) - 1.0), 1e-12);
  const double too_close[] = {1.0, 0.0}, too_far[] = {3.0, 0.0};
  EXPECT_THROW(build_exclusion_cone(x, too_close, 2.0, 1.0), InvalidArgument);
  EXPECT_THROW(build_exclusion_cone(x, too_far, 2.0, 1.0), InvalidArgument);
}

TEST(ExclusionCone, RotatesCovariantly) {
  const double x[] = {1.0, -1.0};
  const double theta = 0.9;
  const double cs = std::cos(theta), sn = std::sin(theta);
  auto rot = [&](double a, double b) {
    return std::vector<double>{x[0] + cs * a - sn * b, x[1] + sn * a + cs * b};
  };
  const std::vector<double> xp0{x[0] + 2.0, x[1]};
  const std::vector<double> xp1 = rot(2.0, 0.0);
  const ConeSpec c0 = build_exclusion_cone(x, xp0, 3.0, 1.0);
  const ConeSpec c1 = build_exclusion_cone(x, xp1, 3.0, 1.0);
  EXPECT_NEAR(c1.axis[0], cs, 1e-12);
  EXPECT_NEAR(c1.axis[1], sn, 1e-12);
  Rng rng(4);
  for (int k = 0; k < 2000; ++k) {
    const double a = 20.0 * rng.uniform() - 5.0, b = 20.0 * rng.uniform() - 10.0;
    const std::vector<double> q0{x[0] + a, x[1] + b};
    const std::vector<double> q1 = rot(a, b);
    EXPECT_EQ(c0.contains(q0), c1.contains(q1)) << a << "," << b;
  }
}

TEST(ExclusionCone, PartnerInsideConeGivesTwoCycleViolation) {
  const double p = 2.0;
  const double x[] = {0.0, 0.0}, xp[] = {2.0, 0.0};
  const ConeSpec cone = build_exclusion_cone(x, xp, p, 1.0);
  const double limit = exclusion_displacement_limit(cone);
  const double tx[] = {6.0, 0.5};
  ASSERT_TRUE(cone.contains(tx));
  const double txp[] = {2.0 + 0.9 * limit, 0.0};
  const Domain b = Domain::box({-10, -10}, {10, 10});
  const PointCloud mu(b, {x[0], x[1], xp[0], xp[1]});
  const PointCloud nu(b, {tx[0], tx[1], txp[0], txp[1]});
  const Matching m = identity(2, mu, nu, p);
  const AuditResult r = check_cyclical_monotonicity(mu, nu, m, p, 2);
  ASSERT_EQ(r.violation_count, 1u);
  // Direct cost comparison.
  const double orig = 36.25 + std::pow(0.9 * limit, 2);
  const double swapped = std::pow(2.0 + 0.9 * limit, 2) + 16.25;
  EXPECT_NEAR(r.violations[0].gap, orig - swapped, 1e-9);
}

TEST(Planarity, ParallelAndCrossing) {
  const Domain b = Domain::box({0, 0}, {4, 4});
  const PointCloud mu(b, {0.0, 0.0, 0.0, 2.0});
  const PointCloud nu(b, {2.0, 0.0, 2.0, 2.0});
  Matching par;
  par.target = {0, 1};
  EXPECT_TRUE(is_planar(mu, nu, par).planar);
  Matching crossed;
  crossed.target = {1, 0};
  const PlanarityResult r = is_planar(mu, nu, crossed);
  EXPECT_FALSE(r.planar);
  ASSERT_EQ(r.crossings.size(), 1u);
  EXPECT_EQ(r.crossings[0], std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(Planarity, TorusWrapCrossing) {
  // Segment 0 wraps across x = 0; segment 1 crosses its periodic image.
  const Domain t = Domain::torus(2, 10.0);
  const PointCloud mu(t, {9.0, 5.0, 0.5, 4.0});
  const PointCloud nu(t, {1.0, 5.0, 0.5, 6.0});
  Matching m;
  m.target = {0, 1};
  EXPECT_FALSE(is_planar(mu, nu, m).planar);
}

TEST(Planarity, OneOptimalIsPlanar) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Domain b = Domain::box({0, 0}, {10, 10});
    const PointCloud mu = sample_poisson(1.0, b, s);
    const PointCloud nu = sample_uniform(mu.size(), b, 1000 + s);
    EXPECT_TRUE(is_planar(mu, nu, solve_assignment_geometric(mu, nu, 1.0)).planar);
  }
}

TEST(Planarity, BucketedMatchesAllPairs) {
  // Above the all-pairs threshold the bucketed path must find exactly the
  // brute-force crossing set.  Short random segments keep it local.
  const Domain b = Domain::box({0, 0}, {60, 60});
  const PointCloud mu = sample_uniform(2100, b, 1);
  Rng rng(2);
  std::vector<double> ends;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t a = 0; a < 2; ++a) {
      ends.push_back(std::clamp(mu.point(i)[a] + 3.0 * rng.uniform() - 1.5, 0.0, 59.999));
    }
  }
  const PointCloud nu(b, ends);
  Matching m;
  for (std::size_t i = 0; i < mu.size(); ++i) m.target.push_back(i);
  const PlanarityResult r = is_planar(mu, nu, m);
  std::vector<std::pair<std::size_t, std::size_t>> brute;
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = i + 1; j < mu.size(); ++j)
      if (segments_cross(mu.point(i), nu.point(i), mu.point(j), nu.point(j))) brute.emplace_back(i, j);
  EXPECT_GT(brute.size(), 0u);
  EXPECT_EQ(r.crossings, brute);
}

TEST(Planarity, RejectsThreeDimensions) {
  const Domain t = Domain::torus(3, 2.0);
  const PointCloud mu = sample_uniform(2, t, 1), nu = sample_uniform(2, t, 2);
  Matching m;
  m.target = {0, 1};
  EXPECT_THROW(is_planar(mu, nu, m), InvalidArgument);
}

TEST(MatchedPairs, AgreesWithLoop) {
  const Domain t = Domain::torus(2, 10.0);
  const PointCloud mu = sample_uniform(200, t, 5), nu = sample_uniform(200, t, 6);
  const Matching m = solve_assignment_geometric(mu, nu, 2.0);
  const AnyRegion u = Ball{{5.0, 5.0}, 3.0};
  const AnyRegion v = Cube{{3.0, 2.0}, 5.0};
  std::size_t loop = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i), y = nu.point(m.target[i]);
    const bool in_u = dist(x, std::vector<double>{5.0, 5.0}, t) < 3.0;
    const bool in_v = y[0] >= 3.0 && y[0] < 8.0 && y[1] >= 2.0 && y[1] < 7.0;
    loop += in_u && in_v;
  }
  EXPECT_EQ(count_matched_pairs(mu, nu, m, u, v), loop);
  EXPECT_EQ(count_matched_pairs(mu, nu, m, AnyRegion{t}, AnyRegion{t}), 200u);
  EXPECT_EQ(count_matched_pairs(mu, nu, m, AnyRegion{Ball{{5.0, 5.0}, 1e-9}}, AnyRegion{t}), 0u);
}
