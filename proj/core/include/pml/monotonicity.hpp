#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pml/geometry.hpp"
#include "pml/ot.hpp"

namespace pml {

/// A cycle (i_1, ..., i_k) of source indices whose rerouting i_j -> T(i_{j+1})
/// is cheaper than the matching.
struct Violation {
  std::vector<std::size_t> cycle;
  double original = 0.0;
  double rerouted = 0.0;
  double gap = 0.0;  ///< original - rerouted
};

struct AuditOptions {
  /// Exhaustive enumeration is used while the number of cycles is at most this.
  std::uint64_t budget = 1'000'000;
  /// Violations below tolerance * original cycle cost are ignored.
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
  /// At most this many violations are stored; all are counted.
  std::size_t max_reported = 10'000;
};

struct AuditResult {
  std::vector<Violation> violations;
  std::uint64_t violation_count = 0;
  std::uint64_t cycles_checked = 0;
  std::uint64_t cycles_total = 0;  ///< saturates at UINT64_MAX
  bool exhaustive = false;

  bool clean() const noexcept { return violation_count == 0; }
  double coverage() const noexcept;
  std::string to_json() const;
};

/// Audits p-cyclical monotonicity of mu_i -> nu_{matching.target[i]} over
/// cycles of length 2..max_length under the shared domain metric.
AuditResult check_cyclical_monotonicity(const PointCloud& mu, const PointCloud& nu,
                                        const Matching& matching, double p,
                                        std::size_t max_length, const AuditOptions& options = {});

/// Number of directed cycles of length k on n indices, C(n, k) (k - 1)!,
/// saturating at UINT64_MAX.
std::uint64_t cycle_count(std::size_t n, std::size_t k);

/// F(x, y) = (x^2 + y^2)^(p/2) - ((x - 1)^2 + y^2)^(p/2).
double barrier_F(double x1, double y, double p);

/// Cone {x : angle(x - vertex, axis) <= aperture}.  The aperture is the
/// half-angle; in the canonical frame (axis e_1, unit scale) the vertex sits
/// at c0 e_1.  A built cone carries the length scale tau of the frame.
struct ConeSpec {
  double p = 2.0;
  double aperture = 0.5;
  double c0 = 0.0;
  double scale = 1.0;
  std::vector<double> axis;
  std::vector<double> vertex;

  /// Canonical cone in R^dim.
  static ConeSpec canonical(double p, double aperture, double c0, std::size_t dim = 2);
  bool contains(std::span<const double> x) const;
  std::string to_json() const;
};

/// Vertex offset c0 such that the canonical cone of the given half-angle lies
/// in U = {F >= 2}.  p >= 2: 1 + (2/p)^(1/(p-1)) for every aperture.
/// 1 < p < 2: smallest bisection bracket end with h(c0) >= 2, which needs an
/// aperture below pi/2.
double cone_vertex_constant(double p, double aperture = 0.5);

/// The lower barrier h(x1) from the 1 < p < 2 case, for the cone with slope
/// tan(aperture) and vertex c:  F(x1, y) >= h(x1) on the cone.
double cone_lower_barrier(double p, double aperture, double c, double x1);

enum class Sampler { Grid, Random };

struct ConeCheckOptions {
  Sampler sampler = Sampler::Grid;
  std::uint64_t budget = 1'000'000;
  /// Sampled radius in the canonical frame; 0 picks max(50, 20 c0).
  double radius = 0.0;
  std::uint64_t seed = 0;
  std::size_t max_reported = 100;
};

struct ConeCounterexample {
  double x1 = 0.0;
  double y = 0.0;
  double F = 0.0;
};

struct ConeCheck {
  bool ok = false;
  bool tail_ok = false;  ///< analytic argument beyond the sampled radius
  std::uint64_t samples = 0;
  std::uint64_t counterexample_count = 0;
  std::vector<ConeCounterexample> counterexamples;
  double min_F = 0.0;
  double radius = 0.0;
  std::string to_json() const;
};

/// Checks F >= 2 on the canonical cross-section {(x1, y) : y >= 0} of the
/// cone, which is rotationally symmetric about the axis.
ConeCheck verify_cone_in_U(const ConeSpec& cone, const ConeCheckOptions& options = {});

/// Exclusion cone for the pair (X, X') at scale r: the canonical cone scaled
/// by tau = |X' - X| and rotated onto the axis (X' - X)/tau, with vertex
/// X + tau c0 axis.  Requires tau in (3r/2, sqrt(26) r/2).
ConeSpec build_exclusion_cone(std::span<const double> x, std::span<const double> x_prime, double p,
                              double r, double aperture = 0.5);

/// The displacement bound under which the cone excludes T(X): |T(X') - X'| <= L
/// with (1 + L/tau)^p <= 2.
double exclusion_displacement_limit(const ConeSpec& cone);

struct PlanarityResult {
  bool planar = true;
  std::vector<std::pair<std::size_t, std::size_t>> crossings;  ///< (i, j), i < j, sorted
};

/// Crossing test for the segments X_i -> T(X_i) in d = 2.  On a torus each
/// segment is the minimal-image one and its periodic copies are checked.
PlanarityResult is_planar(const PointCloud& mu, const PointCloud& nu, const Matching& matching);

/// #{i : mu_i in U, nu_{T(i)} in V}.
std::size_t count_matched_pairs(const PointCloud& mu, const PointCloud& nu,
                                const Matching& matching, const AnyRegion& u, const AnyRegion& v);

}  // namespace pml
