#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace pml {

/// Either a periodic cube [0, L)^d or an axis-aligned box prod [lo_a, hi_a).
class Domain {
 public:
  enum class Kind : std::uint8_t { Torus = 0, Box = 1 };

  static Domain torus(std::size_t dim, double side);
  static Domain box(std::vector<double> lower, std::vector<double> upper);
  /// The cube (-half, half)^d.
  static Domain centered_box(std::size_t dim, double half);

  Kind kind() const noexcept { return kind_; }
  bool is_torus() const noexcept { return kind_ == Kind::Torus; }
  std::size_t dim() const noexcept { return lower_.size(); }

  /// Torus side length.  For boxes, the extent along axis 0.
  double side() const noexcept { return upper_[0] - lower_[0]; }
  double lower(std::size_t axis) const { return lower_[axis]; }
  double upper(std::size_t axis) const { return upper_[axis]; }
  double extent(std::size_t axis) const { return upper_[axis] - lower_[axis]; }
  double volume() const noexcept;
  std::vector<double> center() const;

  /// Whether each coordinate lies in [lo, hi).
  bool contains(std::span<const double> x) const;

  /// Map a coordinate onto [0, L) (torus) or leave it unchanged (box).
  double wrap_coordinate(double value, std::size_t axis) const noexcept;

  /// Minimal-image difference x - y along one axis.
  double axis_delta(double x, double y, std::size_t axis) const noexcept;

  /// Largest distance this metric can realize.
  double diameter() const noexcept;

  bool operator==(const Domain& other) const = default;

 private:
  Domain(Kind kind, std::vector<double> lower, std::vector<double> upper);

  Kind kind_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Finite point set in a domain, flat row-major coordinate storage.
class PointCloud {
 public:
  explicit PointCloud(Domain domain);
  PointCloud(Domain domain, std::vector<double> coords,
             std::optional<std::uint64_t> seed = std::nullopt);

  const Domain& domain() const noexcept { return domain_; }
  std::size_t dim() const noexcept { return domain_.dim(); }
  std::size_t size() const noexcept { return coords_.size() / domain_.dim(); }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim(), dim()};
  }
  std::span<const double> coords() const noexcept { return coords_; }
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }

  /// Sub-cloud with the given point indices, in the given order.
  PointCloud subset(std::span<const std::size_t> indices) const;

  /// Same points scaled by lambda about the origin (domain scaled too).
  PointCloud scaled(double lambda) const;

  bool operator==(const PointCloud& other) const = default;

 private:
  Domain domain_;
  std::vector<double> coords_;
  std::optional<std::uint64_t> seed_;
};

struct Ball {
  std::vector<double> center;
  double radius = 0.0;
};

/// Half-open cube [lower, lower + side)^d.
struct Cube {
  std::vector<double> lower;
  double side = 0.0;
};

using Region = std::variant<Ball, Cube>;

/// A ball, a half-open cube, or a whole domain.
using AnyRegion = std::variant<Ball, Cube, Domain>;

struct Segment {
  std::vector<double> a;
  std::vector<double> b;
};

/// Volume of the d-dimensional ball of the given radius.
double ball_volume(std::size_t dim, double radius);

/// Region volume and diameter.
double region_volume(const Region& region);
double region_diameter(const Region& region);

/// Poisson point process of the given intensity.
PointCloud sample_poisson(double intensity, const Domain& domain, std::uint64_t seed);

/// Binomial process: `count` i.i.d. uniform points (Poisson conditioned on count).
PointCloud sample_uniform(std::size_t count, const Domain& domain, std::uint64_t seed);

/// Cell-centred lattice of spacing h filling the domain.
PointCloud lattice_cloud(const Domain& domain, double spacing);

/// Domain metric: periodic minimal-image distance on a torus, Euclidean on a box.
double dist(std::span<const double> x, std::span<const double> y, const Domain& domain);
double dist_squared(std::span<const double> x, std::span<const double> y,
                    const Domain& domain);

/// dist^p from a squared distance, exact for p = 2.
double cost_from_squared(double squared, double p) noexcept;

/// Whether x lies in the region (open balls, half-open cubes).  On a torus
/// regions are measured through the minimal image.
bool region_contains(const Region& region, std::span<const double> x, const Domain& domain);

/// As region_contains, with a whole domain containing every point of it.
bool region_contains(const AnyRegion& region, std::span<const double> x, const Domain& domain);

/// Number of cloud points inside the region.
std::size_t count_in(const PointCloud& cloud, const Region& region);

/// Exact sign of the orientation determinant of (a, b, c): +1 counter-clockwise,
/// -1 clockwise, 0 collinear.
int orient2d(std::span<const double> a, std::span<const double> b, std::span<const double> c);

/// True iff the two planar segments meet at a point that is not a shared
/// endpoint.  Segments that share an endpoint never cross; a T-junction does.
bool segments_cross(const Segment& s1, const Segment& s2);
bool segments_cross(std::span<const double> a1, std::span<const double> b1,
                    std::span<const double> a2, std::span<const double> b2);

}  // namespace pml
