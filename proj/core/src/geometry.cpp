#include "pml/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pml/errors.hpp"
#include "pml/rng.hpp"

namespace pml {

Domain::Domain(Kind kind, std::vector<double> lower, std::vector<double> upper)
    : kind_(kind), lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw InvalidArgument("domain: dimension must be >= 1 and bounds must agree");
  }
  for (std::size_t a = 0; a < lower_.size(); ++a) {
    if (!std::isfinite(lower_[a]) || !std::isfinite(upper_[a]) || !(upper_[a] > lower_[a])) {
      throw InvalidArgument("domain: every extent must be positive and finite");
    }
  }
}

Domain Domain::torus(std::size_t dim, double side) {
  if (dim == 0) throw InvalidArgument("domain: dimension must be >= 1");
  return Domain(Kind::Torus, std::vector<double>(dim, 0.0), std::vector<double>(dim, side));
}

Domain Domain::box(std::vector<double> lower, std::vector<double> upper) {
  return Domain(Kind::Box, std::move(lower), std::move(upper));
}

Domain Domain::centered_box(std::size_t dim, double half) {
  if (dim == 0) throw InvalidArgument("domain: dimension must be >= 1");
  return Domain(Kind::Box, std::vector<double>(dim, -half), std::vector<double>(dim, half));
}

double Domain::volume() const noexcept {
  double v = 1.0;
  for (std::size_t a = 0; a < dim(); ++a) v *= extent(a);
  return v;
}

std::vector<double> Domain::center() const {
  std::vector<double> c(dim());
  for (std::size_t a = 0; a < dim(); ++a) c[a] = 0.5 * (lower_[a] + upper_[a]);
  return c;
}

bool Domain::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t a = 0; a < dim(); ++a) {
    if (!(x[a] >= lower_[a] && x[a] < upper_[a])) return false;
  }
  return true;
}

double Domain::wrap_coordinate(double value, std::size_t axis) const noexcept {
  if (kind_ != Kind::Torus) return value;
  const double side = upper_[axis];
  double w = std::fmod(value, side);
  if (w < 0.0) w += side;
  if (w >= side) w = std::nextafter(side, 0.0);
  return w;
}

double Domain::axis_delta(double x, double y, std::size_t axis) const noexcept {
  double d = x - y;
  if (kind_ == Kind::Torus) {
    const double side = upper_[axis];
    d -= side * std::nearbyint(d / side);
  }
  return d;
}

double Domain::diameter() const noexcept {
  double s = 0.0;
  for (std::size_t a = 0; a < dim(); ++a) {
    const double e = kind_ == Kind::Torus ? 0.5 * extent(a) : extent(a);
    s += e * e;
  }
  return std::sqrt(s);
}

PointCloud::PointCloud(Domain domain) : domain_(std::move(domain)) {}

PointCloud::PointCloud(Domain domain, std::vector<double> coords,
                       std::optional<std::uint64_t> seed)
    : domain_(std::move(domain)), coords_(std::move(coords)), seed_(seed) {
  if (coords_.size() % domain_.dim() != 0) {
    throw InvalidArgument("point cloud: coordinate count is not a multiple of the dimension");
  }
  if (domain_.is_torus()) {
    for (std::size_t i = 0; i < size(); ++i) {
      if (!domain_.contains(point(i))) {
        throw InvalidArgument("point cloud: torus coordinates must lie in [0, L)");
      }
    }
  }
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  std::vector<double> c;
  c.reserve(indices.size() * dim());
  for (std::size_t i : indices) {
    auto x = point(i);
    c.insert(c.end(), x.begin(), x.end());
  }
  return PointCloud(domain_, std::move(c));
}

PointCloud PointCloud::scaled(double lambda) const {
  if (!(lambda > 0.0)) throw InvalidArgument("scaled: factor must be positive");
  std::vector<double> lo(dim()), hi(dim());
  for (std::size_t a = 0; a < dim(); ++a) {
    lo[a] = lambda * domain_.lower(a);
    hi[a] = lambda * domain_.upper(a);
  }
  Domain d = domain_.is_torus() ? Domain::torus(dim(), hi[0]) : Domain::box(lo, hi);
  std::vector<double> c(coords_);
  for (double& v : c) v *= lambda;
  if (d.is_torus()) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = d.wrap_coordinate(c[i], i % dim());
  }
  return PointCloud(std::move(d), std::move(c), seed_);
}

double ball_volume(std::size_t dim, double radius) {
  const double d = static_cast<double>(dim);
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(radius, d);
}

double region_volume(const Region& region) {
  return std::visit(
      [](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return ball_volume(r.center.size(), r.radius);
        } else {
          return std::pow(r.side, static_cast<double>(r.lower.size()));
        }
      },
      region);
}

double region_diameter(const Region& region) {
  return std::visit(
      [](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return 2.0 * r.radius;
        } else {
          return r.side * std::sqrt(static_cast<double>(r.lower.size()));
        }
      },
      region);
}

namespace {

void fill_uniform(std::vector<double>& coords, std::size_t count, const Domain& domain,
                  Rng& rng) {
  const std::size_t d = domain.dim();
  coords.resize(count * d);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      double x = domain.lower(a) + rng.uniform() * domain.extent(a);
      if (x >= domain.upper(a)) x = std::nextafter(domain.upper(a), domain.lower(a));
      coords[i * d + a] = x;
    }
  }
}

}  // namespace

PointCloud sample_poisson(double intensity, const Domain& domain, std::uint64_t seed) {
  if (!(intensity > 0.0) || !std::isfinite(intensity)) {
    throw InvalidArgument("sample_poisson: intensity must be positive");
  }
  Rng rng(seed);
  const auto count = static_cast<std::size_t>(rng.poisson(intensity * domain.volume()));
  std::vector<double> coords;
  fill_uniform(coords, count, domain, rng);
  return PointCloud(domain, std::move(coords), seed);
}

PointCloud sample_uniform(std::size_t count, const Domain& domain, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> coords;
  fill_uniform(coords, count, domain, rng);
  return PointCloud(domain, std::move(coords), seed);
}

PointCloud lattice_cloud(const Domain& domain, double spacing) {
  if (!(spacing > 0.0)) throw InvalidArgument("lattice_cloud: spacing must be positive");
  const std::size_t d = domain.dim();
  std::vector<std::size_t> per_axis(d);
  std::size_t total = 1;
  for (std::size_t a = 0; a < d; ++a) {
    per_axis[a] = static_cast<std::size_t>(std::floor(domain.extent(a) / spacing + 1e-9));
    if (per_axis[a] == 0) throw InvalidArgument("lattice_cloud: spacing exceeds the domain");
    total *= per_axis[a];
  }
  std::vector<double> coords(total * d);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      coords[i * d + a] = domain.lower(a) + (static_cast<double>(idx[a]) + 0.5) * spacing;
    }
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < per_axis[a]) break;
      idx[a] = 0;
    }
  }
  return PointCloud(domain, std::move(coords));
}

double dist_squared(std::span<const double> x, std::span<const double> y, const Domain& domain) {
  if (x.size() != domain.dim() || y.size() != domain.dim()) {
    throw InvalidArgument("dist: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double d = domain.axis_delta(x[a], y[a], a);
    s += d * d;
  }
  return s;
}

double dist(std::span<const double> x, std::span<const double> y, const Domain& domain) {
  return std::sqrt(dist_squared(x, y, domain));
}

double cost_from_squared(double squared, double p) noexcept {
  if (p == 2.0) return squared;
  if (p == 1.0) return std::sqrt(squared);
  return std::pow(squared, 0.5 * p);
}

bool region_contains(const Region& region, std::span<const double> x, const Domain& domain) {
  return std::visit(
      [&](const auto& r) -> bool {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return dist_squared(x, r.center, domain) < r.radius * r.radius;
        } else {
          for (std::size_t a = 0; a < x.size(); ++a) {
            double u = x[a] - r.lower[a];
            if (domain.is_torus()) {
              const double side = domain.extent(a);
              u = std::fmod(u, side);
              if (u < 0.0) u += side;
            }
            if (!(u >= 0.0 && u < r.side)) return false;
          }
          return true;
        }
      },
      region);
}

bool region_contains(const AnyRegion& region, std::span<const double> x, const Domain& domain) {
  if (const auto* d = std::get_if<Domain>(&region)) return d->contains(x);
  if (const auto* b = std::get_if<Ball>(&region)) return region_contains(Region{*b}, x, domain);
  return region_contains(Region{std::get<Cube>(region)}, x, domain);
}

std::size_t count_in(const PointCloud& cloud, const Region& region) {
  const Domain& domain = cloud.domain();
  const std::size_t rdim = std::visit(
      [](const auto& r) -> std::size_t {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return r.center.size();
        } else {
          return r.lower.size();
        }
      },
      region);
  if (rdim != domain.dim()) throw InvalidArgument("count_in: region dimension mismatch");
  if (domain.is_torus() && !(region_diameter(region) < 0.5 * domain.side())) {
    throw InvalidArgument("count_in: torus regions must have diameter < L/2");
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (region_contains(region, cloud.point(i), domain)) ++n;
  }
  return n;
}

}  // namespace pml
