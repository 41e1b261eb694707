#include <cmath>
#include <numeric>

#include "pml/errors.hpp"
#include "pml/ot.hpp"
#include "transport_detail.hpp"

namespace pml {

double QuantizedLebesgue::quantization_budget(double p) const {
  const double d = static_cast<double>(atoms.dim);
  return total_mass * std::pow(spacing * std::sqrt(d) / 2.0, p);
}

namespace {

void finish_masses(QuantizedLebesgue& q, double total_mass) {
  const std::size_t g = q.atoms.coords.size() / q.atoms.dim;
  if (g == 0) throw InvalidArgument("quantize_lebesgue: no lattice point falls in the region");
  q.atoms.weights.assign(g, total_mass / static_cast<double>(g));
  double head = 0.0;
  for (std::size_t k = 0; k + 1 < g; ++k) head += q.atoms.weights[k];
  q.atoms.weights[g - 1] = total_mass - head;
  q.total_mass = total_mass;
}

// Visit lattice points origin + (k + 1/2) h for k in [0, count)^d.
template <class F>
void lattice(std::size_t d, std::span<const double> origin, double h,
             std::span<const std::size_t> count, F&& f) {
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  for (std::size_t a = 0; a < d; ++a) {
    if (count[a] == 0) return;
  }
  while (true) {
    for (std::size_t a = 0; a < d; ++a) x[a] = origin[a] + (static_cast<double>(idx[a]) + 0.5) * h;
    f(std::span<const double>(x));
    std::size_t a = d;
    while (a-- > 0) {
      if (++idx[a] < count[a]) break;
      idx[a] = 0;
      if (a == 0) return;
    }
  }
}

}  // namespace

QuantizedLebesgue quantize_lebesgue(const QuantRegion& region, double spacing, double total_mass) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw InvalidArgument("quantize_lebesgue: spacing must be positive");
  }
  if (!(total_mass > 0.0)) throw InvalidArgument("quantize_lebesgue: total mass must be positive");
  QuantizedLebesgue q;
  q.spacing = spacing;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Ball>) {
          const std::size_t d = r.center.size();
          if (d == 0 || !(r.radius > 0.0)) throw InvalidArgument("quantize_lebesgue: invalid ball");
          q.atoms.dim = d;
          // Lattice symmetric about the centre, which sits on a cell corner.
          const auto k = static_cast<std::size_t>(std::ceil(r.radius / spacing));
          std::vector<double> origin(d);
          for (std::size_t a = 0; a < d; ++a) origin[a] = r.center[a] - static_cast<double>(k) * spacing;
          const std::vector<std::size_t> count(d, 2 * k);
          const double r2 = r.radius * r.radius;
          lattice(d, origin, spacing, count, [&](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t a = 0; a < d; ++a) s += (x[a] - r.center[a]) * (x[a] - r.center[a]);
            if (s < r2) q.atoms.coords.insert(q.atoms.coords.end(), x.begin(), x.end());
          });
        } else if constexpr (std::is_same_v<T, Cube>) {
          const std::size_t d = r.lower.size();
          if (d == 0 || !(r.side > 0.0)) throw InvalidArgument("quantize_lebesgue: invalid cube");
          q.atoms.dim = d;
          const std::vector<std::size_t> count(
              d, static_cast<std::size_t>(std::floor(r.side / spacing + 1e-9)));
          lattice(d, r.lower, spacing, count, [&](std::span<const double> x) {
            q.atoms.coords.insert(q.atoms.coords.end(), x.begin(), x.end());
          });
        } else {
          const std::size_t d = r.dim();
          q.atoms.dim = d;
          std::vector<double> origin(d);
          for (std::size_t a = 0; a < d; ++a) origin[a] = r.lower(a);
          if (r.is_torus()) {
            // The lattice must tile the torus, so the spacing is adjusted to
            // divide the side.
            const auto per = static_cast<std::size_t>(std::llround(r.side() / spacing));
            if (per == 0) throw InvalidArgument("quantize_lebesgue: spacing exceeds the torus");
            q.spacing = r.side() / static_cast<double>(per);
            lattice(d, origin, q.spacing, std::vector<std::size_t>(d, per),
                    [&](std::span<const double> x) {
                      q.atoms.coords.insert(q.atoms.coords.end(), x.begin(), x.end());
                    });
          } else {
            std::vector<std::size_t> count(d);
            for (std::size_t a = 0; a < d; ++a) {
              count[a] = static_cast<std::size_t>(std::floor(r.extent(a) / spacing + 1e-9));
            }
            lattice(d, origin, spacing, count, [&](std::span<const double> x) {
              q.atoms.coords.insert(q.atoms.coords.end(), x.begin(), x.end());
            });
          }
        }
      },
      region);
  if (q.atoms.dim == 0 || q.atoms.coords.empty()) {
    throw InvalidArgument("quantize_lebesgue: no lattice point falls in the region");
  }
  finish_masses(q, total_mass);
  return q;
}

WeightedPoints restrict_to_ball(const PointCloud& cloud, const Ball& ball) {
  const Domain& dom = cloud.domain();
  if (ball.center.size() != dom.dim()) throw InvalidArgument("restrict_to_ball: dimension mismatch");
  WeightedPoints w;
  w.dim = dom.dim();
  const double r2 = ball.radius * ball.radius;
  std::vector<double> delta(w.dim);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto x = cloud.point(i);
    double s = 0.0;
    for (std::size_t a = 0; a < w.dim; ++a) {
      delta[a] = dom.axis_delta(x[a], ball.center[a], a);
      s += delta[a] * delta[a];
    }
    if (s < r2) {
      for (std::size_t a = 0; a < w.dim; ++a) w.coords.push_back(ball.center[a] + delta[a]);
      w.weights.push_back(1.0);
    }
  }
  return w;
}

namespace {

std::vector<double> ball_center(const PointCloud& cloud, const DataTermOptions& options) {
  if (options.center) {
    if (options.center->size() != cloud.dim()) throw InvalidArgument("data_term: centre dimension mismatch");
    return *options.center;
  }
  return cloud.domain().center();
}

// W_p^p between unit weights and the equal-mass quantized measure, with
// integer supplies G per point and N per atom so that the plan is exact.
double transport_to_quantized(const WeightedPoints& pts, const QuantizedLebesgue& q,
                              const Domain& metric, double p, const DataTermOptions& options) {
  const std::size_t n = pts.size(), g = q.atoms.size();
  if (options.backend == Backend::Entropic) {
    std::vector<double> e(n * g);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < g; ++j) {
        e[i * g + j] = cost_from_squared(dist_squared(pts.point(i), q.atoms.point(j), metric), p);
      }
    }
    const CostMatrix cm(n, g, std::move(e), p);
    return entropic_transport(pts.weights, q.atoms.weights, cm, options.entropic).plan.cost;
  }
  const std::vector<std::int64_t> ss(n, static_cast<std::int64_t>(g));
  const std::vector<std::int64_t> ds(g, static_cast<std::int64_t>(n));
  return detail::solve_geometric_integer(pts, q.atoms, ss, ds, 1.0 / static_cast<double>(g),
                                         metric, p, options.exact)
      .cost;
}

}  // namespace

DataTermParts data_term_single(const PointCloud& mu, double radius, double p,
                               const DataTermOptions& options) {
  if (!(radius > 0.0)) throw InvalidArgument("data_term: radius must be positive");
  if (!(p >= 1.0)) throw InvalidArgument("data_term: p must be >= 1");
  const std::size_t d = mu.dim();
  const Domain& dom = mu.domain();
  if (dom.is_torus() && !(2.0 * radius < dom.side())) {
    throw InvalidArgument("data_term: ball does not fit in the torus");
  }
  const Ball ball{ball_center(mu, options), radius};
  const WeightedPoints pts = restrict_to_ball(mu, ball);
  if (pts.size() == 0) throw DegenerateInput("data_term: no points in B_R (n = 0)");
  const double vol = ball_volume(d, radius);
  const double n = static_cast<double>(pts.size()) / vol;
  const double rd = std::pow(radius, static_cast<double>(d));

  const QuantizedLebesgue q = quantize_lebesgue(ball, options.spacing, static_cast<double>(pts.size()));
  std::vector<double> lo(d), hi(d);
  for (std::size_t a = 0; a < d; ++a) {
    lo[a] = ball.center[a] - radius;
    hi[a] = ball.center[a] + radius;
  }
  const Domain euclid = Domain::box(lo, hi);

  DataTermParts parts;
  parts.n_mu = n;
  parts.transport_mu = transport_to_quantized(pts, q, euclid, p, options) / rd;
  parts.density_mu = std::pow(radius, p) * std::pow(std::fabs(n - 1.0), p) / n;
  parts.quantization_budget = q.quantization_budget(p) / rd;
  parts.value = parts.transport_mu + parts.density_mu;
  return parts;
}

DataTermParts data_term(const PointCloud& mu, const PointCloud& nu, double radius, double p,
                        const DataTermOptions& options) {
  if (mu.dim() != nu.dim()) throw InvalidArgument("data_term: clouds differ in dimension");
  const DataTermParts a = data_term_single(mu, radius, p, options);
  const DataTermParts b = data_term_single(nu, radius, p, options);
  DataTermParts out;
  out.transport_mu = a.transport_mu;
  out.density_mu = a.density_mu;
  out.n_mu = a.n_mu;
  out.transport_nu = b.transport_mu;
  out.density_nu = b.density_mu;
  out.n_nu = b.n_mu;
  out.quantization_budget = a.quantization_budget + b.quantization_budget;
  out.value = a.value + b.value;
  return out;
}

double energy_term(const PointCloud& mu, const PointCloud& nu, const Matching& matching,
                   double radius, double p, std::optional<std::vector<double>> center) {
  if (!(mu.domain() == nu.domain())) throw InvalidArgument("energy_term: clouds in different domains");
  if (matching.size() != mu.size() || mu.size() != nu.size() || !matching.is_permutation()) {
    throw InvalidArgument("energy_term: matching is not a bijection between the clouds");
  }
  if (!(radius > 0.0)) throw InvalidArgument("energy_term: radius must be positive");
  const Domain& dom = mu.domain();
  const Region ball = Ball{center ? *center : dom.center(), radius};
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i);
    const auto y = nu.point(matching.target[i]);
    if (region_contains(ball, x, dom) || region_contains(ball, y, dom)) {
      s += cost_from_squared(dist_squared(x, y, dom), p);
    }
  }
  return s / std::pow(radius, static_cast<double>(dom.dim()));
}

double torus_cost_to_uniform(const PointCloud& cloud, double p, const DataTermOptions& options) {
  const Domain& dom = cloud.domain();
  if (!dom.is_torus()) throw InvalidArgument("torus_cost_to_uniform: cloud must live on a torus");
  if (cloud.empty()) throw DegenerateInput("torus_cost_to_uniform: empty cloud");
  const QuantizedLebesgue q =
      quantize_lebesgue(dom, options.spacing, static_cast<double>(cloud.size()));
  return transport_to_quantized(WeightedPoints::from_cloud(cloud), q, dom, p, options);
}

}  // namespace pml
