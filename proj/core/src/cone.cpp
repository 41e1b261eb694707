#include <cmath>
#include <json.hpp>
#include <limits>
#include <numbers>

#include "pml/errors.hpp"
#include "pml/monotonicity.hpp"
#include "pml/rng.hpp"

namespace pml {

double barrier_F(double x1, double y, double p) {
  const double y2 = y * y;
  return std::pow(x1 * x1 + y2, 0.5 * p) - std::pow((x1 - 1.0) * (x1 - 1.0) + y2, 0.5 * p);
}

namespace {

void check_exponent(double p, const char* who) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument(std::string(who) + ": p must exceed 1");
}

// h(x1) at x1 = c, which bounds h from below on [c, inf) and is increasing.
double vertex_barrier(double p, double slope, double x1) {
  const double a = std::pow(slope, 2.0 - p);
  return p * (x1 - 1.0) * std::pow(x1, p - 2.0) / (1.0 + 2.0 * a);
}

}  // namespace

double cone_lower_barrier(double p, double aperture, double c, double x1) {
  check_exponent(p, "cone_lower_barrier");
  const double a = std::pow(std::tan(aperture), 2.0 - p);
  return p * (x1 - 1.0) /
         ((1.0 + a) * std::pow(x1, 2.0 - p) + a * std::pow(c, 2.0 - p));
}

double cone_vertex_constant(double p, double aperture) {
  check_exponent(p, "cone_vertex_constant");
  if (p >= 2.0) return 1.0 + std::pow(2.0 / p, 1.0 / (p - 1.0));
  if (!(aperture > 0.0 && aperture < 0.5 * std::numbers::pi)) {
    throw InvalidArgument("cone_vertex_constant: for p < 2 the aperture must lie in (0, pi/2)");
  }
  const double slope = std::tan(aperture);
  // (x - 1) x^(p-2) has derivative x^(p-3) ((p-1) x + 2 - p) > 0, so the
  // barrier is increasing on (1, inf) and a bracketing bisection suffices.
  double lo = 1.0, hi = 2.0;
  while (vertex_barrier(p, slope, hi) < 2.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw InvalidArgument("cone_vertex_constant: no finite vertex constant");
  }
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (vertex_barrier(p, slope, mid) >= 2.0 ? hi : lo) = mid;
  }
  return hi;
}

ConeSpec ConeSpec::canonical(double p, double aperture, double c0, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("ConeSpec: dimension must be positive");
  ConeSpec c;
  c.p = p;
  c.aperture = aperture;
  c.c0 = c0;
  c.axis.assign(dim, 0.0);
  c.axis[0] = 1.0;
  c.vertex.assign(dim, 0.0);
  c.vertex[0] = c0;
  return c;
}

bool ConeSpec::contains(std::span<const double> x) const {
  if (x.size() != vertex.size()) throw InvalidArgument("ConeSpec::contains: dimension mismatch");
  double along = 0.0, norm2 = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double v = x[a] - vertex[a];
    along += v * axis[a];
    norm2 += v * v;
  }
  if (norm2 == 0.0) return true;
  return along >= std::sqrt(norm2) * std::cos(aperture);
}

std::string ConeSpec::to_json() const {
  nlohmann::ordered_json j;
  j["p"] = p;
  j["aperture"] = aperture;
  j["c0"] = c0;
  j["scale"] = scale;
  j["axis"] = axis;
  j["vertex"] = vertex;
  return j.dump(2);
}

std::string ConeCheck::to_json() const {
  nlohmann::ordered_json j;
  j["ok"] = ok;
  j["tail_ok"] = tail_ok;
  j["samples"] = samples;
  j["radius"] = radius;
  j["min_F"] = min_F;
  j["counterexample_count"] = counterexample_count;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : counterexamples) arr.push_back({{"x1", c.x1}, {"y", c.y}, {"F", c.F}});
  j["counterexamples"] = std::move(arr);
  return j.dump(2);
}

ConeCheck verify_cone_in_U(const ConeSpec& cone, const ConeCheckOptions& options) {
  check_exponent(cone.p, "verify_cone_in_U");
  const double p = cone.p, c = cone.c0, theta = cone.aperture;
  ConeCheck out;
  out.radius = options.radius > 0.0 ? options.radius : std::max(50.0, 20.0 * c);
  out.min_F = std::numeric_limits<double>::infinity();
  const double big_r = out.radius;
  const std::uint64_t budget = std::max<std::uint64_t>(options.budget, 1);

  auto check = [&](double r, double phi) {
    const double x1 = c + r * std::cos(phi);
    const double y = r * std::sin(phi);
    const double f = barrier_F(x1, y, p);
    // F is a difference of two p-th powers; allow their rounding error.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::pow(x1 * x1 + y * y, 0.5 * p));
    ++out.samples;
    out.min_F = std::min(out.min_F, f);
    if (f < 2.0 - slack) {
      ++out.counterexample_count;
      if (out.counterexamples.size() < options.max_reported) out.counterexamples.push_back({x1, y, f});
    }
  };

  if (options.sampler == Sampler::Grid) {
    // Radii are spaced quadratically so that the vertex region is dense;
    // both edges of the angular range are included.
    const auto n_phi = std::max<std::uint64_t>(
        2, static_cast<std::uint64_t>(std::sqrt(static_cast<double>(budget)) / 4.0));
    const std::uint64_t n_r = std::max<std::uint64_t>(2, budget / n_phi);
    for (std::uint64_t i = 0; i < n_r; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(n_r - 1);
      const double r = big_r * u * u;
      for (std::uint64_t j = 0; j < n_phi; ++j) {
        check(r, theta * static_cast<double>(j) / static_cast<double>(n_phi - 1));
        if (r == 0.0) break;
      }
    }
  } else {
    Rng rng(derive_seed(options.seed, "cone-sampler"));
    for (std::uint64_t s = 0; s < budget; ++s) {
      const double u = rng.uniform();
      check(big_r * u * u, theta * rng.uniform());
    }
  }

  // Beyond the sampled radius every cone point has x1 >= xt.
  if (theta < 0.5 * std::numbers::pi) {
    const double xt = c + big_r * std::cos(theta);
    if (p >= 2.0) {
      // F grows in y for x1 >= 1 and F(., 0) grows in x1.
      out.tail_ok = xt >= 1.0 && barrier_F(xt, 0.0, p) >= 2.0;
    } else {
      // F decreases in y for x1 >= 1, so on the cone F >= h(x1) >= h_c(x1) with
      // h_c increasing.
      out.tail_ok = xt >= std::max(1.0, c) && vertex_barrier(p, std::tan(theta), xt) >= 2.0;
    }
  }
  out.ok = out.counterexample_count == 0 && out.tail_ok;
  return out;
}

ConeSpec build_exclusion_cone(std::span<const double> x, std::span<const double> x_prime, double p,
                              double r, double aperture) {
  check_exponent(p, "build_exclusion_cone");
  if (x.size() != x_prime.size() || x.empty()) {
    throw InvalidArgument("build_exclusion_cone: points must share a positive dimension");
  }
  if (!(r > 0.0)) throw InvalidArgument("build_exclusion_cone: r must be positive");
  double tau2 = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) tau2 += (x_prime[a] - x[a]) * (x_prime[a] - x[a]);
  const double tau = std::sqrt(tau2);
  if (!(tau > 1.5 * r && tau < 0.5 * std::sqrt(26.0) * r)) {
    throw InvalidArgument("build_exclusion_cone: |X' - X| outside (3r/2, sqrt(26) r/2)");
  }
  ConeSpec cone;
  cone.p = p;
  cone.aperture = aperture;
  cone.c0 = cone_vertex_constant(p, aperture);
  cone.scale = tau;
  cone.axis.resize(x.size());
  cone.vertex.resize(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    cone.axis[a] = (x_prime[a] - x[a]) / tau;
    cone.vertex[a] = x[a] + tau * cone.c0 * cone.axis[a];
  }
  return cone;
}

double exclusion_displacement_limit(const ConeSpec& cone) {
  return cone.scale * (std::pow(2.0, 1.0 / cone.p) - 1.0);
}

}  // namespace pml
