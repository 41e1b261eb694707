#include "pml/moser.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <json.hpp>

#include "pml/errors.hpp"

namespace pml {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("bb_candidate: t must lie in [0, 1]");
}

void check_pair(const ScalarField& phi, const ScalarField& mu1, double p) {
  if (!(phi.grid() == mu1.grid())) throw InvalidArgument("bb_candidate: fields on different grids");
  if (!(p >= 1.0)) throw InvalidArgument("bb_candidate: p must be >= 1");
}

}  // namespace

BBState bb_candidate(const ScalarField& phi, const ScalarField& mu1, double n, double p, double t) {
  check_time(t);
  check_pair(phi, mu1, p);
  const double w = std::pow(1.0 - t, p);
  ScalarField rho(mu1.grid());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = w * mu1[i] + (1.0 - w) * n;
  VectorField flux = gradient(phi);
  const double c = t == 1.0 ? 0.0 : -p * std::pow(1.0 - t, p - 1.0);
  for (auto& comp : flux.components) {
    for (double& v : comp) v *= c;
  }
  return {t, std::move(rho), std::move(flux)};
}

double continuity_residual(const ScalarField& phi, const ScalarField& mu1, double n, double p,
                           double t) {
  const BBState s = bb_candidate(phi, mu1, n, p, t);
  const ScalarField div = divergence(s.flux);
  const double c = t == 1.0 ? 0.0 : -p * std::pow(1.0 - t, p - 1.0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < div.size(); ++i) {
    const double dt = c * (mu1[i] - n);
    num += (dt + div[i]) * (dt + div[i]);
    den += dt * dt;
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

double bb_action(const ScalarField& phi, const ScalarField& mu1, double n, double p) {
  check_pair(phi, mu1, p);
  if (!(n > 0.0)) throw DegenerateInput("bb_action: density must be positive");
  const ScalarField g = gradient(phi).norm();
  const double beta = (p - 1.0) * (p - 1.0) / p;
  const double pre = std::pow(p, p - 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double gp = std::pow(g[i], p);
    if (gp == 0.0) continue;
    const double a = std::max(mu1[i], 0.0);
    // With s = 1 - (1-t)^p the time integral becomes
    // p^(p-1) int_0^1 (1-s)^beta / ((1-s) a + s n)^(p-1) ds.
    auto f = [&](double s) {
      return std::pow(1.0 - s, beta) / std::pow((1.0 - s) * a + s * n, p - 1.0);
    };
    double err = 0.0;
    const double time_integral =
        p == 1.0 ? 1.0
                 : boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 20,
                                                                                 1e-10, &err);
    total += pre * time_integral * gp;
  }
  return total * std::pow(g.grid().spacing(), static_cast<double>(g.grid().dim));
}

double gaussian_abs_moment(std::size_t dim, double p) {
  const double d = static_cast<double>(dim);
  return std::pow(2.0, 0.5 * p) * std::exp(std::lgamma(0.5 * (d + p)) - std::lgamma(0.5 * d));
}

ScalarField moser_potential(const PointCloud& cloud, std::size_t grid_nodes, double scale) {
  ScalarField mu1 = mollify(cloud, grid_nodes, scale);
  const double n = static_cast<double>(cloud.size()) / cloud.domain().volume();
  for (double& v : mu1.values()) v -= n;
  // Remove the residual mean left by aliasing and round-off.
  const double m = mu1.mean();
  for (double& v : mu1.values()) v -= m;
  return solve_poisson(mu1);
}

namespace {

std::size_t grid_nodes_for(const PointCloud& cloud, const MoserOptions& options) {
  if (options.grid_nodes != 0) return options.grid_nodes;
  return static_cast<std::size_t>(std::ceil(cloud.domain().side() * options.nodes_per_unit));
}

double action_on_grid(const PointCloud& cloud, double p, std::size_t nodes, double scale,
                      double n, double* energy) {
  ScalarField mu1 = mollify(cloud, nodes, scale);
  ScalarField rhs = mu1;
  for (double& v : rhs.values()) v -= n;
  const double m = rhs.mean();
  for (double& v : rhs.values()) v -= m;
  const ScalarField phi = solve_poisson(rhs);
  if (energy) *energy = gradient_energy(phi, p);
  return bb_action(phi, mu1, n, p);
}

}  // namespace

MoserCertificate moser_upper_bound(const PointCloud& cloud, double p, const MoserOptions& options) {
  const Domain& dom = cloud.domain();
  if (!dom.is_torus()) throw InvalidArgument("moser_upper_bound: the cloud must live on a torus");
  if (!(p >= 1.0)) throw InvalidArgument("moser_upper_bound: p must be >= 1");
  if (cloud.empty()) throw DegenerateInput("moser_upper_bound: empty cloud");
  const double n = static_cast<double>(cloud.size()) / dom.volume();
  if (n < options.n_min) {
    throw DegenerateInput("moser_upper_bound: density " + std::to_string(n) +
                          " below the floor n_min");
  }
  const std::size_t nodes = grid_nodes_for(cloud, options);
  MoserCertificate c;
  c.p = p;
  c.count = cloud.size();
  c.density = n;
  c.grid_nodes = nodes;
  c.mollification_leg =
      static_cast<double>(cloud.size()) * std::pow(options.mollifier_scale, p) *
      gaussian_abs_moment(dom.dim(), p);
  c.dynamic_leg = action_on_grid(cloud, p, nodes, options.mollifier_scale, n, &c.gradient_energy);
  const double coarse = action_on_grid(cloud, p, std::max<std::size_t>(4, nodes / 2),
                                       options.mollifier_scale, n, nullptr);
  const double tri = std::pow(2.0, p - 1.0);
  c.value = tri * (c.mollification_leg + c.dynamic_leg);
  c.grid_budget = tri * std::fabs(c.dynamic_leg - coarse);
  const double h = dom.side() / static_cast<double>(nodes);
  c.quantization_budget = static_cast<double>(cloud.size()) *
                          std::pow(h * std::sqrt(static_cast<double>(dom.dim())) / 2.0, p);
  return c;
}

std::string MoserCertificate::to_json() const {
  nlohmann::ordered_json j;
  j["value"] = value;
  j["grid_budget"] = grid_budget;
  j["quantization_budget"] = quantization_budget;
  j["legs"] = {{"mollification", mollification_leg}, {"dynamic", dynamic_leg}};
  j["gradient_energy"] = gradient_energy;
  j["density"] = density;
  j["count"] = count;
  j["grid_nodes"] = grid_nodes;
  j["p"] = p;
  return j.dump(2);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile: level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

FStatistics f_statistics(std::size_t dim, double radius, double p,
                         const std::vector<std::uint64_t>& seeds, const MoserOptions& options) {
  if (seeds.empty()) throw InvalidArgument("f_statistics: need at least one seed");
  if (!(radius > 0.0)) throw InvalidArgument("f_statistics: radius must be positive");
  FStatistics s;
  s.seeds = seeds;
  const Domain dom = Domain::torus(dim, radius);
  for (std::uint64_t seed : seeds) {
    const PointCloud cloud = sample_poisson(1.0, dom, seed);
    if (cloud.empty()) throw DegenerateInput("f_statistics: empty Poisson sample");
    const ScalarField phi =
        moser_potential(cloud, grid_nodes_for(cloud, options), options.mollifier_scale);
    s.values.push_back(gradient_energy(phi, p));
  }
  s.q50 = quantile(s.values, 0.5);
  s.q90 = quantile(s.values, 0.9);
  s.q99 = quantile(s.values, 0.99);
  return s;
}

}  // namespace pml
