#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pml/field.hpp"
#include "pml/geometry.hpp"

namespace pml {

/// Density/flux pair of the interpolation between mu1 and the constant n:
/// rho_t = (1-t)^p mu1 + (1 - (1-t)^p) n,  j_t = -p (1-t)^(p-1) grad phi.
struct BBState {
  double t = 0.0;
  ScalarField rho;
  VectorField flux;
};

BBState bb_candidate(const ScalarField& phi, const ScalarField& mu1, double n, double p, double t);

/// Relative L2 residual of d rho/dt + div j at time t: the time derivative is
/// analytic, the divergence spectral.
double continuity_residual(const ScalarField& phi, const ScalarField& mu1, double n, double p,
                           double t);

/// Benamou-Brenier action int_0^1 int |j|^p / rho^(p-1) of the candidate,
/// integrated exactly in time per node (adaptive Gauss-Kronrod) and by the
/// grid Riemann sum in space.
double bb_action(const ScalarField& phi, const ScalarField& mu1, double n, double p);

/// E|Z|^p for Z standard normal in R^d.
double gaussian_abs_moment(std::size_t dim, double p);

struct MoserOptions {
  /// Nodes per unit length; the grid has ceil(side * nodes_per_unit) nodes per axis.
  double nodes_per_unit = 4.0;
  /// Explicit node count per axis; overrides nodes_per_unit when non-zero.
  std::size_t grid_nodes = 0;
  double n_min = 0.25;
  double mollifier_scale = 1.0;
};

/// Certified upper bound on the torus cost W~_p^p(mu, n).
struct MoserCertificate {
  double value = 0.0;                ///< 2^(p-1) (mollification + dynamic)
  double mollification_leg = 0.0;    ///< count * E|Z|^p bounds W~_p^p(mu, mu1)
  double dynamic_leg = 0.0;          ///< action of the candidate, bounds W~_p^p(mu1, n)
  double grid_budget = 0.0;          ///< 2^(p-1) |action(N) - action(N/2)|
  double quantization_budget = 0.0;  ///< count (h sqrt(d)/2)^p for the grid h
  double gradient_energy = 0.0;      ///< F of the solved potential
  double density = 0.0;              ///< n = count / L^d
  std::size_t count = 0;
  std::size_t grid_nodes = 0;
  double p = 2.0;

  std::string to_json() const;
};

MoserCertificate moser_upper_bound(const PointCloud& cloud, double p,
                                   const MoserOptions& options = {});

/// phi solving -Laplace phi = mu1 - mean(mu1) for the mollified cloud.
ScalarField moser_potential(const PointCloud& cloud, std::size_t grid_nodes, double scale = 1.0);

struct FStatistics {
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;
};

/// F = gradient_energy(phi) for seeded unit-intensity Poisson clouds on the torus [0, R)^d.
FStatistics f_statistics(std::size_t dim, double radius, double p,
                         const std::vector<std::uint64_t>& seeds,
                         const MoserOptions& options = {});

/// Linear-interpolation sample quantile (type 7).
double quantile(std::vector<double> values, double q);

}  // namespace pml
