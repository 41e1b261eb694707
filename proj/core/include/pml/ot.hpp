#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "pml/geometry.hpp"

namespace pml {

/// Dense matrix of p-th powers of domain distances.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries, double p = 1.0);

  /// entry(i, j) = dist(a_i, b_j)^p in the clouds' shared domain metric.
  static CostMatrix from_clouds(const PointCloud& a, const PointCloud& b, double p);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double p() const noexcept { return p_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }
  std::span<const double> entries() const noexcept { return entries_; }
  double max_entry() const noexcept;

 private:
  std::size_t rows_, cols_;
  std::vector<double> entries_;
  double p_;
};

/// Bijection i -> target[i] with its total cost.
struct Matching {
  std::vector<std::size_t> target;
  double cost = 0.0;

  std::size_t size() const noexcept { return target.size(); }
  /// Inverse permutation.
  std::vector<std::size_t> inverse() const;
  bool is_permutation() const;
};

struct PlanEntry {
  std::size_t src;
  std::size_t dst;
  double mass;
};

/// Sparse coupling with its marginals and cost.
struct TransportPlan {
  std::vector<PlanEntry> entries;
  std::vector<double> src_weights;
  std::vector<double> dst_weights;
  double cost = 0.0;

  /// Largest marginal violation relative to the total mass.
  double marginal_violation() const;
};

/// Weighted point set (empirical measure or quantized Lebesgue).
struct WeightedPoints {
  std::size_t dim = 0;
  std::vector<double> coords;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
  double total_mass() const;

  /// Unit weights on every point of the cloud.
  static WeightedPoints from_cloud(const PointCloud& cloud);
};

/// Cell-centred lattice in a region with equal atom masses.
struct QuantizedLebesgue {
  WeightedPoints atoms;
  double spacing = 0.0;
  double total_mass = 0.0;

  /// Upper bound on W_p^p between this quantization and the uniform measure it
  /// replaces: totalMass * (h sqrt(d) / 2)^p.
  double quantization_budget(double p) const;
};

/// Lattice region for quantize_lebesgue: a ball, a half-open cube, or a whole
/// domain (torus or box).
using QuantRegion = AnyRegion;

QuantizedLebesgue quantize_lebesgue(const QuantRegion& region, double spacing, double total_mass);

/// Options shared by the exact solvers.
struct ExactOptions {
  /// Costs are scaled to integers so that the largest arc cost maps to this
  /// value (capped by the network simplex overflow bound).
  double cost_resolution = 1099511627776.0;  // 2^40
  /// Dense cost matrices are used below this many arcs; above it a sparse
  /// candidate graph is priced against the full bipartite graph.
  std::size_t dense_arc_limit = 200'000;
  /// Initial candidate arcs per node in the sparse solver.
  std::size_t candidates = 8;
  /// Most-negative reduced-cost arcs added per source per pricing round.
  std::size_t pricing_batch = 16;
};

/// Exact minimum-cost bijection for a square matrix.  Among all minimizers the
/// lexicographically smallest permutation is returned.
Matching solve_assignment(const CostMatrix& cost);

/// Exact optimal transport between weighted sets with cost matrix `cost`.
TransportPlan solve_transport(std::span<const double> src_weights,
                              std::span<const double> dst_weights, const CostMatrix& cost,
                              const ExactOptions& options = {});

/// Exact optimal transport between weighted point sets under the domain
/// metric, without materializing the dense cost matrix.
TransportPlan solve_transport_geometric(const WeightedPoints& src, const WeightedPoints& dst,
                                        const Domain& metric, double p,
                                        const ExactOptions& options = {});

/// Exact minimum-cost bijection between two equal-size clouds.
Matching solve_assignment_geometric(const PointCloud& a, const PointCloud& b, double p,
                                    const ExactOptions& options = {});

/// Additive error bound of the integer cost scaling used by the exact solvers.
double cost_rounding_budget(double total_mass, double max_cost, const ExactOptions& options = {});

/// W_p^p between two measures of equal mass.  Unit-weight equal-count clouds
/// go through the assignment solver.
double wasserstein_p(const WeightedPoints& a, const WeightedPoints& b, double p,
                     const Domain& metric, const ExactOptions& options = {});
double wasserstein_p(const PointCloud& a, const PointCloud& b, double p,
                     const ExactOptions& options = {});

struct EntropicOptions {
  double epsilon = 1e-3;
  int max_iterations = 20000;
  /// Target marginal violation (L1, relative to total mass).
  double tolerance = 1e-6;
  /// epsilon-scaling factor between stages; the first stage uses the largest cost.
  double scaling = 0.5;
};

struct EntropicResult {
  TransportPlan plan;          ///< rounded onto the exact marginals
  double violation_before_rounding = 0.0;
  int iterations = 0;
};

/// Log-domain Sinkhorn with epsilon scaling.  The plan is rounded onto the
/// exact marginals, so its cost upper-bounds the unregularized optimum.
EntropicResult entropic_transport(std::span<const double> src_weights,
                                  std::span<const double> dst_weights, const CostMatrix& cost,
                                  const EntropicOptions& options = {});

/// Measurement backend for the data term.
enum class Backend { Exact, Entropic };

struct DataTermOptions {
  double spacing = 0.25;
  Backend backend = Backend::Exact;
  EntropicOptions entropic{};
  ExactOptions exact{};
  /// Ball centre; defaults to the domain centre.
  std::optional<std::vector<double>> center;
};

struct DataTermParts {
  double value = 0.0;
  double transport_mu = 0.0;  ///< W_p^p(mu|B_R, n_mu) / R^d
  double transport_nu = 0.0;
  double density_mu = 0.0;    ///< R^p |n_mu - 1|^p / n_mu
  double density_nu = 0.0;
  double n_mu = 0.0;
  double n_nu = 0.0;
  double quantization_budget = 0.0;  ///< on the normalized scale
};

/// Transport of each cloud on B_R to its own constant density plus the
/// density-fluctuation penalties.
DataTermParts data_term(const PointCloud& mu, const PointCloud& nu, double radius, double p,
                        const DataTermOptions& options = {});

/// One cloud's half of the data term.
DataTermParts data_term_single(const PointCloud& mu, double radius, double p,
                               const DataTermOptions& options = {});

/// (1/R^d) sum over pairs with X in B_R or T(X) in B_R of dist(X, T(X))^p.
double energy_term(const PointCloud& mu, const PointCloud& nu, const Matching& matching,
                   double radius, double p, std::optional<std::vector<double>> center = {});

/// Torus transport cost of a cloud to its own constant density n * Leb on
/// the cloud's torus, with Lebesgue quantized at options.spacing (adjusted to
/// divide the side).  Returns the unnormalized W_p^p.
double torus_cost_to_uniform(const PointCloud& cloud, double p, const DataTermOptions& options = {});

/// Points of a cloud inside the open ball, re-expressed in Euclidean
/// coordinates around the ball centre (minimal image on a torus).
WeightedPoints restrict_to_ball(const PointCloud& cloud, const Ball& ball);

}  // namespace pml
