#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pml/fit.hpp"
#include "pml/geometry.hpp"
#include "pml/moser.hpp"
#include "pml/ot.hpp"

namespace pml {

enum class Statistic {
  TorusCost,         ///< W~_p^p(mu, n) / R^d on the torus [0, R)^d
  DataTerm,          ///< D_p(R)
  EnergyTerm,        ///< E_p(R) of the optimal matching
  MeanDisplacement,  ///< (1/R^d) sum over X in B_R of |T(X) - X|
  MaxDisplacement,   ///< max over X in B_R of |T(X) - X|
  Exceedance,        ///< #{X in B_R : |T(X) - X| > L} / R^d
  HolderBound,       ///< L #(mu in B_R)/R^d + eps^(1/p') E_p^(1/p)
  Density,           ///< R^p |n_mu - 1|^p on B_R
};

std::string to_string(Statistic s);
Statistic statistic_from_string(const std::string& name);
/// Whether the statistic needs the optimal matching on the window torus.
bool needs_matching(Statistic s);

struct ExperimentConfig {
  std::size_t dim = 2;
  double p = 2.0;
  std::vector<double> radii{8, 16, 32};
  std::size_t seeds = 4;
  std::uint64_t seed = 1;
  double intensity = 1.0;
  std::vector<Statistic> statistics{Statistic::TorusCost};
  /// Window factor: matchings and data terms use the torus of side window * R.
  double window = 8.0;
  double exceedance_length = 2.0;
  Backend backend = Backend::Exact;
  /// Above this many points per cloud the torus cost switches to the
  /// entropic backend (0 disables the switch).
  std::size_t exact_point_limit = 0;
  DataTermOptions transport{};
  /// Worker threads for the cell pool; 0 means one.
  std::size_t threads = 1;
  std::string csv_path;
  std::string json_path;
  std::string svg_path;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct ReportRow {
  Statistic statistic;
  double radius;
  std::size_t seed;  ///< seed index within the radius
  double value;      ///< NaN on error
  std::string error;
};

struct ScalingReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;  ///< sorted by (statistic, R, seed)
  std::map<Statistic, ModelComparison> fits;
  std::size_t failures = 0;

  std::vector<std::pair<double, double>> series(Statistic s) const;
  /// Long-format CSV: statistic,R,seed,value,error.
  std::string to_csv() const;
  std::string to_json() const;
  /// Log-scale plot of per-radius medians against ln R.
  std::string to_svg() const;
};

/// (C, k) with R = C 2^k and C in [1/sqrt 2, sqrt 2).
std::pair<double, int> dyadic_decomposition(double radius);

/// Seeds of the two clouds of cell (radius index, seed index).
std::uint64_t cell_seed(std::uint64_t master, std::size_t radius_index, std::size_t seed_index,
                        std::string_view role);

ScalingReport run_scaling(const ExperimentConfig& config);

/// R^p |n - 1|^p with n = #(cloud in B_R(center)) / |B_R|.
double density_fluctuation(const PointCloud& cloud, double radius, double p,
                           std::optional<std::vector<double>> center = {});

struct DensityReport {
  std::vector<ReportRow> rows;
  std::map<double, double> exceedance;  ///< per radius, fraction above the threshold
  double threshold_constant = 10.0;
};

/// Unit-intensity Poisson samples on the torus of side 8R; the threshold is
/// C ln^(p/2) R in d = 2 and C in d >= 3.
DensityReport density_concentration(std::size_t dim, double p, const std::vector<double>& radii,
                                    std::size_t seeds, std::uint64_t master = 1,
                                    double threshold_constant = 10.0);

struct RestrictionResult {
  double lhs = 0.0;   ///< midpoint rule of the restricted data term over R-1/2..R+1/2
  double rhs = 0.0;   ///< D~ on the full torus
  double ratio = 0.0;
  std::size_t samples = 0;
};

/// mu must live on the torus of side 8R; the ball is centred in it.
RestrictionResult restriction_check(const PointCloud& mu, double radius, double p,
                                    std::size_t samples = 8, const DataTermOptions& options = {});

struct MesoscopicResult {
  std::size_t min_count = 0;
  std::size_t cubes = 0;
  bool ok = false;
};

/// Minimum count over cubes of side r tiling the centred cube (-2R, 2R)^d; the
/// tiling has floor(4R/r) cubes per axis.  Requires r >= factor * eps * R.
MesoscopicResult mesoscopic_count_check(const PointCloud& mu, double radius, double eps, double r,
                                        double kappa = 0.1, double factor = 10.0);

struct FQuantiles {
  double radius = 0.0;
  double normalizer = 1.0;  ///< ln^(p/2) R in d = 2, 1 otherwise
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;  ///< normalized
  std::vector<double> values;         ///< raw F per seed
};

std::vector<FQuantiles> f_concentration_report(std::size_t dim, double p,
                                               const std::vector<double>& radii, std::size_t seeds,
                                               std::uint64_t master = 1,
                                               const MoserOptions& options = {});

struct HolderSplit {
  double lhs = 0.0;  ///< mean displacement
  double rhs = 0.0;
  bool holds = false;
};

/// The split sum |d| <= L #{|d| <= L} + #{|d| > L}^(1/p') (sum over |d| > L of |d|^p)^(1/p),
/// normalized by R^d, with E_p bounding the tail energy.
HolderSplit holder_split(const PointCloud& mu, const PointCloud& nu, const Matching& matching,
                         double radius, double p, double length);

}  // namespace pml
