#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pml/geometry.hpp"

namespace pml {

/// Periodic lattice with `n` nodes per axis on the torus [0, side)^dim.
/// Node (i_1, ..., i_d) sits at (i_1 h, ..., i_d h), row-major with the last
/// axis fastest.
struct Grid {
  std::size_t dim = 2;
  std::size_t n = 4;
  double side = 1.0;

  double spacing() const noexcept { return side / static_cast<double>(n); }
  std::size_t size() const noexcept;
  bool operator==(const Grid&) const = default;
};

class ScalarField {
 public:
  explicit ScalarField(Grid grid);
  ScalarField(Grid grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Value at a multi-index, taken modulo n on every axis.
  double at(std::span<const long> index) const;
  /// Flat index of a multi-index (periodic).
  std::size_t flat_index(std::span<const long> index) const;

  double mean() const;
  /// Riemann sum of the values times h^d.
  double integral() const;
  double l2_norm() const;  ///< sqrt(mean of squares)

 private:
  Grid grid_;
  std::vector<double> values_;
};

struct VectorField {
  Grid grid;
  std::vector<std::vector<double>> components;  ///< one array per axis

  /// Pointwise Euclidean norm.
  ScalarField norm() const;
};

enum class Derivative { Spectral, Centered };

/// Periodic Gaussian convolution of the cloud's Dirac sum, sampled on the
/// grid with n nodes per axis.
ScalarField mollify(const PointCloud& cloud, std::size_t n, double scale = 1.0);

/// Same field by direct summation of wrapped Gaussians (truncated at 8
/// standard deviations).  Reference implementation; O(points * nodes).
ScalarField mollify_direct(const PointCloud& cloud, std::size_t n, double scale = 1.0);

/// Direct wrapped-Gaussian density of the cloud at an arbitrary point.
double mollified_value(const PointCloud& cloud, std::span<const double> x, double scale = 1.0);

/// phi with -Laplace(phi) = rhs and mean(phi) = 0.  The rhs must have mean
/// zero to 1e-9 relative to its root mean square.
ScalarField solve_poisson(const ScalarField& rhs);

/// Discrete -Laplace: spectral symbol 4 pi^2 |k|^2 / L^2, or the standard
/// second-difference stencil.
ScalarField negative_laplacian(const ScalarField& f, Derivative method = Derivative::Spectral);

/// Gradient; the spectral version drops the Nyquist mode.
VectorField gradient(const ScalarField& f, Derivative method = Derivative::Spectral);

ScalarField divergence(const VectorField& v, Derivative method = Derivative::Spectral);

/// F = (1/L^d) sum over nodes of (1/p) |grad phi|^p h^d.
double gradient_energy(const ScalarField& phi, double p, Derivative method = Derivative::Spectral);

// Field envelopes: CSV grid dump and binary (magic "PMLF").
void write_field_csv(const ScalarField& f, const std::string& path);
void write_field_binary(const ScalarField& f, const std::string& path);
ScalarField read_field_binary(const std::string& path);

}  // namespace pml
