#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "pml/field.hpp"
#include "pml/rng.hpp"

namespace pml::testing {

/// cos(2 pi k . x / L + phase) sampled on the grid.
inline ScalarField cosine_mode(const Grid& g, const std::vector<int>& k, double phase = 0.0) {
  ScalarField f(g);
  const double h = g.spacing();
  std::vector<std::size_t> idx(g.dim, 0);
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    std::size_t rest = flat;
    for (std::size_t a = g.dim; a-- > 0;) {
      idx[a] = rest % g.n;
      rest /= g.n;
    }
    double arg = phase;
    for (std::size_t a = 0; a < g.dim; ++a) {
      arg += 2.0 * std::numbers::pi * k[a] * static_cast<double>(idx[a]) * h / g.side;
    }
    f[flat] = std::cos(arg);
  }
  return f;
}

/// Band-limited mean-zero random field (no Nyquist content).
inline ScalarField random_field(const Grid& g, std::uint64_t seed, int modes = 6) {
  Rng rng(seed);
  ScalarField f(g);
  const int kmax = static_cast<int>(g.n / 2) - 1;
  for (int m = 0; m < modes; ++m) {
    std::vector<int> k(g.dim);
    bool zero = true;
    for (auto& ka : k) {
      ka = static_cast<int>(rng.below(2 * kmax + 1)) - kmax;
      zero = zero && ka == 0;
    }
    if (zero) k[0] = 1;
    const double amp = rng.normal();
    const ScalarField mode = cosine_mode(g, k, 2.0 * std::numbers::pi * rng.uniform());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += amp * mode[i];
  }
  return f;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double max_abs(const ScalarField& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

}  // namespace pml::testing
