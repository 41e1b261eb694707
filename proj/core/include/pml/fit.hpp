#pragma once

#include <string>
#include <utility>
#include <vector>

namespace pml {

enum class GrowthModel {
  LogPower,  ///< a ln^q R + b, q fixed
  Power,     ///< a R^s + b, s fitted
};

struct FitResult {
  GrowthModel model = GrowthModel::LogPower;
  double a = 0.0;
  double b = 0.0;
  double exponent = 1.0;  ///< q for LogPower, fitted s for Power
  std::vector<double> radii;
  std::vector<double> values;  ///< per-radius medians that were fitted
  std::vector<double> residuals;
  double rss = 0.0;
  double r_squared = 0.0;
  double aic = 0.0;    ///< m ln(rss/m) + 2k, k = free parameters
  /// 95% confidence interval for a (t distribution, m - 2 degrees of
  /// freedom); LogPower only, and only when m > 2.
  double a_low = 0.0, a_high = 0.0;
};

/// (R, value) observations.  Several values per radius are reduced to their
/// median before fitting; at least three distinct radii are required.
FitResult fit_growth(const std::vector<std::pair<double, double>>& rows, GrowthModel model,
                     double q = 1.0);

struct ModelComparison {
  FitResult log_fit;
  FitResult power_fit;
  /// aic(power) - aic(log); positive favours the logarithmic law.
  double score = 0.0;
  bool log_preferred() const noexcept { return score > 0.0; }
};

ModelComparison compare_growth(const std::vector<std::pair<double, double>>& rows, double q = 1.0);

std::string to_string(GrowthModel m);

/// Per-radius medians, radii ascending.
std::vector<std::pair<double, double>> medians_by_radius(
    const std::vector<std::pair<double, double>>& rows);

}  // namespace pml
