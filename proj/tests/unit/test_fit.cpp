#include <gtest/gtest.h>

#include <cmath>

#include "pml/errors.hpp"
#include "pml/fit.hpp"

using namespace pml;

namespace {

std::vector<std::pair<double, double>> rows_from(const std::vector<double>& radii,
                                                 double (*f)(double)) {
  std::vector<std::pair<double, double>> rows;
  for (double r : radii) rows.emplace_back(r, f(r));
  return rows;
}

}  // namespace

TEST(Fit, LogLawMatchesLinearRegression) {
  // scipy.stats.linregress on the same data with a t(2) interval.
  const std::vector<double> noise{0.001, -0.002, 0.0015, -0.0005};
  const std::vector<double> radii{16, 32, 64, 128};
  std::vector<std::pair<double, double>> rows;
  for (std::size_t i = 0; i < 4; ++i) rows.emplace_back(radii[i], 0.1 * std::log(radii[i]) + 0.3 + noise[i]);
  const FitResult f = fit_growth(rows, GrowthModel::LogPower, 1.0);
  EXPECT_NEAR(f.a, 0.09985573049591112, 1e-12);
  EXPECT_NEAR(f.b, 0.30054999999999993, 1e-12);
  EXPECT_NEAR(f.a_low, 0.09449789999073477, 1e-10);
  EXPECT_NEAR(f.a_high, 0.10521356100108747, 1e-10);
  EXPECT_GT(f.r_squared, 0.99);
  EXPECT_EQ(f.residuals.size(), 4u);
}

TEST(Fit, RecoversPowerExponent) {
  const auto rows = rows_from({2, 4, 8, 16, 32, 64}, [](double r) { return 3.0 * std::pow(r, 0.4) - 1.0; });
  const FitResult f = fit_growth(rows, GrowthModel::Power);
  EXPECT_NEAR(f.exponent, 0.4, 1e-6);
  EXPECT_NEAR(f.a, 3.0, 1e-4);
  EXPECT_NEAR(f.b, -1.0, 1e-4);
}

TEST(Fit, RecoversNegativeExponent) {
  const auto rows = rows_from({2, 4, 8, 16, 32}, [](double r) { return 2.0 / r + 0.5; });
  EXPECT_NEAR(fit_growth(rows, GrowthModel::Power).exponent, -1.0, 1e-6);
}

TEST(Fit, ComparisonPrefersTrueModel) {
  const std::vector<double> radii{4, 8, 16, 32, 64, 128, 256, 512};
  const double wiggle[] = {0.002, -0.001, 0.0015, -0.002, 0.001, -0.0005, 0.0012, -0.0008};
  std::vector<std::pair<double, double>> logrows, powrows;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    logrows.emplace_back(radii[i], 0.2 * std::log(radii[i]) + 0.1 + wiggle[i]);
    powrows.emplace_back(radii[i], 0.05 * std::pow(radii[i], 0.7) + wiggle[i]);
  }
  EXPECT_TRUE(compare_growth(logrows).log_preferred());
  EXPECT_FALSE(compare_growth(powrows).log_preferred());
}

TEST(Fit, LogPowerExponentQ) {
  const auto rows = rows_from({4, 8, 16, 32}, [](double r) { return 2.0 * std::pow(std::log(r), 1.5) + 1.0; });
  const FitResult f = fit_growth(rows, GrowthModel::LogPower, 1.5);
  EXPECT_NEAR(f.a, 2.0, 1e-10);
  EXPECT_NEAR(f.b, 1.0, 1e-10);
  EXPECT_NEAR(f.exponent, 1.5, 0.0);
}

TEST(Fit, MediansByRadius) {
  const std::vector<std::pair<double, double>> rows{{8, 3}, {4, 1}, {8, 1}, {4, 5}, {8, 2}};
  const auto m = medians_by_radius(rows);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], std::make_pair(4.0, 3.0));
  EXPECT_EQ(m[1], std::make_pair(8.0, 2.0));
}

TEST(Fit, RejectsTooFewRadii) {
  EXPECT_THROW(fit_growth({{4, 1}, {8, 2}, {8, 3}}, GrowthModel::LogPower), InvalidArgument);
  EXPECT_THROW(fit_growth({{1, 1}, {8, 2}, {16, 3}}, GrowthModel::LogPower), InvalidArgument);
  EXPECT_EQ(to_string(GrowthModel::Power), "power");
}
