#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "pml/errors.hpp"
#include "pml/scaling.hpp"

using namespace pml;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.radii = {2, 4, 8};
  c.seeds = 3;
  c.window = 5.0;
  c.transport.spacing = 0.5;
  c.statistics = {Statistic::TorusCost, Statistic::Density, Statistic::EnergyTerm,
                  Statistic::MeanDisplacement, Statistic::HolderBound};
  return c;
}

}  // namespace

TEST(Scaling, DyadicDecomposition) {
  for (double r : {0.3, 1.0, 3.0, 17.0, 100.0, 1e6}) {
    const auto [c, k] = dyadic_decomposition(r);
    EXPECT_GE(c, 1.0 / std::sqrt(2.0) - 1e-12);
    EXPECT_LT(c, std::sqrt(2.0) + 1e-12);
    EXPECT_NEAR(c * std::ldexp(1.0, k), r, 1e-12 * r);
  }
  EXPECT_THROW(dyadic_decomposition(0.0), InvalidArgument);
}

TEST(Scaling, StatisticNames) {
  for (Statistic s : {Statistic::TorusCost, Statistic::DataTerm, Statistic::Exceedance, Statistic::Density}) {
    EXPECT_EQ(statistic_from_string(to_string(s)), s);
  }
  EXPECT_THROW(statistic_from_string("nope"), InvalidArgument);
}

TEST(Scaling, CellSeedsAreDistinct) {
  EXPECT_NE(cell_seed(1, 0, 0, "mu"), cell_seed(1, 0, 0, "nu"));
  EXPECT_NE(cell_seed(1, 0, 1, "mu"), cell_seed(1, 1, 0, "mu"));
  EXPECT_EQ(cell_seed(1, 2, 3, "mu"), cell_seed(1, 2, 3, "mu"));
}

TEST(Scaling, RowsAreSortedAndComplete) {
  const ScalingReport r = run_scaling(small_config());
  EXPECT_EQ(r.rows.size(), 5u * 3u * 3u);
  EXPECT_EQ(r.failures, 0u);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    const auto& a = r.rows[i - 1];
    const auto& b = r.rows[i];
    const bool ordered = static_cast<int>(a.statistic) != static_cast<int>(b.statistic) ||
                         a.radius < b.radius || (a.radius == b.radius && a.seed < b.seed);
    EXPECT_TRUE(ordered) << i;
  }
  for (const auto& row : r.rows) EXPECT_TRUE(std::isfinite(row.value));
  EXPECT_EQ(r.series(Statistic::Density).size(), 9u);
  EXPECT_EQ(r.fits.size(), 5u);
}

TEST(Scaling, IndependentOfThreadCount) {
  ExperimentConfig c = small_config();
  c.threads = 1;
  const std::string one = run_scaling(c).to_csv();
  c.threads = 4;
  EXPECT_EQ(run_scaling(c).to_csv(), one);
}

TEST(Scaling, OutputsParse) {
  const ScalingReport r = run_scaling(small_config());
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.rfind("statistic,R,seed,value,error\n", 0), 0u);
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_TRUE(j.contains("config"));
  EXPECT_TRUE(j["statistics"].contains("torus_cost"));
  EXPECT_EQ(r.to_svg().rfind("<svg", 0), 0u);
}

TEST(Scaling, FailuresAreRecordedNotFatal) {
  ExperimentConfig c;
  c.radii = {2, 3, 4};
  c.seeds = 2;
  c.intensity = 1e-7;
  c.statistics = {Statistic::DataTerm};
  const ScalingReport r = run_scaling(c);
  EXPECT_EQ(r.failures, r.rows.size());
  for (const auto& row : r.rows) {
    EXPECT_TRUE(std::isnan(row.value));
    EXPECT_FALSE(row.error.empty());
  }
}

TEST(Scaling, DensityFluctuation) {
  const PointCloud c(Domain::torus(2, 10.0), {5.0, 5.0});
  const double n = 1.0 / (std::acos(-1.0) * 4.0);
  EXPECT_NEAR(density_fluctuation(c, 2.0, 2.0), 4.0 * (n - 1.0) * (n - 1.0), 1e-12);
}

TEST(Scaling, DensityConcentrationRows) {
  const DensityReport d = density_concentration(2, 2.0, {4, 8}, 20, 3);
  EXPECT_EQ(d.rows.size(), 40u);
  EXPECT_EQ(d.exceedance.size(), 2u);
  for (const auto& [r, frac] : d.exceedance) {
    EXPECT_GE(frac, 0.0);
    EXPECT_LE(frac, 1.0);
  }
}

TEST(Scaling, RestrictionCheck) {
  const double r = 3.0;
  const PointCloud mu = sample_poisson(1.0, Domain::torus(2, 8.0 * r), 5);
  DataTermOptions o;
  o.spacing = 0.5;
  const RestrictionResult res = restriction_check(mu, r, 2.0, 4, o);
  EXPECT_GT(res.lhs, 0.0);
  EXPECT_GT(res.rhs, 0.0);
  EXPECT_NEAR(res.ratio, res.lhs / res.rhs, 1e-12);
  EXPECT_THROW(restriction_check(sample_poisson(1.0, Domain::torus(2, 10.0), 1), r, 2.0), InvalidArgument);
}

TEST(Scaling, MesoscopicCounts) {
  const double R = 8.0;
  const PointCloud mu = sample_poisson(1.0, Domain::torus(2, 4.0 * R), 2);
  const MesoscopicResult m = mesoscopic_count_check(mu, R, 0.05, 4.0);
  EXPECT_EQ(m.cubes, 64u);
  EXPECT_TRUE(m.ok);
  EXPECT_THROW(mesoscopic_count_check(mu, R, 0.5, 4.0), InvalidArgument);
}

TEST(Scaling, HolderSplitHolds) {
  const Domain t = Domain::torus(2, 24.0);
  const PointCloud mu = sample_poisson(1.0, t, 1);
  const PointCloud nu = sample_uniform(mu.size(), t, 2);
  const Matching m = solve_assignment_geometric(mu, nu, 2.0);
  for (double L : {0.5, 1.0, 2.0}) EXPECT_TRUE(holder_split(mu, nu, m, 6.0, 2.0, L).holds);
}

TEST(Scaling, FConcentrationReport) {
  const auto rep = f_concentration_report(2, 2.0, {4, 8}, 5, 9);
  ASSERT_EQ(rep.size(), 2u);
  EXPECT_NEAR(rep[1].normalizer, std::log(8.0), 1e-12);
  EXPECT_EQ(rep[0].values.size(), 5u);
  EXPECT_LE(rep[0].q50, rep[0].q99);
}
