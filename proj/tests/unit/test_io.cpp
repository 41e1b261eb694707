#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "pml/errors.hpp"
#include "pml/io.hpp"

using namespace pml;

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Io, CloudCsvRoundTrip) {
  const PointCloud c = sample_poisson(1.0, Domain::torus(2, 5.0), 77);
  std::stringstream ss;
  write_cloud_csv(c, ss);
  EXPECT_EQ(ss.str().rfind("# pml-cloud v1 kind=torus dim=2", 0), 0u);
  const PointCloud back = read_cloud_csv(ss);
  EXPECT_EQ(back, c);
}

TEST(Io, CloudBinaryRoundTrip) {
  const PointCloud c = sample_poisson(1.0, Domain::box({-1, -2, 0}, {1, 2, 3}), 8);
  std::stringstream ss;
  write_cloud_binary(c, ss);
  EXPECT_EQ(ss.str().substr(0, 4), "PMLC");
  EXPECT_EQ(ss.str().size(), 4u + 2 + 2 + 1 + 1 + 8 + 48 + 8 + 8 * c.coords().size());
  EXPECT_EQ(read_cloud_binary(ss), c);
}

TEST(Io, SaveLoadDispatchOnExtension) {
  const auto dir = std::filesystem::temp_directory_path();
  const PointCloud c = sample_poisson(2.0, Domain::torus(2, 3.0), 1);
  for (const char* name : {"pml_io.csv", "pml_io.pmlc", "pml_io.bin"}) {
    const std::string path = (dir / name).string();
    save_cloud(c, path);
    EXPECT_EQ(load_cloud(path), c) << name;
    std::filesystem::remove(path);
  }
}

TEST(Io, RejectsMalformedClouds) {
  std::stringstream bad_header("x0,x1\n1,2\n");
  EXPECT_THROW(read_cloud_csv(bad_header), InvalidArgument);
  std::stringstream bad_row("# pml-cloud v1 kind=box dim=2 lower=0,0 upper=1,1\nx0,x1\n0.5\n");
  EXPECT_THROW(read_cloud_csv(bad_row), InvalidArgument);
  std::stringstream bad_magic("XXXX");
  EXPECT_THROW(read_cloud_binary(bad_magic), InvalidArgument);
  EXPECT_THROW(load_cloud("/nonexistent/cloud.csv"), InvalidArgument);
}

TEST(Io, MatchingCsvRoundTrip) {
  const Domain b = Domain::box({0, 0}, {2, 2});
  const PointCloud mu(b, {0.0, 0.0, 1.0, 1.0}), nu(b, {1.0, 0.0, 0.0, 1.0});
  Matching m;
  m.target = {1, 0};
  m.cost = 2.0;
  std::stringstream ss;
  write_matching_csv(m, mu, nu, 2.0, ss);
  EXPECT_EQ(ss.str(), "i,j,mass,cost_contrib\n0,1,1,1\n1,0,1,1\n");
  const Matching back = read_matching_csv(ss);
  EXPECT_EQ(back.target, m.target);
  const auto j = nlohmann::json::parse(matching_to_json(m));
  EXPECT_EQ(j["target"], nlohmann::json::array({1, 0}));
}

TEST(Io, PlanCsv) {
  const CostMatrix c(1, 2, {1.0, 4.0});
  TransportPlan plan;
  plan.entries = {{0, 0, 0.25}, {0, 1, 0.75}};
  plan.src_weights = {1.0};
  plan.dst_weights = {0.25, 0.75};
  plan.cost = 3.25;
  std::stringstream ss;
  write_plan_csv(plan, c, ss);
  EXPECT_EQ(ss.str(), "i,j,mass,cost_contrib\n0,0,0.25,0.25\n0,1,0.75,3\n");
  EXPECT_EQ(nlohmann::json::parse(plan_to_json(plan))["cost"].get<double>(), 3.25);
}
