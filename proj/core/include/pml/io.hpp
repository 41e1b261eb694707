#pragma once

#include <iosfwd>
#include <string>

#include "pml/geometry.hpp"
#include "pml/ot.hpp"

namespace pml {

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

// Point clouds.  The CSV form starts with a "# pml-cloud" comment carrying
// the domain and seed, then a header x0,...,x{d-1} and one point per row.
// The binary form is "PMLC" (magic), u16 version, u16 dim, u8 kind, u8 has_seed,
// u64 seed, f64 lower[d], f64 upper[d], u64 count, f64 coordinates; all
// little-endian.
void write_cloud_csv(const PointCloud& cloud, std::ostream& out);
PointCloud read_cloud_csv(std::istream& in);
void write_cloud_binary(const PointCloud& cloud, std::ostream& out);
PointCloud read_cloud_binary(std::istream& in);

/// Dispatch on the extension: ".bin" or ".pmlc" is binary, anything else CSV.
void save_cloud(const PointCloud& cloud, const std::string& path);
PointCloud load_cloud(const std::string& path);

/// Matching rows i,j,mass,cost_contrib with unit masses.
void write_matching_csv(const Matching& m, const PointCloud& mu, const PointCloud& nu, double p,
                        std::ostream& out);
/// Reads the i,j columns of a matching CSV (further columns are ignored).
Matching read_matching_csv(std::istream& in);
std::string matching_to_json(const Matching& m);

/// Plan rows i,j,mass,cost_contrib with cost_contrib = mass * c(i, j).
void write_plan_csv(const TransportPlan& plan, const CostMatrix& cost, std::ostream& out);
std::string plan_to_json(const TransportPlan& plan);

}  // namespace pml
