#pragma once

#include <cstdint>
#include <span>

#include "pml/ot.hpp"

namespace pml::detail {

/// Exact geometric transport with integer supplies; the plan masses are
/// flow * unit.  Supplies on both sides must have equal sums.
TransportPlan solve_geometric_integer(const WeightedPoints& src, const WeightedPoints& dst,
                                      std::span<const std::int64_t> src_supply,
                                      std::span<const std::int64_t> dst_supply, double unit,
                                      const Domain& metric, double p,
                                      const ExactOptions& options);

/// Integer supplies approximating the weights: exact when all weights are
/// integers, otherwise 2^52 units per side by largest remainder.
struct IntegerSupplies {
  std::vector<std::int64_t> src;
  std::vector<std::int64_t> dst;
  double unit = 1.0;
};
IntegerSupplies integerize(std::span<const double> src, std::span<const double> dst);

}  // namespace pml::detail
