#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pml {

/// Primal network simplex for uncapacitated min-cost flow with integer costs
/// and supplies.  The spanning tree is kept strongly feasible, so degenerate
/// pivots cannot cycle.  Arcs may be appended after a solve; the current basis
/// stays feasible and `run()` continues from it, which is what column
/// generation needs.
class NetworkSimplex {
 public:
  using Cost = std::int64_t;
  using Flow = std::int64_t;

  enum class Status { Optimal, Infeasible };

  /// Supplies must sum to zero (positive = source).
  explicit NetworkSimplex(std::vector<Flow> supply);

  int node_count() const noexcept { return node_count_; }
  std::size_t arc_count() const noexcept { return src_.size() - art_offset_; }

  /// Add arc u -> v with the given non-negative cost; returns its index.
  std::size_t add_arc(int u, int v, Cost cost);

  Status run();

  Flow flow(std::size_t arc) const { return flow_[art_offset_ + arc]; }
  int arc_source(std::size_t arc) const { return src_[art_offset_ + arc]; }
  int arc_target(std::size_t arc) const { return tgt_[art_offset_ + arc]; }
  Cost arc_cost(std::size_t arc) const { return cost_[art_offset_ + arc]; }

  /// Node potentials; reduced cost of u -> v is cost + pi(u) - pi(v).
  Cost potential(int node) const { return pi_[node]; }
  Cost reduced_cost(int u, int v, Cost cost) const { return cost + pi_[u] - pi_[v]; }

  /// Largest cost the solver accepts for this node count without risking
  /// overflow in the potentials.
  static Cost max_cost_for(int node_count);

  std::uint64_t pivots() const noexcept { return pivots_; }

 private:
  bool find_entering();
  void pivot();
  void detach_child(int v);
  void attach_child(int parent, int v);
  void shift_potentials(int top, Cost sigma, bool complement);

  int node_count_;
  int root_;
  std::size_t art_offset_;
  Cost art_cost_ = 0;
  Cost max_cost_ = 0;

  // Arcs: [0, node_count_) are the artificial root arcs, the rest are real.
  std::vector<int> src_, tgt_;
  std::vector<Cost> cost_;
  std::vector<Flow> flow_;
  std::vector<std::uint8_t> in_tree_;

  // Spanning tree.
  std::vector<int> parent_, pred_, size_;
  std::vector<std::uint8_t> up_;  // pred arc points child -> parent
  std::vector<int> first_child_, next_sib_, prev_sib_;
  std::vector<Cost> pi_;

  std::size_t next_arc_ = 0;
  std::size_t entering_ = 0;
  std::uint64_t pivots_ = 0;
  std::vector<int> path_;
};

}  // namespace pml
