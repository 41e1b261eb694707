#include "pml/network_simplex.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pml/errors.hpp"

namespace pml {

namespace {
constexpr NetworkSimplex::Flow kInfFlow = std::numeric_limits<NetworkSimplex::Flow>::max();
}

NetworkSimplex::Cost NetworkSimplex::max_cost_for(int node_count) {
  // Artificial cost (C + 1)(n + 1) <= 2^59 keeps every potential within
  // 2^60 of the root's, leaving headroom for reduced-cost sums.
  return static_cast<Cost>((Cost{1} << 59) / (static_cast<Cost>(node_count) + 2)) - 1;
}

NetworkSimplex::NetworkSimplex(std::vector<Flow> supply)
    : node_count_(static_cast<int>(supply.size())),
      root_(static_cast<int>(supply.size())),
      art_offset_(supply.size()) {
  if (std::accumulate(supply.begin(), supply.end(), Flow{0}) != 0) {
    throw InvalidArgument("network simplex: supplies must sum to zero");
  }
  max_cost_ = max_cost_for(node_count_);
  art_cost_ = (max_cost_ + 1) * (static_cast<Cost>(node_count_) + 1);

  const std::size_t n = supply.size();
  src_.resize(n);
  tgt_.resize(n);
  cost_.resize(n);
  flow_.resize(n);
  in_tree_.assign(n, 1);

  parent_.resize(n + 1);
  pred_.resize(n + 1);
  size_.assign(n + 1, 1);
  up_.resize(n + 1);
  first_child_.assign(n + 1, -1);
  next_sib_.assign(n + 1, -1);
  prev_sib_.assign(n + 1, -1);
  pi_.assign(n + 1, 0);

  parent_[root_] = -1;
  pred_[root_] = -1;
  size_[root_] = static_cast<int>(n) + 1;
  for (int u = node_count_ - 1; u >= 0; --u) {
    parent_[u] = root_;
    pred_[u] = u;
    if (supply[u] >= 0) {
      src_[u] = u;
      tgt_[u] = root_;
      cost_[u] = 0;
      flow_[u] = supply[u];
      up_[u] = 1;
      pi_[u] = 0;
    } else {
      src_[u] = root_;
      tgt_[u] = u;
      cost_[u] = art_cost_;
      flow_[u] = -supply[u];
      up_[u] = 0;
      pi_[u] = art_cost_;
    }
    attach_child(root_, u);
  }
}

std::size_t NetworkSimplex::add_arc(int u, int v, Cost cost) {
  if (u < 0 || v < 0 || u >= node_count_ || v >= node_count_) {
    throw InvalidArgument("network simplex: arc endpoint out of range");
  }
  if (cost < 0 || cost > max_cost_) {
    throw InvalidArgument("network simplex: arc cost outside [0, max_cost_for(n)]");
  }
  src_.push_back(u);
  tgt_.push_back(v);
  cost_.push_back(cost);
  flow_.push_back(0);
  in_tree_.push_back(0);
  return src_.size() - 1 - art_offset_;
}

void NetworkSimplex::detach_child(int v) {
  const int p = parent_[v];
  if (prev_sib_[v] >= 0) {
    next_sib_[prev_sib_[v]] = next_sib_[v];
  } else {
    first_child_[p] = next_sib_[v];
  }
  if (next_sib_[v] >= 0) prev_sib_[next_sib_[v]] = prev_sib_[v];
  next_sib_[v] = prev_sib_[v] = -1;
}

void NetworkSimplex::attach_child(int p, int v) {
  next_sib_[v] = first_child_[p];
  prev_sib_[v] = -1;
  if (first_child_[p] >= 0) prev_sib_[first_child_[p]] = v;
  first_child_[p] = v;
}

bool NetworkSimplex::find_entering() {
  // Block search pivot rule.
  const std::size_t m = src_.size() - art_offset_;
  if (m == 0) return false;
  const std::size_t block =
      std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(m))));
  Cost best = 0;
  std::size_t best_arc = 0;
  std::size_t e = next_arc_ < m ? next_arc_ : 0;
  std::size_t left = block;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t a = art_offset_ + e;
    if (!in_tree_[a]) {
      const Cost rc = cost_[a] + pi_[src_[a]] - pi_[tgt_[a]];
      if (rc < best) {
        best = rc;
        best_arc = a;
      }
    }
    if (++e == m) e = 0;
    if (--left == 0) {
      if (best < 0) break;
      left = block;
    }
  }
  if (best >= 0) return false;
  entering_ = best_arc;
  next_arc_ = e;
  return true;
}

void NetworkSimplex::shift_potentials(int top, Cost sigma, bool complement) {
  // Preorder walk over the subtree of `top`, or over everything else.
  const int start = complement ? root_ : top;
  int w = start;
  while (true) {
    const bool skip = complement && w == top;
    if (!skip) pi_[w] += sigma;
    if (!skip && first_child_[w] >= 0) {
      w = first_child_[w];
      continue;
    }
    while (w != start && next_sib_[w] < 0) w = parent_[w];
    if (w == start) break;
    w = next_sib_[w];
  }
}

void NetworkSimplex::pivot() {
  const std::size_t in_arc = entering_;
  const int first = src_[in_arc];
  const int second = tgt_[in_arc];

  // An ancestor always has a strictly larger subtree.
  int u = first, v = second;
  while (u != v) {
    if (size_[u] < size_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  const int join = u;

  // Leaving arc: the last blocking arc met when walking the cycle in its
  // orientation starting from the join, which keeps the tree strongly feasible.
  Flow delta = kInfFlow;
  int u_out = -1;
  int side = 0;
  for (int w = first; w != join; w = parent_[w]) {
    if (up_[w] && flow_[pred_[w]] < delta) {
      delta = flow_[pred_[w]];
      u_out = w;
      side = 1;
    }
  }
  for (int w = second; w != join; w = parent_[w]) {
    if (!up_[w] && flow_[pred_[w]] <= delta) {
      delta = flow_[pred_[w]];
      u_out = w;
      side = 2;
    }
  }
  if (side == 0) throw std::logic_error("network simplex: unbounded cycle");

  if (delta > 0) {
    flow_[in_arc] += delta;
    for (int w = first; w != join; w = parent_[w]) flow_[pred_[w]] += up_[w] ? -delta : delta;
    for (int w = second; w != join; w = parent_[w]) flow_[pred_[w]] += up_[w] ? delta : -delta;
  }

  const int u_in = side == 1 ? first : second;
  const int v_in = side == 1 ? second : first;
  const int leaving = pred_[u_out];
  const int moved = size_[u_out];

  // The moved subtree stays below the join: only the two cycle paths change size.
  for (int w = parent_[u_out]; w != join; w = parent_[w]) size_[w] -= moved;
  for (int w = v_in; w != join; w = parent_[w]) size_[w] += moved;

  path_.clear();
  for (int w = u_in;; w = parent_[w]) {
    path_.push_back(w);
    if (w == u_out) break;
  }
  for (int w : path_) detach_child(w);
  // Reverse the path u_in .. u_out; old sizes are increasing along it.
  for (std::size_t i = path_.size() - 1; i >= 1; --i) {
    const int w = path_[i];
    const int c = path_[i - 1];
    pred_[w] = pred_[c];
    up_[w] = !up_[c];
    parent_[w] = c;
  }
  for (std::size_t i = path_.size() - 1; i >= 1; --i) size_[path_[i]] = moved - size_[path_[i - 1]];
  size_[u_in] = moved;
  pred_[u_in] = static_cast<int>(in_arc);
  up_[u_in] = src_[in_arc] == u_in;
  parent_[u_in] = v_in;
  for (int w : path_) attach_child(parent_[w], w);
  in_tree_[leaving] = 0;
  in_tree_[in_arc] = 1;

  const Cost sigma = pi_[v_in] - pi_[u_in] - (up_[u_in] ? cost_[in_arc] : -cost_[in_arc]);
  if (sigma != 0) {
    if (2 * moved <= size_[root_]) {
      shift_potentials(u_in, sigma, false);
    } else {
      shift_potentials(u_in, -sigma, true);
      if (pi_[root_] > (Cost{1} << 58) || pi_[root_] < -(Cost{1} << 58)) {
        const Cost base = pi_[root_];
        for (Cost& x : pi_) x -= base;
      }
    }
  }
  ++pivots_;
}

NetworkSimplex::Status NetworkSimplex::run() {
  while (find_entering()) pivot();
  for (int u = 0; u < node_count_; ++u) {
    if (flow_[u] > 0) return Status::Infeasible;
  }
  return Status::Optimal;
}

}  // namespace pml
