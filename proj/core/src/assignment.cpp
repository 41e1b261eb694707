#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pml/errors.hpp"
#include "pml/ot.hpp"
#include "transport_detail.hpp"

namespace pml {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct HungarianResult {
  std::vector<std::size_t> row_to_col;
  std::vector<double> u, v;  // duals: cost(i, j) - u[i] - v[j] >= 0
};

// Shortest augmenting path Hungarian method, O(n^3).
HungarianResult hungarian(const CostMatrix& c) {
  const std::size_t n = c.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      const auto row = c.row(i0 - 1);
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  HungarianResult r;
  r.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) r.row_to_col[p[j] - 1] = j - 1;
  r.u.assign(u.begin() + 1, u.end());
  r.v.assign(v.begin() + 1, v.end());
  return r;
}

double permutation_cost(const CostMatrix& c, const std::vector<std::size_t>& perm) {
  double s = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) s += c(i, perm[i]);
  return s;
}

// Among perfect matchings of the tight (zero reduced cost) graph, which are
// exactly the minimizers, pick the lexicographically smallest by fixing rows
// in order and moving each to its smallest feasible column along an
// alternating cycle.
std::vector<std::size_t> lex_smallest(const CostMatrix& c, const HungarianResult& h) {
  const std::size_t n = c.rows();
  double scale = 0.0;
  for (double x : c.entries()) scale = std::max(scale, std::fabs(x));
  const double tol = 1e-11 * std::max(scale, 1e-300) * static_cast<double>(n);

  std::vector<std::vector<std::size_t>> tight(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (c(i, j) - h.u[i] - h.v[j] <= tol) tight[i].push_back(j);
    }
  }
  std::vector<std::size_t> row_to_col = h.row_to_col, col_to_row(n);
  for (std::size_t i = 0; i < n; ++i) col_to_row[row_to_col[i]] = i;

  std::vector<std::size_t> prev_row(n);
  std::vector<char> seen(n);
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t freed = row_to_col[i];
    for (std::size_t j : tight[i]) {
      if (j >= freed) break;
      // Reassign i -> j.  The row holding j must reach the freed column
      // through rows that are not yet fixed.
      const std::size_t start = col_to_row[j];
      if (start < i) continue;
      std::fill(seen.begin(), seen.end(), 0);
      queue.assign(1, start);
      seen[start] = 1;
      prev_row[start] = kNone;
      std::size_t end_row = kNone;
      for (std::size_t q = 0; q < queue.size() && end_row == kNone; ++q) {
        const std::size_t r = queue[q];
        for (std::size_t col : tight[r]) {
          if (col == row_to_col[r] || col == j) continue;
          if (col == freed) {
            end_row = r;
            break;
          }
          const std::size_t nr = col_to_row[col];
          if (nr <= i || seen[nr]) continue;
          seen[nr] = 1;
          prev_row[nr] = r;
          queue.push_back(nr);
        }
      }
      if (end_row == kNone) continue;
      // Shift along the path: end_row takes `freed`, each predecessor's
      // column moves to its successor... walking back towards start.
      std::size_t r = end_row;
      std::size_t next_col = freed;
      while (r != kNone) {
        const std::size_t old = row_to_col[r];
        row_to_col[r] = next_col;
        col_to_row[next_col] = r;
        next_col = old;
        r = prev_row[r];
      }
      row_to_col[i] = j;
      col_to_row[j] = i;
      break;
    }
  }
  return row_to_col;
}

}  // namespace

Matching solve_assignment(const CostMatrix& cost) {
  if (cost.rows() != cost.cols()) throw InvalidArgument("solve_assignment: matrix is not square");
  if (cost.rows() == 0) throw InvalidArgument("solve_assignment: empty matrix");
  const HungarianResult h = hungarian(cost);
  Matching m;
  m.target = lex_smallest(cost, h);
  m.cost = permutation_cost(cost, m.target);
  const double base = permutation_cost(cost, h.row_to_col);
  if (m.cost > base) {
    // The tie tolerance admitted a non-minimizer; keep the exact optimum.
    m.target = h.row_to_col;
    m.cost = base;
  }
  return m;
}

Matching solve_assignment_geometric(const PointCloud& a, const PointCloud& b, double p,
                                    const ExactOptions& options) {
  if (!(a.domain() == b.domain())) throw InvalidArgument("assignment: clouds in different domains");
  if (a.size() != b.size()) throw InvalidArgument("assignment: clouds differ in size");
  if (a.empty()) throw InvalidArgument("assignment: empty clouds");
  if (a.size() <= 600) return solve_assignment(CostMatrix::from_clouds(a, b, p));

  const auto wa = WeightedPoints::from_cloud(a);
  const auto wb = WeightedPoints::from_cloud(b);
  const std::vector<std::int64_t> ones(a.size(), 1);
  const TransportPlan plan =
      detail::solve_geometric_integer(wa, wb, ones, ones, 1.0, a.domain(), p, options);
  Matching m;
  m.target.assign(a.size(), kNone);
  for (const auto& e : plan.entries) m.target[e.src] = e.dst;
  if (!m.is_permutation()) throw std::logic_error("assignment: non-integral plan");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += cost_from_squared(dist_squared(a.point(i), b.point(m.target[i]), a.domain()), p);
  }
  m.cost = s;
  return m;
}

double wasserstein_p(const WeightedPoints& a, const WeightedPoints& b, double p,
                     const Domain& metric, const ExactOptions& options) {
  const bool unit = a.size() == b.size() &&
                    std::all_of(a.weights.begin(), a.weights.end(), [](double w) { return w == 1.0; }) &&
                    std::all_of(b.weights.begin(), b.weights.end(), [](double w) { return w == 1.0; });
  if (unit && a.size() > 0) {
    if (metric.is_torus()) {
      return solve_assignment_geometric(PointCloud(metric, a.coords), PointCloud(metric, b.coords),
                                        p, options)
          .cost;
    }
    if (a.size() <= 600) {
      std::vector<double> e(a.size() * b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
          e[i * b.size() + j] = cost_from_squared(dist_squared(a.point(i), b.point(j), metric), p);
        }
      }
      return solve_assignment(CostMatrix(a.size(), b.size(), std::move(e), p)).cost;
    }
  }
  return solve_transport_geometric(a, b, metric, p, options).cost;
}

double wasserstein_p(const PointCloud& a, const PointCloud& b, double p,
                     const ExactOptions& options) {
  if (!(a.domain() == b.domain())) throw InvalidArgument("wasserstein_p: clouds in different domains");
  if (a.size() != b.size()) throw InvalidArgument("wasserstein_p: unit clouds need equal counts");
  if (a.empty()) return 0.0;
  return solve_assignment_geometric(a, b, p, options).cost;
}

}  // namespace pml
