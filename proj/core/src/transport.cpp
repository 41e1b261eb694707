#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <queue>

#include "pml/errors.hpp"
#include "pml/network_simplex.hpp"
#include "pml/ot.hpp"
#include "transport_detail.hpp"

namespace pml {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries, double p)
    : rows_(rows), cols_(cols), entries_(std::move(entries)), p_(p) {
  if (entries_.size() != rows_ * cols_) throw InvalidArgument("cost matrix: wrong entry count");
  for (double c : entries_) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw InvalidArgument("cost matrix: entries must be finite and non-negative");
    }
  }
}

CostMatrix CostMatrix::from_clouds(const PointCloud& a, const PointCloud& b, double p) {
  if (!(a.domain() == b.domain())) throw InvalidArgument("cost matrix: clouds in different domains");
  if (!(p > 0.0)) throw InvalidArgument("cost matrix: p must be positive");
  std::vector<double> e(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      e[i * b.size() + j] = cost_from_squared(dist_squared(a.point(i), b.point(j), a.domain()), p);
    }
  }
  return CostMatrix(a.size(), b.size(), std::move(e), p);
}

double CostMatrix::max_entry() const noexcept {
  return entries_.empty() ? 0.0 : *std::max_element(entries_.begin(), entries_.end());
}

std::vector<std::size_t> Matching::inverse() const {
  std::vector<std::size_t> inv(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) inv.at(target[i]) = i;
  return inv;
}

bool Matching::is_permutation() const {
  std::vector<char> seen(target.size(), 0);
  for (std::size_t t : target) {
    if (t >= target.size() || seen[t]) return false;
    seen[t] = 1;
  }
  return true;
}

double TransportPlan::marginal_violation() const {
  std::vector<double> r(src_weights.size(), 0.0), c(dst_weights.size(), 0.0);
  for (const auto& e : entries) {
    r.at(e.src) += e.mass;
    c.at(e.dst) += e.mass;
  }
  const double total = std::accumulate(src_weights.begin(), src_weights.end(), 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::fabs(r[i] - src_weights[i]));
  for (std::size_t j = 0; j < c.size(); ++j) worst = std::max(worst, std::fabs(c[j] - dst_weights[j]));
  return total > 0.0 ? worst / total : worst;
}

double WeightedPoints::total_mass() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

WeightedPoints WeightedPoints::from_cloud(const PointCloud& cloud) {
  WeightedPoints w;
  w.dim = cloud.dim();
  w.coords.assign(cloud.coords().begin(), cloud.coords().end());
  w.weights.assign(cloud.size(), 1.0);
  return w;
}

double cost_rounding_budget(double total_mass, double max_cost, const ExactOptions& options) {
  // Each arc cost is off by at most half a unit; comparing the returned plan
  // with the true optimum loses at most twice that per unit of mass.
  return total_mass * max_cost / options.cost_resolution;
}

namespace detail {

namespace {

constexpr double kMassUnits = 4503599627370496.0;  // 2^52

std::vector<std::int64_t> largest_remainder(std::span<const double> w, double total) {
  std::vector<std::int64_t> out(w.size());
  std::vector<std::pair<double, std::size_t>> rem(w.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double scaled = w[i] / total * kMassUnits;
    const double fl = std::floor(scaled);
    out[i] = static_cast<std::int64_t>(fl);
    assigned += out[i];
    rem[i] = {scaled - fl, i};
  }
  auto missing = static_cast<std::int64_t>(kMassUnits) - assigned;
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t k = 0; missing > 0 && k < rem.size(); ++k, --missing) ++out[rem[k].second];
  return out;
}

bool all_integral(std::span<const double> w) {
  return std::all_of(w.begin(), w.end(),
                     [](double x) { return x == std::floor(x) && x < 1e15; });
}

}  // namespace

IntegerSupplies integerize(std::span<const double> src, std::span<const double> dst) {
  for (double x : src) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("transport: weights must be >= 0");
  }
  for (double x : dst) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("transport: weights must be >= 0");
  }
  const double ms = std::accumulate(src.begin(), src.end(), 0.0);
  const double md = std::accumulate(dst.begin(), dst.end(), 0.0);
  if (!(ms > 0.0) || std::fabs(ms - md) > 1e-9 * std::max(ms, md)) {
    throw InvalidArgument("transport: total masses differ beyond relative 1e-9");
  }
  IntegerSupplies s;
  if (all_integral(src) && all_integral(dst) && ms == md) {
    s.src.assign(src.begin(), src.end());
    s.dst.assign(dst.begin(), dst.end());
    s.unit = 1.0;
    return s;
  }
  s.src = largest_remainder(src, ms);
  s.dst = largest_remainder(dst, md);
  s.unit = ms / kMassUnits;
  return s;
}

namespace {

/// Uniform bucket grid over a point set, periodic on a torus.
class CellGrid {
 public:
  CellGrid(const WeightedPoints& pts, const Domain& metric, const WeightedPoints& other,
           double per_cell)
      : dim_(pts.dim), torus_(metric.is_torus()) {
    lo_.resize(dim_);
    width_.resize(dim_);
    ncell_.resize(dim_);
    std::vector<double> hi(dim_);
    if (torus_) {
      for (std::size_t a = 0; a < dim_; ++a) {
        lo_[a] = metric.lower(a);
        hi[a] = metric.upper(a);
      }
    } else {
      for (std::size_t a = 0; a < dim_; ++a) {
        lo_[a] = std::numeric_limits<double>::infinity();
        hi[a] = -std::numeric_limits<double>::infinity();
      }
      for (const WeightedPoints* w : {&pts, &other}) {
        for (std::size_t i = 0; i < w->size(); ++i) {
          for (std::size_t a = 0; a < dim_; ++a) {
            lo_[a] = std::min(lo_[a], w->coords[i * dim_ + a]);
            hi[a] = std::max(hi[a], w->coords[i * dim_ + a]);
          }
        }
      }
    }
    double vol = 1.0;
    for (std::size_t a = 0; a < dim_; ++a) vol *= std::max(hi[a] - lo_[a], 1e-12);
    const double cell = std::pow(vol * per_cell / static_cast<double>(pts.size()),
                                 1.0 / static_cast<double>(dim_));
    total_ = 1;
    for (std::size_t a = 0; a < dim_; ++a) {
      const double ext = std::max(hi[a] - lo_[a], 1e-12);
      ncell_[a] = std::clamp<long>(static_cast<long>(ext / cell), 1, 4096);
      width_[a] = torus_ ? ext / static_cast<double>(ncell_[a])
                         : ext * (1.0 + 1e-12) / static_cast<double>(ncell_[a]);
      total_ *= static_cast<std::size_t>(ncell_[a]);
    }
    min_width_ = *std::min_element(width_.begin(), width_.end());
    max_ring_ = 0;
    for (std::size_t a = 0; a < dim_; ++a) {
      max_ring_ = std::max(max_ring_, torus_ ? ncell_[a] / 2 + 1 : ncell_[a]);
    }

    std::vector<std::size_t> cell_of(pts.size());
    start_.assign(total_ + 1, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cell_of[i] = cell_index(pts.point(i));
      ++start_[cell_of[i] + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    items_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[cell_of[i]]++] = i;
    stamp_.assign(total_, 0);
  }

  std::vector<long> cell_coords(std::span<const double> x) const {
    std::vector<long> c(dim_);
    for (std::size_t a = 0; a < dim_; ++a) {
      long k = static_cast<long>(std::floor((x[a] - lo_[a]) / width_[a]));
      c[a] = std::clamp<long>(k, 0, ncell_[a] - 1);
    }
    return c;
  }

  std::size_t cell_index(std::span<const double> x) const {
    const auto c = cell_coords(x);
    std::size_t idx = 0;
    for (std::size_t a = 0; a < dim_; ++a) idx = idx * static_cast<std::size_t>(ncell_[a]) + c[a];
    return idx;
  }

  std::size_t cell_count() const noexcept { return total_; }
  std::span<const std::size_t> items(std::size_t cell) const {
    return {items_.data() + start_[cell], start_[cell + 1] - start_[cell]};
  }
  double min_width() const noexcept { return min_width_; }
  long max_ring() const noexcept { return max_ring_; }

  /// Visit every not-yet-visited cell at Chebyshev ring r around `center`.
  /// Call begin_query() once per query before the first ring.
  void begin_query() {
    if (++current_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      current_ = 1;
    }
  }

  template <class F>
  void ring(const std::vector<long>& center, long r, F&& visit) {
    off_.assign(dim_, -r);
    auto emit = [&] {
      std::size_t idx = 0;
      for (std::size_t a = 0; a < dim_; ++a) {
        long c = center[a] + off_[a];
        if (torus_) {
          c %= ncell_[a];
          if (c < 0) c += ncell_[a];
        } else if (c < 0 || c >= ncell_[a]) {
          return;
        }
        idx = idx * static_cast<std::size_t>(ncell_[a]) + static_cast<std::size_t>(c);
      }
      if (stamp_[idx] != current_) {
        stamp_[idx] = current_;
        visit(idx);
      }
    };
    if (r == 0) {
      emit();
      return;
    }
    const std::size_t last = dim_ - 1;
    while (true) {
      bool shell = false;
      for (std::size_t a = 0; a < last; ++a) shell |= (off_[a] == r || off_[a] == -r);
      if (shell) {
        for (long z = -r; z <= r; ++z) {
          off_[last] = z;
          emit();
        }
      } else {
        off_[last] = -r;
        emit();
        off_[last] = r;
        emit();
      }
      // Odometer over the leading axes.
      std::size_t a = last;
      while (true) {
        if (a == 0) return;
        --a;
        if (off_[a] < r) {
          ++off_[a];
          break;
        }
        off_[a] = -r;
      }
    }
  }

 private:
  std::size_t dim_;
  bool torus_;
  std::vector<double> lo_, width_;
  std::vector<long> ncell_;
  std::size_t total_ = 1;
  double min_width_ = 1.0;
  long max_ring_ = 1;
  std::vector<std::size_t> start_, items_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t current_ = 0;
  std::vector<long> off_;
};

struct CostModel {
  const Domain* metric;
  double p;
  double scale;
  NetworkSimplex::Cost max_cost;

  double real(std::span<const double> x, std::span<const double> y) const {
    return cost_from_squared(dist_squared(x, y, *metric), p);
  }
  NetworkSimplex::Cost integer(double c) const {
    return std::min<NetworkSimplex::Cost>(max_cost, std::llround(c * scale));
  }
  /// Integer lower bound for a cost at distance >= r.
  NetworkSimplex::Cost lower_bound(double r) const {
    if (r <= 0.0) return 0;
    return static_cast<NetworkSimplex::Cost>(std::floor(std::pow(r, p) * scale)) - 1;
  }
};

double max_possible_distance(const WeightedPoints& a, const WeightedPoints& b,
                             const Domain& metric) {
  if (metric.is_torus()) return metric.diameter();
  double s = 0.0;
  for (std::size_t ax = 0; ax < a.dim; ++ax) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const WeightedPoints* w : {&a, &b}) {
      for (std::size_t i = 0; i < w->size(); ++i) {
        lo = std::min(lo, w->coords[i * a.dim + ax]);
        hi = std::max(hi, w->coords[i * a.dim + ax]);
      }
    }
    s += (hi - lo) * (hi - lo);
  }
  return std::sqrt(s);
}

/// Nearest `k` points of the grid's set to x, by squared metric distance.
void k_nearest(CellGrid& grid, const WeightedPoints& pts, std::span<const double> x,
               const Domain& metric, std::size_t k, std::vector<std::size_t>& out) {
  std::priority_queue<std::pair<double, std::size_t>> heap;
  grid.begin_query();
  const auto center = grid.cell_coords(x);
  for (long r = 0; r <= grid.max_ring(); ++r) {
    if (heap.size() == k) {
      const double lb = static_cast<double>(r - 1) * grid.min_width();
      if (lb > 0.0 && lb * lb > heap.top().first) break;
    }
    grid.ring(center, r, [&](std::size_t cell) {
      for (std::size_t j : grid.items(cell)) {
        const double d2 = dist_squared(x, pts.point(j), metric);
        if (heap.size() < k) {
          heap.emplace(d2, j);
        } else if (d2 < heap.top().first) {
          heap.pop();
          heap.emplace(d2, j);
        }
      }
    });
  }
  out.clear();
  while (!heap.empty()) {
    out.push_back(heap.top().second);
    heap.pop();
  }
}

TransportPlan extract_plan(const NetworkSimplex& ns, std::size_t ns_src,
                           std::span<const std::int64_t> src_supply,
                           std::span<const std::int64_t> dst_supply, double unit,
                           const std::vector<double>& real_costs) {
  TransportPlan plan;
  plan.src_weights.resize(src_supply.size());
  plan.dst_weights.resize(dst_supply.size());
  for (std::size_t i = 0; i < src_supply.size(); ++i) {
    plan.src_weights[i] = static_cast<double>(src_supply[i]) * unit;
  }
  for (std::size_t j = 0; j < dst_supply.size(); ++j) {
    plan.dst_weights[j] = static_cast<double>(dst_supply[j]) * unit;
  }
  double cost = 0.0;
  for (std::size_t a = 0; a < ns.arc_count(); ++a) {
    const auto f = ns.flow(a);
    if (f <= 0) continue;
    const double m = static_cast<double>(f) * unit;
    plan.entries.push_back({static_cast<std::size_t>(ns.arc_source(a)),
                            static_cast<std::size_t>(ns.arc_target(a)) - ns_src, m});
    cost += m * real_costs[a];
  }
  std::sort(plan.entries.begin(), plan.entries.end(), [](const PlanEntry& x, const PlanEntry& y) {
    return x.src != y.src ? x.src < y.src : x.dst < y.dst;
  });
  plan.cost = cost;
  return plan;
}

std::vector<NetworkSimplex::Flow> node_supplies(std::span<const std::int64_t> s,
                                                std::span<const std::int64_t> d) {
  std::vector<NetworkSimplex::Flow> supply(s.size() + d.size());
  for (std::size_t i = 0; i < s.size(); ++i) supply[i] = s[i];
  for (std::size_t j = 0; j < d.size(); ++j) supply[s.size() + j] = -d[j];
  return supply;
}

}  // namespace

TransportPlan solve_geometric_integer(const WeightedPoints& src, const WeightedPoints& dst,
                                      std::span<const std::int64_t> src_supply,
                                      std::span<const std::int64_t> dst_supply, double unit,
                                      const Domain& metric, double p,
                                      const ExactOptions& options) {
  if (src.dim != metric.dim() || dst.dim != metric.dim()) {
    throw InvalidArgument("transport: dimension mismatch");
  }
  if (src.size() == 0 || dst.size() == 0) throw InvalidArgument("transport: empty measure");
  if (!(p > 0.0)) throw InvalidArgument("transport: p must be positive");
  const std::size_t n1 = src.size(), n2 = dst.size();
  const int nodes = static_cast<int>(n1 + n2);

  const double cmax = std::pow(max_possible_distance(src, dst, metric), p);
  const auto max_cost = NetworkSimplex::max_cost_for(nodes);
  const double target = std::min(options.cost_resolution, static_cast<double>(max_cost));
  const CostModel model{&metric, p, cmax > 0.0 ? target / cmax : 1.0, max_cost};

  NetworkSimplex ns(node_supplies(src_supply, dst_supply));
  std::vector<double> real_costs;

  auto add = [&](std::size_t i, std::size_t j) {
    const double c = model.real(src.point(i), dst.point(j));
    real_costs.push_back(c);
    ns.add_arc(static_cast<int>(i), static_cast<int>(n1 + j), model.integer(c));
  };

  if (n1 * n2 <= options.dense_arc_limit) {
    for (std::size_t i = 0; i < n1; ++i) {
      if (src_supply[i] == 0) continue;
      for (std::size_t j = 0; j < n2; ++j) {
        if (dst_supply[j] != 0) add(i, j);
      }
    }
    if (ns.run() != NetworkSimplex::Status::Optimal) {
      throw DegenerateInput("transport: no feasible plan");
    }
    return extract_plan(ns, n1, src_supply, dst_supply, unit, real_costs);
  }

  // Sparse candidate graph: nearest neighbours in both directions, scaled by
  // the size ratio so that every point can spread its mass locally.
  CellGrid dst_grid(dst, metric, src, 2.0);
  CellGrid src_grid(src, metric, dst, 2.0);
  const double ratio = static_cast<double>(n2) / static_cast<double>(n1);
  const std::size_t k_src = std::min<std::size_t>(
      n2, static_cast<std::size_t>(std::ceil(options.candidates * std::max(1.0, ratio))));
  const std::size_t k_dst = std::min<std::size_t>(
      n1, static_cast<std::size_t>(std::ceil(options.candidates * std::max(1.0, 1.0 / ratio))));

  std::vector<std::pair<std::uint32_t, std::uint32_t>> cand;
  std::vector<std::size_t> nn;
  for (std::size_t i = 0; i < n1; ++i) {
    k_nearest(dst_grid, dst, src.point(i), metric, k_src, nn);
    for (std::size_t j : nn) cand.emplace_back(i, j);
  }
  for (std::size_t j = 0; j < n2; ++j) {
    k_nearest(src_grid, src, dst.point(j), metric, k_dst, nn);
    for (std::size_t i : nn) cand.emplace_back(i, j);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  for (const auto& [i, j] : cand) add(i, j);
  cand.clear();
  cand.shrink_to_fit();

  std::vector<std::pair<NetworkSimplex::Cost, std::size_t>> best;
  while (true) {
    ns.run();
    // Price the complete bipartite graph: per-cell maximum potentials bound
    // the reduced costs that can still be negative.
    std::vector<NetworkSimplex::Cost> cell_max(dst_grid.cell_count(),
                                               std::numeric_limits<NetworkSimplex::Cost>::min());
    NetworkSimplex::Cost global_max = std::numeric_limits<NetworkSimplex::Cost>::min();
    for (std::size_t c = 0; c < dst_grid.cell_count(); ++c) {
      for (std::size_t j : dst_grid.items(c)) {
        cell_max[c] = std::max(cell_max[c], ns.potential(static_cast<int>(n1 + j)));
      }
      global_max = std::max(global_max, cell_max[c]);
    }
    std::size_t added = 0;
    for (std::size_t i = 0; i < n1; ++i) {
      const auto pi_i = ns.potential(static_cast<int>(i));
      const auto reach = global_max - pi_i;
      if (reach <= 0) continue;
      best.clear();
      dst_grid.begin_query();
      const auto center = dst_grid.cell_coords(src.point(i));
      for (long r = 0; r <= dst_grid.max_ring(); ++r) {
        const auto lb = model.lower_bound(static_cast<double>(r - 1) * dst_grid.min_width());
        if (lb >= reach) break;
        dst_grid.ring(center, r, [&](std::size_t cell) {
          if (cell_max[cell] - pi_i <= lb) return;
          for (std::size_t j : dst_grid.items(cell)) {
            const auto gap = ns.potential(static_cast<int>(n1 + j)) - pi_i;
            if (gap <= 0) continue;
            const auto ic = model.integer(model.real(src.point(i), dst.point(j)));
            const auto rc = ic - gap;
            if (rc < 0) best.emplace_back(rc, j);
          }
        });
      }
      if (best.empty()) continue;
      const std::size_t keep = std::min(best.size(), std::max<std::size_t>(1, options.pricing_batch));
      std::partial_sort(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(keep), best.end());
      for (std::size_t k = 0; k < keep; ++k) add(i, best[k].second);
      added += keep;
    }
    if (added == 0) break;
  }
  TransportPlan plan = extract_plan(ns, n1, src_supply, dst_supply, unit, real_costs);
  const double total = std::accumulate(plan.src_weights.begin(), plan.src_weights.end(), 0.0);
  double moved = 0.0;
  for (const auto& e : plan.entries) moved += e.mass;
  if (std::fabs(moved - total) > 1e-9 * total) throw DegenerateInput("transport: no feasible plan");
  return plan;
}

}  // namespace detail

TransportPlan solve_transport(std::span<const double> src_weights,
                              std::span<const double> dst_weights, const CostMatrix& cost,
                              const ExactOptions& options) {
  if (cost.rows() != src_weights.size() || cost.cols() != dst_weights.size()) {
    throw InvalidArgument("solve_transport: weights do not match the cost matrix shape");
  }
  if (cost.rows() == 0 || cost.cols() == 0) throw InvalidArgument("solve_transport: empty input");
  const auto sup = detail::integerize(src_weights, dst_weights);
  const std::size_t n1 = cost.rows(), n2 = cost.cols();
  const int nodes = static_cast<int>(n1 + n2);
  const auto max_cost = NetworkSimplex::max_cost_for(nodes);
  const double cmax = cost.max_entry();
  const double target = std::min(options.cost_resolution, static_cast<double>(max_cost));
  const double scale = cmax > 0.0 ? target / cmax : 1.0;

  NetworkSimplex ns(detail::node_supplies(sup.src, sup.dst));
  std::vector<double> real_costs;
  real_costs.reserve(n1 * n2);
  for (std::size_t i = 0; i < n1; ++i) {
    if (sup.src[i] == 0) continue;
    for (std::size_t j = 0; j < n2; ++j) {
      if (sup.dst[j] == 0) continue;
      real_costs.push_back(cost(i, j));
      ns.add_arc(static_cast<int>(i), static_cast<int>(n1 + j),
                 std::min<NetworkSimplex::Cost>(max_cost, std::llround(cost(i, j) * scale)));
    }
  }
  if (ns.run() != NetworkSimplex::Status::Optimal) {
    throw DegenerateInput("solve_transport: no feasible plan");
  }
  TransportPlan plan = detail::extract_plan(ns, n1, sup.src, sup.dst, sup.unit, real_costs);
  plan.src_weights.assign(src_weights.begin(), src_weights.end());
  plan.dst_weights.assign(dst_weights.begin(), dst_weights.end());
  return plan;
}

TransportPlan solve_transport_geometric(const WeightedPoints& src, const WeightedPoints& dst,
                                        const Domain& metric, double p,
                                        const ExactOptions& options) {
  if (src.weights.size() * src.dim != src.coords.size() ||
      dst.weights.size() * dst.dim != dst.coords.size()) {
    throw InvalidArgument("transport: coordinates and weights disagree");
  }
  const auto sup = detail::integerize(src.weights, dst.weights);
  TransportPlan plan =
      detail::solve_geometric_integer(src, dst, sup.src, sup.dst, sup.unit, metric, p, options);
  plan.src_weights = src.weights;
  plan.dst_weights = dst.weights;
  return plan;
}

}  // namespace pml
