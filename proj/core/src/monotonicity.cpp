#include "pml/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "pml/errors.hpp"
#include "pml/rng.hpp"

namespace pml {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kSaturated / a) return kSaturated;
  return a * b;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > kSaturated - b ? kSaturated : a + b;
}

void check_matching(const PointCloud& mu, const PointCloud& nu, const Matching& m,
                    const char* who) {
  if (!(mu.domain() == nu.domain())) {
    throw InvalidArgument(std::string(who) + ": clouds live in different domains");
  }
  if (m.size() != mu.size() || mu.size() != nu.size()) {
    throw InvalidArgument(std::string(who) + ": matching size differs from the clouds");
  }
  if (!m.is_permutation()) throw InvalidArgument(std::string(who) + ": matching is not a bijection");
}

// c(i, j) = cost of sending x_i to the partner of x_j.
class PairCost {
 public:
  PairCost(const PointCloud& mu, const PointCloud& nu, const Matching& m, double p)
      : mu_(mu), nu_(nu), m_(m), p_(p), n_(mu.size()) {
    if (n_ <= 4096) {
      table_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) table_[i * n_ + j] = compute(i, j);
      }
    }
  }

  double operator()(std::size_t i, std::size_t j) const {
    return table_.empty() ? compute(i, j) : table_[i * n_ + j];
  }

 private:
  double compute(std::size_t i, std::size_t j) const {
    return cost_from_squared(dist_squared(mu_.point(i), nu_.point(m_.target[j]), mu_.domain()), p_);
  }

  const PointCloud& mu_;
  const PointCloud& nu_;
  const Matching& m_;
  double p_;
  std::size_t n_;
  std::vector<double> table_;
};

class Auditor {
 public:
  Auditor(const PairCost& c, const AuditOptions& o, AuditResult& r) : c_(c), o_(o), r_(r) {}

  void evaluate(const std::vector<std::size_t>& cycle) {
    double original = 0.0, rerouted = 0.0;
    const std::size_t k = cycle.size();
    for (std::size_t j = 0; j < k; ++j) {
      original += c_(cycle[j], cycle[j]);
      rerouted += c_(cycle[j], cycle[(j + 1) % k]);
    }
    record(cycle, original, rerouted);
  }

  // All directed cycles of exactly length k whose smallest index comes first.
  void enumerate(std::size_t n, std::size_t k) {
    std::vector<std::size_t> path;
    std::vector<char> used(n, 0);
    path.reserve(k);
    for (std::size_t s = 0; s + k <= n; ++s) {
      path.assign(1, s);
      used[s] = 1;
      extend(n, k, path, used, c_(s, s), 0.0);
      used[s] = 0;
    }
  }

 private:
  void extend(std::size_t n, std::size_t k, std::vector<std::size_t>& path, std::vector<char>& used,
              double original, double partial) {
    const std::size_t last = path.back();
    if (path.size() == k) {
      record(path, original, partial + c_(last, path.front()));
      return;
    }
    for (std::size_t v = path.front() + 1; v < n; ++v) {
      if (used[v]) continue;
      used[v] = 1;
      path.push_back(v);
      extend(n, k, path, used, original + c_(v, v), partial + c_(last, v));
      path.pop_back();
      used[v] = 0;
    }
  }

  void record(const std::vector<std::size_t>& cycle, double original, double rerouted) {
    ++r_.cycles_checked;
    const double gap = original - rerouted;
    if (gap > 0.0 && gap > o_.tolerance * original) {
      ++r_.violation_count;
      if (r_.violations.size() < o_.max_reported) {
        r_.violations.push_back({cycle, original, rerouted, gap});
      }
    }
  }

  const PairCost& c_;
  const AuditOptions& o_;
  AuditResult& r_;
};

}  // namespace

std::uint64_t cycle_count(std::size_t n, std::size_t k) {
  if (k < 2 || k > n) return 0;
  // C(n, k) (k - 1)! = n (n-1) ... (n-k+1) / k
  std::uint64_t v = 1;
  bool divided = false;
  for (std::size_t i = 0; i < k; ++i) {
    std::uint64_t f = n - i;
    if (!divided && f % k == 0) {
      f /= k;
      divided = true;
    }
    v = sat_mul(v, f);
  }
  if (!divided) v = v == kSaturated ? v : v / k;
  return v;
}

double AuditResult::coverage() const noexcept {
  if (cycles_total == 0) return 1.0;
  if (exhaustive) return 1.0;
  return std::min(1.0, static_cast<double>(cycles_checked) / static_cast<double>(cycles_total));
}

std::string AuditResult::to_json() const {
  nlohmann::ordered_json j;
  j["clean"] = clean();
  j["exhaustive"] = exhaustive;
  j["cycles_checked"] = cycles_checked;
  j["cycles_total"] = cycles_total;
  j["coverage"] = coverage();
  j["violation_count"] = violation_count;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& v : violations) {
    arr.push_back({{"cycle", v.cycle}, {"original", v.original}, {"rerouted", v.rerouted},
                   {"gap", v.gap}});
  }
  j["violations"] = std::move(arr);
  return j.dump(2);
}

AuditResult check_cyclical_monotonicity(const PointCloud& mu, const PointCloud& nu,
                                        const Matching& matching, double p,
                                        std::size_t max_length, const AuditOptions& options) {
  check_matching(mu, nu, matching, "check_cyclical_monotonicity");
  if (max_length < 2) throw InvalidArgument("check_cyclical_monotonicity: cycle length must be >= 2");
  if (!(options.tolerance >= 0.0)) {
    throw InvalidArgument("check_cyclical_monotonicity: tolerance must be non-negative");
  }
  if (!(p >= 1.0)) throw InvalidArgument("check_cyclical_monotonicity: p must be >= 1");
  const std::size_t n = mu.size();
  const std::size_t kmax = std::min(max_length, n);

  AuditResult r;
  r.exhaustive = true;
  for (std::size_t k = 2; k <= kmax; ++k) r.cycles_total = sat_add(r.cycles_total, cycle_count(n, k));
  if (kmax < 2) return r;

  const PairCost cost(mu, nu, matching, p);
  Auditor audit(cost, options, r);

  // Short lengths are enumerated while they fit the budget; the remaining
  // lengths share the rest of it (at least half) by uniform sampling.
  std::uint64_t spent = 0;
  std::size_t k = 2;
  for (; k <= kmax; ++k) {
    const std::uint64_t c = cycle_count(n, k);
    if (sat_add(spent, c) > options.budget) break;
    audit.enumerate(n, k);
    spent += c;
  }
  if (k > kmax) return r;

  r.exhaustive = false;
  const std::uint64_t samples = std::max(options.budget - spent, options.budget / 2);
  const std::size_t lengths = kmax - k + 1;
  Rng rng(derive_seed(options.seed, "cycle-sampler"));
  std::vector<std::size_t> pool(n), cycle;
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::uint64_t s = 0; s < samples; ++s) {
    const std::size_t len = k + static_cast<std::size_t>(rng.below(lengths));
    // Partial Fisher-Yates: the first len entries are a uniform ordered draw.
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pool[i], pool[j]);
    }
    cycle.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len));
    audit.evaluate(cycle);
  }
  return r;
}

std::size_t count_matched_pairs(const PointCloud& mu, const PointCloud& nu,
                                const Matching& matching, const AnyRegion& u, const AnyRegion& v) {
  check_matching(mu, nu, matching, "count_matched_pairs");
  std::size_t count = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (region_contains(u, mu.point(i), mu.domain()) &&
        region_contains(v, nu.point(matching.target[i]), nu.domain())) {
      ++count;
    }
  }
  return count;
}

}  // namespace pml
