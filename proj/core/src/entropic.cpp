#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pml/errors.hpp"
#include "pml/ot.hpp"

namespace pml {

namespace {

double log_sum_exp(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) m = std::max(m, v[k]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k] - m);
  return m + std::log(s);
}

}  // namespace

EntropicResult entropic_transport(std::span<const double> src_weights,
                                  std::span<const double> dst_weights, const CostMatrix& cost,
                                  const EntropicOptions& options) {
  const std::size_t n = cost.rows(), m = cost.cols();
  if (src_weights.size() != n || dst_weights.size() != m) {
    throw InvalidArgument("entropic_transport: weights do not match the cost matrix shape");
  }
  if (!(options.epsilon > 0.0)) throw InvalidArgument("entropic_transport: epsilon must be positive");
  if (!(options.scaling > 0.0 && options.scaling < 1.0)) {
    throw InvalidArgument("entropic_transport: scaling factor must lie in (0, 1)");
  }
  const double ms = std::accumulate(src_weights.begin(), src_weights.end(), 0.0);
  const double md = std::accumulate(dst_weights.begin(), dst_weights.end(), 0.0);
  if (!(ms > 0.0) || std::fabs(ms - md) > 1e-9 * std::max(ms, md)) {
    throw InvalidArgument("entropic_transport: total masses differ beyond relative 1e-9");
  }

  std::vector<double> loga(n), logb(m);
  for (std::size_t i = 0; i < n; ++i) {
    loga[i] = src_weights[i] > 0.0 ? std::log(src_weights[i]) : -std::numeric_limits<double>::infinity();
  }
  for (std::size_t j = 0; j < m; ++j) {
    logb[j] = dst_weights[j] > 0.0 ? std::log(dst_weights[j]) : -std::numeric_limits<double>::infinity();
  }

  std::vector<double> f(n, 0.0), g(m, 0.0), buf(std::max(n, m));
  const auto c = cost.entries();

  auto row_violation = [&](double eps) {
    // L1 distance between the row sums of the current plan and the source weights.
    double viol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += std::exp((f[i] + g[j] - c[i * m + j]) / eps);
      viol += std::fabs(s - src_weights[i]);
    }
    return viol / ms;
  };

  auto log_iteration = [&](double eps) {
    // g-update makes the columns exact, so the rows carry the violation.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) buf[j] = (g[j] - c[i * m + j]) / eps;
      f[i] = std::isfinite(loga[i]) ? eps * (loga[i] - log_sum_exp(buf.data(), m)) : loga[i];
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = (f[i] - c[i * m + j]) / eps;
      g[j] = std::isfinite(logb[j]) ? eps * (logb[j] - log_sum_exp(buf.data(), n)) : logb[j];
    }
  };

  // Scaling iterations on the kernel exp((f + g - c) / eps), with the scalings
  // folded back into f, g once they leave [e^-absorb, e^absorb].
  constexpr double absorb = 30.0;
  std::vector<double> kernel(n * m), u(n), v(m), ku(m);
  auto build_kernel = [&](double eps) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        kernel[i * m + j] = std::exp((f[i] + g[j] - c[i * m + j]) / eps);
      }
    }
    std::fill(u.begin(), u.end(), 1.0);
    std::fill(v.begin(), v.end(), 1.0);
  };
  auto fold = [&](double eps) {
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isfinite(f[i])) f[i] += eps * std::log(u[i]);
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (std::isfinite(g[j])) g[j] += eps * std::log(v[j]);
    }
  };
  // One scaling iteration; false when a kernel sum degenerates.
  auto kernel_iteration = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &kernel[i * m];
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += row[j] * v[j];
      if (src_weights[i] > 0.0) {
        if (!(s > 0.0) || !std::isfinite(s)) return false;
        u[i] = src_weights[i] / s;
      } else {
        u[i] = 1.0;
      }
    }
    std::fill(ku.begin(), ku.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &kernel[i * m];
      const double ui = u[i];
      for (std::size_t j = 0; j < m; ++j) ku[j] += row[j] * ui;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (dst_weights[j] > 0.0) {
        if (!(ku[j] > 0.0) || !std::isfinite(ku[j])) return false;
        v[j] = dst_weights[j] / ku[j];
      } else {
        v[j] = 1.0;
      }
    }
    return true;
  };
  auto kernel_violation = [&]() {
    double viol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &kernel[i * m];
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += row[j] * v[j];
      viol += std::fabs(u[i] * s - src_weights[i]);
    }
    return viol / ms;
  };
  auto out_of_range = [&]() {
    const double lo = std::exp(-absorb), hi = std::exp(absorb);
    for (double x : u) {
      if (x < lo || x > hi) return true;
    }
    for (double x : v) {
      if (x < lo || x > hi) return true;
    }
    return false;
  };

  double eps = std::max(cost.max_entry(), options.epsilon);
  int iterations = 0;
  double violation = std::numeric_limits<double>::infinity();
  while (true) {
    const bool final_stage = eps <= options.epsilon;
    const double stage_tol = final_stage ? options.tolerance : std::max(options.tolerance, 1e-3);
    log_iteration(eps);
    ++iterations;
    build_kernel(eps);
    for (int it = 0; iterations < options.max_iterations; ++it) {
      if (!kernel_iteration()) {
        log_iteration(eps);
        build_kernel(eps);
      } else if (out_of_range()) {
        fold(eps);
        build_kernel(eps);
      }
      ++iterations;
      if (it % 10 == 9 || iterations == options.max_iterations) {
        violation = kernel_violation();
        if (violation <= stage_tol) break;
      }
    }
    fold(eps);
    if (final_stage) break;
    if (iterations >= options.max_iterations) break;
    eps = std::max(options.epsilon, eps * options.scaling);
  }
  violation = row_violation(eps);
  if (eps > options.epsilon) {
    throw ConvergenceError("entropic_transport: iteration limit reached at epsilon " + std::to_string(eps) +
                               " before the target " + std::to_string(options.epsilon),
                           iterations, violation);
  }
  if (!(violation <= options.tolerance)) {
    throw ConvergenceError("entropic_transport: marginal violation " + std::to_string(violation) +
                               " above tolerance after " + std::to_string(iterations) +
                               " iterations",
                           iterations, violation);
  }

  // Round onto the exact marginals: scale rows and columns down, then spread
  // the missing mass as a rank-one correction.
  std::vector<double> plan(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) plan[i * m + j] = std::exp((f[i] + g[j] - c[i * m + j]) / eps);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += plan[i * m + j];
    const double x = s > src_weights[i] ? src_weights[i] / s : 1.0;
    for (std::size_t j = 0; j < m; ++j) plan[i * m + j] *= x;
  }
  std::vector<double> col(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) col[j] += plan[i * m + j];
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double y = col[j] > dst_weights[j] ? dst_weights[j] / col[j] : 1.0;
    for (std::size_t i = 0; i < n; ++i) plan[i * m + j] *= y;
  }
  std::vector<double> er(n), ec(m);
  std::fill(col.begin(), col.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      s += plan[i * m + j];
      col[j] += plan[i * m + j];
    }
    er[i] = std::max(0.0, src_weights[i] - s);
  }
  for (std::size_t j = 0; j < m; ++j) ec[j] = std::max(0.0, dst_weights[j] - col[j]);
  const double mass_err = std::accumulate(er.begin(), er.end(), 0.0);
  if (mass_err > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (er[i] == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) plan[i * m + j] += er[i] * ec[j] / mass_err;
    }
  }

  EntropicResult res;
  res.violation_before_rounding = violation;
  res.iterations = iterations;
  res.plan.src_weights.assign(src_weights.begin(), src_weights.end());
  res.plan.dst_weights.assign(dst_weights.begin(), dst_weights.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double x = plan[i * m + j];
      if (x > 0.0) {
        res.plan.entries.push_back({i, j, x});
        total += x * c[i * m + j];
      }
    }
  }
  res.plan.cost = total;
  return res;
}

}  // namespace pml
