#include "pml/fit.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <map>

#include "pml/errors.hpp"
#include "pml/moser.hpp"

namespace pml {

std::string to_string(GrowthModel m) { return m == GrowthModel::LogPower ? "log" : "power"; }

std::vector<std::pair<double, double>> medians_by_radius(
    const std::vector<std::pair<double, double>>& rows) {
  std::map<double, std::vector<double>> by_r;
  for (auto [r, v] : rows) {
    if (std::isfinite(v)) by_r[r].push_back(v);
  }
  std::vector<std::pair<double, double>> out;
  for (auto& [r, vs] : by_r) out.emplace_back(r, quantile(vs, 0.5));
  return out;
}

namespace {

struct Linear {
  double a = 0.0, b = 0.0, rss = 0.0, sxx = 0.0;
};

// Least squares y = a x + b.
Linear linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const auto m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Linear f;
  f.sxx = sxx;
  f.a = sxx > 0.0 ? sxy / sxx : 0.0;
  f.b = my - f.a * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.a * x[i] + f.b);
    f.rss += r * r;
  }
  return f;
}

std::vector<double> power_basis(const std::vector<double>& radii, double s) {
  std::vector<double> x(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) x[i] = std::pow(radii[i], s);
  return x;
}

void finish(FitResult& f, const std::vector<double>& x, int params) {
  const std::size_t m = f.radii.size();
  double my = 0.0;
  for (double v : f.values) my += v;
  my /= static_cast<double>(m);
  double tss = 0.0;
  f.residuals.resize(m);
  f.rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    f.residuals[i] = f.values[i] - (f.a * x[i] + f.b);
    f.rss += f.residuals[i] * f.residuals[i];
    tss += (f.values[i] - my) * (f.values[i] - my);
  }
  f.r_squared = tss > 0.0 ? 1.0 - f.rss / tss : 1.0;
  // Exact fits would give ln 0; floor the rss far below any data scale.
  const double floor = 1e-30 * std::max(tss, 1e-300);
  f.aic = static_cast<double>(m) * std::log(std::max(f.rss, floor) / static_cast<double>(m)) +
          2.0 * params;
}

}  // namespace

FitResult fit_growth(const std::vector<std::pair<double, double>>& rows, GrowthModel model,
                     double q) {
  const auto med = medians_by_radius(rows);
  if (med.size() < 3) throw InvalidArgument("fit_growth: need at least three distinct radii");
  FitResult f;
  f.model = model;
  for (auto [r, v] : med) {
    if (!(r > 1.0)) throw InvalidArgument("fit_growth: radii must exceed 1");
    f.radii.push_back(r);
    f.values.push_back(v);
  }

  if (model == GrowthModel::LogPower) {
    f.exponent = q;
    std::vector<double> x(f.radii.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::pow(std::log(f.radii[i]), q);
    const Linear lin = linear_fit(x, f.values);
    f.a = lin.a;
    f.b = lin.b;
    finish(f, x, 2);
    const std::size_t dof = f.radii.size() - 2;
    if (dof > 0 && lin.sxx > 0.0) {
      const double se = std::sqrt(f.rss / static_cast<double>(dof) / lin.sxx);
      const boost::math::students_t t(static_cast<double>(dof));
      const double tq = boost::math::quantile(boost::math::complement(t, 0.025));
      f.a_low = f.a - tq * se;
      f.a_high = f.a + tq * se;
    } else {
      f.a_low = f.a_high = f.a;
    }
    return f;
  }

  // Profile the exponent: each s gives a linear problem in (a, b).  A coarse
  // scan over [-3, 3] (s = 0 is degenerate) is refined by golden section.
  auto rss_at = [&](double s) { return linear_fit(power_basis(f.radii, s), f.values).rss; };
  double best_s = 0.0, best = std::numeric_limits<double>::infinity();
  const double step = 1e-3;
  for (int k = -3000; k <= 3000; ++k) {
    if (k == 0) continue;
    const double s = k * step;
    const double v = rss_at(s);
    if (v < best) {
      best = v;
      best_s = s;
    }
  }
  double lo = std::max(best_s - step, -3.0), hi = std::min(best_s + step, 3.0);
  if (best_s > 0.0) lo = std::max(lo, 1e-9);
  else hi = std::min(hi, -1e-9);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = rss_at(c), fd = rss_at(d);
  for (int it = 0; it < 100; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = rss_at(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = rss_at(d);
    }
  }
  const double s_ref = 0.5 * (lo + hi);
  f.exponent = rss_at(s_ref) < best ? s_ref : best_s;
  const auto x = power_basis(f.radii, f.exponent);
  const Linear lin = linear_fit(x, f.values);
  f.a = lin.a;
  f.b = lin.b;
  finish(f, x, 3);
  return f;
}

ModelComparison compare_growth(const std::vector<std::pair<double, double>>& rows, double q) {
  ModelComparison c;
  c.log_fit = fit_growth(rows, GrowthModel::LogPower, q);
  c.power_fit = fit_growth(rows, GrowthModel::Power);
  c.score = c.power_fit.aic - c.log_fit.aic;
  return c;
}

}  // namespace pml
