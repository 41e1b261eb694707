#include "pml/scaling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "pml/config.hpp"
#include "pml/errors.hpp"
#include "pml/io.hpp"
#include "pml/rng.hpp"

namespace pml {

namespace {

constexpr std::pair<Statistic, const char*> kNames[] = {
    {Statistic::TorusCost, "torus_cost"},
    {Statistic::DataTerm, "data_term"},
    {Statistic::EnergyTerm, "energy_term"},
    {Statistic::MeanDisplacement, "mean_displacement"},
    {Statistic::MaxDisplacement, "max_displacement"},
    {Statistic::Exceedance, "exceedance"},
    {Statistic::HolderBound, "holder_bound"},
    {Statistic::Density, "density"},
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string to_string(Statistic s) {
  for (auto [k, name] : kNames) {
    if (k == s) return name;
  }
  return "unknown";
}

Statistic statistic_from_string(const std::string& name) {
  for (auto [k, n] : kNames) {
    if (name == n) return k;
  }
  throw InvalidArgument("unknown statistic '" + name + "'");
}

bool needs_matching(Statistic s) {
  switch (s) {
    case Statistic::EnergyTerm:
    case Statistic::MeanDisplacement:
    case Statistic::MaxDisplacement:
    case Statistic::Exceedance:
    case Statistic::HolderBound:
      return true;
    default:
      return false;
  }
}

void ExperimentConfig::validate() const {
  if (dim < 1) throw InvalidArgument("config: dim must be >= 1");
  if (!(p >= 1.0)) throw InvalidArgument("config: p must be >= 1");
  if (radii.empty()) throw InvalidArgument("config: at least one radius is required");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || !std::isfinite(radii[i])) throw InvalidArgument("config: radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw InvalidArgument("config: radii must be strictly increasing");
  }
  if (seeds == 0) throw InvalidArgument("config: seeds must be >= 1");
  if (!(intensity > 0.0)) throw InvalidArgument("config: intensity must be positive");
  if (statistics.empty()) throw InvalidArgument("config: no statistic selected");
  if (!(window > 4.0)) throw InvalidArgument("config: window must exceed 4 so that B_R has diameter below half the torus side");
  if (!(exceedance_length > 0.0)) throw InvalidArgument("config: exceedance_length must be positive");
  if (!(transport.spacing > 0.0)) throw InvalidArgument("config: solver.spacing must be positive");
}

std::pair<double, int> dyadic_decomposition(double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("dyadic_decomposition: radius must be positive");
  const int k = static_cast<int>(std::floor(std::log2(radius) + 0.5));
  return {radius / std::ldexp(1.0, k), k};
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t radius_index, std::size_t seed_index,
                        std::string_view role) {
  return derive_seed(derive_seed(derive_seed(master, radius_index), seed_index), role);
}

double density_fluctuation(const PointCloud& cloud, double radius, double p,
                           std::optional<std::vector<double>> center) {
  if (!(radius > 0.0)) throw InvalidArgument("density_fluctuation: radius must be positive");
  const Region ball = Ball{center ? *center : cloud.domain().center(), radius};
  const double n = static_cast<double>(count_in(cloud, ball)) / ball_volume(cloud.dim(), radius);
  return std::pow(radius, p) * std::pow(std::fabs(n - 1.0), p);
}

HolderSplit holder_split(const PointCloud& mu, const PointCloud& nu, const Matching& matching,
                         double radius, double p, double length) {
  const Domain& dom = mu.domain();
  const Region ball = Ball{dom.center(), radius};
  const double rd = std::pow(radius, static_cast<double>(dom.dim()));
  double total = 0.0;
  std::size_t inside = 0, far = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i);
    if (!region_contains(ball, x, dom)) continue;
    ++inside;
    const double d = dist(x, nu.point(matching.target[i]), dom);
    total += d;
    if (d > length) ++far;
  }
  const double energy = energy_term(mu, nu, matching, radius, p);
  const double eps = static_cast<double>(far) / rd;
  HolderSplit h;
  h.lhs = total / rd;
  h.rhs = length * static_cast<double>(inside) / rd +
          std::pow(eps, 1.0 - 1.0 / p) * std::pow(energy, 1.0 / p);
  h.holds = h.lhs <= h.rhs * (1.0 + 1e-12);
  return h;
}

namespace {

struct CellTask {
  std::size_t radius_index;
  std::size_t seed_index;
};

DataTermOptions torus_options(const ExperimentConfig& c, std::size_t points) {
  DataTermOptions o = c.transport;
  o.backend = c.backend;
  if (c.exact_point_limit != 0 && points > c.exact_point_limit) o.backend = Backend::Entropic;
  return o;
}

std::vector<ReportRow> run_cell(const ExperimentConfig& c, const CellTask& t) {
  const double r = c.radii[t.radius_index];
  const double rd = std::pow(r, static_cast<double>(c.dim));
  std::vector<ReportRow> rows;
  auto put = [&](Statistic s, double v) { rows.push_back({s, r, t.seed_index, v, {}}); };
  auto fail = [&](Statistic s, const std::string& what) {
    rows.push_back({s, r, t.seed_index, kNaN, what});
  };

  for (Statistic s : c.statistics) {
    if (s != Statistic::TorusCost) continue;
    try {
      const PointCloud mu = sample_poisson(
          c.intensity, Domain::torus(c.dim, r), cell_seed(c.seed, t.radius_index, t.seed_index, "torus"));
      put(s, torus_cost_to_uniform(mu, c.p, torus_options(c, mu.size())) / rd);
    } catch (const std::exception& e) {
      fail(s, e.what());
    }
  }

  const bool window_needed = std::any_of(c.statistics.begin(), c.statistics.end(),
                                         [](Statistic s) { return s != Statistic::TorusCost; });
  if (!window_needed) return rows;

  std::optional<PointCloud> mu, nu;
  std::string sample_error;
  try {
    const Domain dom = Domain::torus(c.dim, c.window * r);
    mu = sample_poisson(c.intensity, dom, cell_seed(c.seed, t.radius_index, t.seed_index, "mu"));
    // The second cloud is a Poisson process conditioned on the count of the
    // first, so that the optimal matching is a bijection.
    nu = sample_uniform(mu->size(), dom, cell_seed(c.seed, t.radius_index, t.seed_index, "nu"));
  } catch (const std::exception& e) {
    sample_error = e.what();
  }

  std::optional<Matching> matching;
  std::string matching_error = sample_error;
  const bool matching_needed =
      std::any_of(c.statistics.begin(), c.statistics.end(), [](Statistic s) { return needs_matching(s); });
  if (mu && matching_needed) {
    try {
      if (mu->empty()) throw DegenerateInput("empty window cloud");
      matching = solve_assignment_geometric(*mu, *nu, c.p, c.transport.exact);
    } catch (const std::exception& e) {
      matching_error = e.what();
    }
  }

  for (Statistic s : c.statistics) {
    if (s == Statistic::TorusCost) continue;
    if (!mu) {
      fail(s, sample_error);
      continue;
    }
    if (needs_matching(s) && !matching) {
      fail(s, matching_error);
      continue;
    }
    try {
      const Domain& dom = mu->domain();
      const Region ball = Ball{dom.center(), r};
      switch (s) {
        case Statistic::DataTerm:
          put(s, data_term(*mu, *nu, r, c.p, c.transport).value);
          break;
        case Statistic::Density:
          put(s, density_fluctuation(*mu, r, c.p));
          break;
        case Statistic::EnergyTerm:
          put(s, energy_term(*mu, *nu, *matching, r, c.p));
          break;
        case Statistic::HolderBound:
          put(s, holder_split(*mu, *nu, *matching, r, c.p, c.exceedance_length).rhs);
          break;
        default: {
          double total = 0.0, largest = 0.0;
          std::size_t far = 0;
          for (std::size_t i = 0; i < mu->size(); ++i) {
            const auto x = mu->point(i);
            if (!region_contains(ball, x, dom)) continue;
            const double d = dist(x, nu->point(matching->target[i]), dom);
            total += d;
            largest = std::max(largest, d);
            if (d > c.exceedance_length) ++far;
          }
          if (s == Statistic::MeanDisplacement) put(s, total / rd);
          else if (s == Statistic::MaxDisplacement) put(s, largest);
          else put(s, static_cast<double>(far) / rd);
        }
      }
    } catch (const std::exception& e) {
      fail(s, e.what());
    }
  }
  return rows;
}

}  // namespace

ScalingReport run_scaling(const ExperimentConfig& config) {
  config.validate();
  std::vector<CellTask> tasks;
  for (std::size_t ri = 0; ri < config.radii.size(); ++ri) {
    for (std::size_t si = 0; si < config.seeds; ++si) tasks.push_back({ri, si});
  }
  // Each cell writes only its own slot; the merge below fixes the order.
  std::vector<std::vector<ReportRow>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) results[k] = run_cell(config, tasks[k]);
  };
  const std::size_t nthreads = std::min(std::max<std::size_t>(config.threads, 1), tasks.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ScalingReport report;
  report.config = config;
  for (auto& cell : results) {
    for (auto& row : cell) report.rows.push_back(std::move(row));
  }
  auto rank = [&](Statistic s) {
    return std::find(config.statistics.begin(), config.statistics.end(), s) - config.statistics.begin();
  };
  std::stable_sort(report.rows.begin(), report.rows.end(), [&](const ReportRow& a, const ReportRow& b) {
    if (a.statistic != b.statistic) return rank(a.statistic) < rank(b.statistic);
    if (a.radius != b.radius) return a.radius < b.radius;
    return a.seed < b.seed;
  });
  for (const auto& row : report.rows) {
    if (!row.error.empty()) ++report.failures;
  }
  const double q = 0.5 * config.p;
  for (Statistic s : config.statistics) {
    const auto rows = report.series(s);
    if (medians_by_radius(rows).size() < 3) continue;
    try {
      report.fits[s] = compare_growth(rows, q);
    } catch (const InvalidArgument&) {
      // radii <= 1 cannot be fitted against ln R
    }
  }
  return report;
}

std::vector<std::pair<double, double>> ScalingReport::series(Statistic s) const {
  std::vector<std::pair<double, double>> out;
  for (const auto& row : rows) {
    if (row.statistic == s && row.error.empty()) out.emplace_back(row.radius, row.value);
  }
  return out;
}

std::string ScalingReport::to_csv() const {
  std::ostringstream out;
  out << "statistic,R,seed,value,error\n";
  for (const auto& row : rows) {
    std::string err = row.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << to_string(row.statistic) << ',' << format_double(row.radius) << ',' << row.seed << ','
        << (row.error.empty() ? format_double(row.value) : std::string("nan")) << ',' << err << '\n';
  }
  return out.str();
}

namespace {

nlohmann::ordered_json fit_json(const FitResult& f) {
  nlohmann::ordered_json j;
  j["model"] = to_string(f.model);
  j["a"] = f.a;
  j["b"] = f.b;
  j["exponent"] = f.exponent;
  j["rss"] = f.rss;
  j["r_squared"] = f.r_squared;
  j["aic"] = f.aic;
  j["residuals"] = f.residuals;
  if (f.model == GrowthModel::LogPower) j["a_ci95"] = {f.a_low, f.a_high};
  return j;
}

}  // namespace

std::string ScalingReport::to_json() const {
  nlohmann::ordered_json j;
  j["config"] = nlohmann::ordered_json::parse(experiment_to_json(config));
  j["failures"] = failures;
  j["radius_note"] =
      "no finite-sample analogue of the random threshold radius; full per-radius distributions "
      "are in the CSV rows";
  auto stats = nlohmann::ordered_json::object();
  for (Statistic s : config.statistics) {
    nlohmann::ordered_json e;
    auto med = nlohmann::ordered_json::array();
    for (auto [r, v] : medians_by_radius(series(s))) med.push_back({{"R", r}, {"median", v}});
    e["medians"] = std::move(med);
    if (auto it = fits.find(s); it != fits.end()) {
      e["log_fit"] = fit_json(it->second.log_fit);
      e["power_fit"] = fit_json(it->second.power_fit);
      e["score"] = it->second.score;
      e["preferred"] = it->second.log_preferred() ? "log" : "power";
    }
    stats[to_string(s)] = std::move(e);
  }
  j["statistics"] = std::move(stats);
  return j.dump(2);
}

std::string ScalingReport::to_svg() const {
  // Two panels: median against ln R and against ln ln R, log-scaled values.
  const double w = 360, h = 260, pad = 40;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * w << "\" height=\"" << h << "\">\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  for (int panel = 0; panel < 2; ++panel) {
    const double x0 = panel * w;
    out << "<text x=\"" << x0 + pad << "\" y=\"20\" font-size=\"12\">median vs "
        << (panel == 0 ? "ln R" : "ln ln R") << " (log scale)</text>\n";
    out << "<rect x=\"" << x0 + pad << "\" y=\"" << pad << "\" width=\"" << w - 2 * pad << "\" height=\""
        << h - 2 * pad << "\" fill=\"none\" stroke=\"black\"/>\n";
    std::size_t ci = 0;
    for (Statistic s : config.statistics) {
      std::vector<std::pair<double, double>> pts;
      for (auto [r, v] : medians_by_radius(series(s))) {
        if (r > (panel == 0 ? 0.0 : 1.0) && v > 0.0) {
          const double lx = panel == 0 ? std::log(r) : std::log(std::log(r));
          if (std::isfinite(lx)) pts.emplace_back(lx, std::log(v));
        }
      }
      const char* color = colors[ci++ % 8];
      if (pts.size() < 2) continue;
      double xmin = pts.front().first, xmax = pts.back().first, ymin = pts[0].second, ymax = ymin;
      for (auto [x, y] : pts) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
      if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
      }
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
      for (auto [x, y] : pts) {
        const double px = x0 + pad + (x - xmin) / (xmax - xmin) * (w - 2 * pad);
        const double py = h - pad - (y - ymin) / (ymax - ymin) * (h - 2 * pad);
        out << format_double(std::round(px * 100) / 100) << ',' << format_double(std::round(py * 100) / 100) << ' ';
      }
      out << "\"/>\n<text x=\"" << x0 + pad + 4 << "\" y=\"" << pad + 14 * ci << "\" font-size=\"10\" fill=\""
          << color << "\">" << to_string(s) << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

DensityReport density_concentration(std::size_t dim, double p, const std::vector<double>& radii,
                                    std::size_t seeds, std::uint64_t master,
                                    double threshold_constant) {
  if (seeds == 0) throw InvalidArgument("density_concentration: seeds must be >= 1");
  DensityReport rep;
  rep.threshold_constant = threshold_constant;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const double r = radii[ri];
    if (!(r > 0.0)) throw InvalidArgument("density_concentration: radii must be positive");
    const double threshold =
        threshold_constant * (dim == 2 ? std::pow(std::log(r), 0.5 * p) : 1.0);
    std::size_t above = 0;
    for (std::size_t si = 0; si < seeds; ++si) {
      const PointCloud mu =
          sample_poisson(1.0, Domain::torus(dim, 8.0 * r), cell_seed(master, ri, si, "density"));
      const double v = density_fluctuation(mu, r, p);
      rep.rows.push_back({Statistic::Density, r, si, v, {}});
      if (v > threshold) ++above;
    }
    rep.exceedance[r] = static_cast<double>(above) / static_cast<double>(seeds);
  }
  return rep;
}

RestrictionResult restriction_check(const PointCloud& mu, double radius, double p,
                                    std::size_t samples, const DataTermOptions& options) {
  const Domain& dom = mu.domain();
  if (!dom.is_torus() || std::fabs(dom.side() - 8.0 * radius) > 1e-9 * dom.side()) {
    throw InvalidArgument("restriction_check: the cloud must live on the torus of side 8R");
  }
  if (samples == 0) throw InvalidArgument("restriction_check: need at least one sample");
  if (!(radius > 0.5)) throw InvalidArgument("restriction_check: radius must exceed 1/2");
  if (mu.empty()) throw DegenerateInput("restriction_check: empty cloud");
  RestrictionResult res;
  res.samples = samples;
  const std::size_t d = dom.dim();
  for (std::size_t k = 0; k < samples; ++k) {
    const double rb = radius - 0.5 + (static_cast<double>(k) + 0.5) / static_cast<double>(samples);
    const DataTermParts parts = data_term_single(mu, rb, p, options);
    // Undo the R^d normalization and use (n-1)^p/n in place of R^p |n-1|^p / n.
    const double rbd = std::pow(rb, static_cast<double>(d));
    res.lhs += (parts.transport_mu * rbd +
                std::pow(std::fabs(parts.n_mu - 1.0), p) / parts.n_mu) /
               static_cast<double>(samples);
  }
  const double n = static_cast<double>(mu.size()) / dom.volume();
  res.rhs = torus_cost_to_uniform(mu, p, options) + std::pow(std::fabs(n - 1.0), p) / n;
  res.ratio = res.rhs > 0.0 ? res.lhs / res.rhs : std::numeric_limits<double>::infinity();
  return res;
}

MesoscopicResult mesoscopic_count_check(const PointCloud& mu, double radius, double eps, double r,
                                        double kappa, double factor) {
  if (!(radius > 0.0) || !(r > 0.0) || !(eps >= 0.0)) {
    throw InvalidArgument("mesoscopic_count_check: invalid scales");
  }
  if (r < factor * eps * radius) {
    throw InvalidArgument("mesoscopic_count_check: r must be at least factor * eps * R");
  }
  const Domain& dom = mu.domain();
  const std::size_t d = dom.dim();
  const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(4.0 * radius / r + 1e-9)));
  std::size_t cubes = 1;
  for (std::size_t a = 0; a < d; ++a) cubes *= m;
  std::vector<std::size_t> counts(cubes, 0);
  const auto c = dom.center();
  const double half = 0.5 * static_cast<double>(m) * r;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i);
    std::size_t idx = 0;
    bool inside = true;
    for (std::size_t a = 0; a < d && inside; ++a) {
      const double off = dom.axis_delta(x[a], c[a], a) + half;
      const double k = std::floor(off / r);
      if (off < 0.0 || k >= static_cast<double>(m)) inside = false;
      else idx = idx * m + static_cast<std::size_t>(k);
    }
    if (inside) ++counts[idx];
  }
  MesoscopicResult res;
  res.cubes = cubes;
  res.min_count = *std::min_element(counts.begin(), counts.end());
  res.ok = static_cast<double>(res.min_count) >= kappa * std::pow(r, static_cast<double>(d)) &&
           res.min_count > 0;
  return res;
}

std::vector<FQuantiles> f_concentration_report(std::size_t dim, double p,
                                               const std::vector<double>& radii, std::size_t seeds,
                                               std::uint64_t master, const MoserOptions& options) {
  if (seeds == 0) throw InvalidArgument("f_concentration_report: seeds must be >= 1");
  std::vector<FQuantiles> out;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    std::vector<std::uint64_t> ss(seeds);
    for (std::size_t si = 0; si < seeds; ++si) ss[si] = cell_seed(master, ri, si, "F");
    const FStatistics st = f_statistics(dim, radii[ri], p, ss, options);
    FQuantiles q;
    q.radius = radii[ri];
    q.normalizer = dim == 2 ? std::pow(std::log(radii[ri]), 0.5 * p) : 1.0;
    q.q50 = st.q50 / q.normalizer;
    q.q90 = st.q90 / q.normalizer;
    q.q99 = st.q99 / q.normalizer;
    q.values = st.values;
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace pml
