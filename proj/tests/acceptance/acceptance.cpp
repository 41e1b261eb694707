// Acceptance runner: one PASS/FAIL line per criterion.
//
//   pml_acceptance [--criterion N]... [--cli PATH] [--quick]
//
// --quick shrinks the sample sizes for smoke runs; the ctest entries use the
// full sizes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "../common/support.hpp"
#include "pml/field.hpp"
#include "pml/fit.hpp"
#include "pml/geometry.hpp"
#include "pml/io.hpp"
#include "pml/monotonicity.hpp"
#include "pml/moser.hpp"
#include "pml/ot.hpp"
#include "pml/rng.hpp"
#include "pml/scaling.hpp"

using namespace pml;
namespace fs = std::filesystem;

namespace {

bool g_quick = false;
std::string g_cli;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

std::size_t scaled(std::size_t full, std::size_t quick) { return g_quick ? quick : full; }

// ---- 1: exact solver against enumeration -----------------------------------

Outcome criterion_1() {
  Outcome o;
  std::size_t mismatches = 0;
  const std::size_t instances = 200;
  for (std::size_t s = 0; s < instances; ++s) {
    const std::size_t n = 1 + s % 7;
    Rng rng(derive_seed(101, s));
    std::vector<double> e(n * n);
    // Every fourth instance uses small integers so that ties are common.
    for (auto& v : e) v = s % 4 == 3 ? static_cast<double>(rng.below(4)) : rng.uniform();
    const CostMatrix c(n, n, e);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += c(i, perm[i]);
      best = std::min(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const Matching m = solve_assignment(c);
    double mine = 0.0;
    for (std::size_t i = 0; i < n; ++i) mine += c(i, m.target[i]);
    if (!m.is_permutation() || mine != best) ++mismatches;
  }
  o.check(mismatches == 0, "solve_assignment == n! enumeration on " + std::to_string(instances) +
                               " instances (n <= 7), mismatches=" + std::to_string(mismatches));

  std::size_t dirty = 0, partial = 0;
  std::uint64_t cycles = 0;
  const double ps[] = {1.0, 1.5, 2.0, 3.0};
  for (std::size_t s = 0; s < 50; ++s) {
    const std::size_t n = 2 + s % 7;
    const Domain t = Domain::torus(2, 3.0);
    const PointCloud mu = sample_uniform(n, t, derive_seed(202, s));
    const PointCloud nu = sample_uniform(n, t, derive_seed(303, s));
    const double p = ps[s % 4];
    const Matching m = solve_assignment_geometric(mu, nu, p);
    const AuditResult r = check_cyclical_monotonicity(mu, nu, m, p, n);
    dirty += !r.clean();
    partial += !r.exhaustive;
    cycles += r.cycles_checked;
  }
  o.check(dirty == 0 && partial == 0,
          "exhaustive audit (all k <= n, n <= 8) on 50 solver outputs: violations in " +
              std::to_string(dirty) + ", non-exhaustive " + std::to_string(partial) + ", cycles " +
              std::to_string(cycles));
  return o;
}

// ---- 2: Moser bound validity ------------------------------------------------

Outcome criterion_2() {
  Outcome o;
  const std::size_t seeds = scaled(50, 5);
  const Domain t = Domain::torus(2, 16.0);
  DataTermOptions exact;
  exact.spacing = 0.125;
  for (double p : {1.5, 2.0, 3.0}) {
    std::size_t exceptions = 0;
    double min_margin = INFINITY;
    for (std::size_t s = 0; s < seeds; ++s) {
      const PointCloud mu = sample_poisson(1.0, t, derive_seed(404, s));
      const double w = torus_cost_to_uniform(mu, p, exact);
      const double budget = quantize_lebesgue(AnyRegion{t}, 0.125, static_cast<double>(mu.size()))
                                .quantization_budget(p);
      const double u = moser_upper_bound(mu, p).value;
      const double margin = u - (w - budget);
      min_margin = std::min(min_margin, margin / std::max(w, 1e-300));
      exceptions += margin < 0.0;
    }
    o.check(exceptions == 0, "p=" + fmt(p) + ": U >= W - budget on " + std::to_string(seeds) +
                                 " instances, exceptions=" + std::to_string(exceptions) +
                                 ", min relative margin " + fmt(min_margin));
  }
  return o;
}

// ---- 3 and 4: growth laws ---------------------------------------------------

ScalingReport torus_scaling(std::size_t dim, const std::vector<double>& radii, std::size_t seeds,
                            double spacing, std::uint64_t master) {
  ExperimentConfig c;
  c.dim = dim;
  c.p = 2.0;
  c.radii = radii;
  c.seeds = seeds;
  c.seed = master;
  c.statistics = {Statistic::TorusCost};
  c.transport.spacing = spacing;
  c.threads = 1;
  return run_scaling(c);
}

std::string medians_text(const std::vector<std::pair<double, double>>& med) {
  std::string s;
  for (const auto& [r, v] : med) s += (s.empty() ? "" : " ") + fmt(r) + ":" + fmt(v, 5);
  return s;
}

Outcome criterion_3() {
  Outcome o;
  const std::vector<double> radii =
      g_quick ? std::vector<double>{8, 16, 32, 64} : std::vector<double>{16, 32, 64, 128};
  const std::size_t seeds = scaled(20, 3);
  const ScalingReport rep = torus_scaling(2, radii, seeds, 0.5, 7);
  o.check(rep.failures == 0, "cells without errors (" + std::to_string(rep.rows.size()) + " cells)");
  const auto rows = rep.series(Statistic::TorusCost);
  const auto med = medians_by_radius(rows);
  bool increasing = true;
  for (std::size_t i = 1; i < med.size(); ++i) increasing = increasing && med[i].second > med[i - 1].second;
  o.check(increasing, "medians strictly increasing: " + medians_text(med));
  const ModelComparison mc = compare_growth(rows, 1.0);
  o.check(mc.log_preferred(), "a ln R + b preferred over a R^s + b: score " + fmt(mc.score) +
                                  " (log a=" + fmt(mc.log_fit.a) + ", power s=" +
                                  fmt(mc.power_fit.exponent) + ")");
  o.check(mc.power_fit.exponent < 0.2, "forced power-law exponent s < 0.2: s=" + fmt(mc.power_fit.exponent));

  // Entropic measurement cross-checked against the exact solver at R = 32.
  const std::size_t checks = scaled(3, 1);
  double worst = 0.0;
  for (std::size_t s = 0; s < checks; ++s) {
    const PointCloud mu = sample_poisson(1.0, Domain::torus(2, 32.0), cell_seed(7, 1, s, "torus"));
    DataTermOptions ex, en;
    ex.spacing = en.spacing = 0.5;
    en.backend = Backend::Entropic;
    en.entropic.epsilon = 0.03;
    const double a = torus_cost_to_uniform(mu, 2.0, ex);
    const double b = torus_cost_to_uniform(mu, 2.0, en);
    worst = std::max(worst, std::fabs(b - a) / a);
  }
  o.check(worst <= 0.01, "entropic vs exact at R=32 on " + std::to_string(checks) +
                             " clouds: worst relative gap " + fmt(worst));
  return o;
}

Outcome criterion_4() {
  Outcome o;
  const std::vector<double> radii =
      g_quick ? std::vector<double>{4, 8, 12} : std::vector<double>{4, 8, 16, 32};
  const std::size_t seeds = scaled(10, 3);
  const ScalingReport rep = torus_scaling(3, radii, seeds, 1.0, 11);
  o.check(rep.failures == 0, "cells without errors (" + std::to_string(rep.rows.size()) + " cells)");
  const auto rows = rep.series(Statistic::TorusCost);
  const auto med = medians_by_radius(rows);
  double lo = INFINITY, hi = 0.0;
  for (const auto& [r, v] : med) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  o.check(hi / lo < 1.5, "max/min median < 1.5: " + fmt(hi / lo) + " (" + medians_text(med) + ")");
  const FitResult f = fit_growth(rows, GrowthModel::LogPower, 1.0);
  o.check(f.a_low <= 0.0 && 0.0 <= f.a_high, "ln-slope 95% CI contains 0: a=" + fmt(f.a) + " CI [" +
                                                 fmt(f.a_low) + ", " + fmt(f.a_high) + "]");
  return o;
}

// ---- 5: cone barrier --------------------------------------------------------

Outcome criterion_5() {
  Outcome o;
  ConeCheckOptions opt;
  opt.budget = scaled(1'000'000, 40'000);
  o.check(cone_vertex_constant(2.0) == 2.0, "c0(p=2) == 2 exactly: " + fmt(cone_vertex_constant(2.0), 17));
  for (double p : {1.25, 1.5, 2.0, 3.0, 4.0}) {
    const double c0 = cone_vertex_constant(p, 0.5);
    const ConeCheck r = verify_cone_in_U(ConeSpec::canonical(p, 0.5, c0), opt);
    o.check(r.ok && r.counterexample_count == 0,
            "p=" + fmt(p) + " c0=" + fmt(c0, 10) + ": " + std::to_string(r.samples) +
                " samples, counterexamples=" + std::to_string(r.counterexample_count) +
                ", tail " + (r.tail_ok ? "ok" : "not ok") + ", min F " + fmt(r.min_F));
  }
  for (double p : {1.25, 1.5, 2.0, 3.0, 4.0}) {
    const double c = 0.75 * cone_vertex_constant(p, 0.5);
    const ConeCheck r = verify_cone_in_U(ConeSpec::canonical(p, 0.5, c), opt);
    o.check(r.counterexample_count > 0, "p=" + fmt(p) + " at 0.75 c0=" + fmt(c, 10) +
                                            ": counterexamples=" + std::to_string(r.counterexample_count) +
                                            ", min F " + fmt(r.min_F) + " (a counterexample needs F < 2)");
  }
  return o;
}

// ---- 6: planarity ------------------------------------------------------------

Outcome criterion_6() {
  Outcome o;
  const std::size_t instances = scaled(100, 10);
  const Domain box = Domain::box({0.0, 0.0}, {10.0, 10.0});
  std::size_t non_planar = 0, total_points = 0;
  for (std::size_t s = 0; s < instances; ++s) {
    const PointCloud mu = sample_poisson(1.0, box, derive_seed(606, s));
    const PointCloud nu = sample_uniform(mu.size(), box, derive_seed(707, s));
    total_points += mu.size();
    non_planar += !is_planar(mu, nu, solve_assignment_geometric(mu, nu, 1.0)).planar;
  }
  o.check(non_planar == 0, "p=1 exact matchings planar on " + std::to_string(instances) +
                               " instances (mean n " + fmt(static_cast<double>(total_points) / instances) +
                               "), non-planar=" + std::to_string(non_planar));
  return o;
}

// ---- 7: spectral solver -------------------------------------------------------

Outcome criterion_7() {
  Outcome o;
  using pml::testing::cosine_mode;
  using pml::testing::max_abs;
  using pml::testing::max_abs_diff;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double worst = 0.0;
  struct Mode {
    Grid g;
    std::vector<int> k;
  };
  const std::vector<Mode> modes{{{1, 32, 3.0}, {5}},         {{2, 32, 5.0}, {2, -3}},
                                {{2, 64, 1.0}, {31, 0}},     {{3, 16, 2.0}, {1, 2, -3}},
                                {{3, 16, 7.0}, {0, 0, 4}},   {{2, 16, 10.0}, {7, 7}}};
  for (const auto& m : modes) {
    double k2 = 0.0;
    for (int ka : m.k) k2 += ka * ka;
    const double lambda = kTwoPi * kTwoPi * k2 / (m.g.side * m.g.side);
    const ScalarField f = cosine_mode(m.g, m.k, 0.4);
    ScalarField expect_lap = f;
    for (std::size_t i = 0; i < f.size(); ++i) expect_lap[i] *= lambda;
    worst = std::max(worst, max_abs_diff(negative_laplacian(f), expect_lap) / max_abs(expect_lap));
    ScalarField expect_phi = f;
    for (std::size_t i = 0; i < f.size(); ++i) expect_phi[i] /= lambda;
    worst = std::max(worst, max_abs_diff(solve_poisson(f), expect_phi) / max_abs(expect_phi));
    // Gradient: d/dx_a cos(theta) = -k_a (2 pi / L) sin(theta).
    const ScalarField sn = cosine_mode(m.g, m.k, 0.4 - std::numbers::pi / 2.0);
    const VectorField grad = gradient(f);
    const double kmax = kTwoPi * std::sqrt(k2) / m.g.side;
    for (std::size_t a = 0; a < m.g.dim; ++a) {
      const double ka = kTwoPi * m.k[a] / m.g.side;
      for (std::size_t i = 0; i < f.size(); ++i) {
        worst = std::max(worst, std::fabs(grad.components[a][i] + ka * sn[i]) / kmax);
      }
    }
    worst = std::max(worst, max_abs_diff(divergence(gradient(f)), [&] {
                       ScalarField neg = expect_lap;
                       for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
                       return neg;
                     }()) / max_abs(expect_lap));
  }
  o.check(worst <= 1e-10, "single-mode Laplacian, Poisson, gradient, divergence: worst relative error " +
                              fmt(worst));

  double residual = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Grid g{2 + s % 2, s % 2 ? std::size_t{16} : std::size_t{48}, 3.0 + static_cast<double>(s)};
    const ScalarField rhs = pml::testing::random_field(g, 900 + s, 10);
    const ScalarField phi = solve_poisson(rhs);
    residual = std::max(residual, max_abs_diff(negative_laplacian(phi), rhs) / max_abs(rhs));
  }
  o.check(residual <= 1e-8, "Poisson residual on 20 random mean-zero fields: " + fmt(residual));

  double cont = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const double side = 6.0 + 2.0 * static_cast<double>(s % 3);
    const PointCloud c = sample_poisson(1.0, Domain::torus(2, side), derive_seed(808, s));
    const std::size_t n = static_cast<std::size_t>(4.0 * side);
    const ScalarField mu1 = mollify(c, n);
    const ScalarField phi = moser_potential(c, n);
    const double density = static_cast<double>(c.size()) / (side * side);
    const double p = s % 2 ? 1.5 : 2.0;
    for (double t : {0.0, 0.25, 0.5, 0.75, 0.95}) {
      cont = std::max(cont, continuity_residual(phi, mu1, density, p, t));
    }
  }
  o.check(cont <= 1e-6, "continuity residual of the candidate (10 instances x 5 times): " + fmt(cont));
  return o;
}

// ---- 8: concentration ----------------------------------------------------------

Outcome criterion_8() {
  Outcome o;
  const std::size_t seeds = scaled(100, 10);
  const auto rep = f_concentration_report(2, 2.0, {16, 32, 64}, seeds, 13);
  double lo = INFINITY, hi = 0.0;
  std::string txt;
  for (const auto& q : rep) {
    lo = std::min(lo, q.q99);
    hi = std::max(hi, q.q99);
    txt += (txt.empty() ? "" : " ") + fmt(q.radius) + ":" + fmt(q.q99, 5);
  }
  o.check(hi / lo <= 1.5, "normalized F q99 flat within 50% (max/min " + fmt(hi / lo) + "): " + txt);

  const std::size_t dseeds = scaled(200, 20);
  const DensityReport d = density_concentration(2, 2.0, {64}, dseeds, 17);
  const double frac = d.exceedance.at(64.0);
  o.check(frac < 0.05, "density exceedance at R=64 over " + std::to_string(dseeds) + " seeds: " +
                           fmt(frac) + " (threshold C ln R, C=" + fmt(d.threshold_constant) + ")");
  return o;
}

// ---- 9: determinism of the CLI -------------------------------------------------

std::string csv_body(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string line, body;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    body += line + "\n";
  }
  return body;
}

Outcome criterion_9() {
  Outcome o;
  if (g_cli.empty()) {
    o.check(false, "--cli path to the pml executable not given");
    return o;
  }
  const fs::path root = fs::temp_directory_path() / "pml_acceptance_determinism";
  fs::remove_all(root);
  struct Invocation {
    std::string name;
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Invocation> runs{
      {"sample", "sample --seed 21 --side 20", {"cloud.csv"}},
      {"match", "match --seed 21 --side 12 --p 2", {"matching.csv"}},
      {"scaling",
       "scaling --radii 2,4,8 --seeds 3 --set solver.spacing=0.5 --set window=5 "
       "--set statistics=torus_cost,energy_term,mean_displacement,density",
       {"scaling.csv"}},
  };
  for (const auto& inv : runs) {
    std::vector<std::string> bodies;
    std::vector<std::string> stdouts;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (inv.name + std::to_string(rep));
      fs::create_directories(dir);
      const std::string cmd = "\"" + g_cli + "\" " + inv.args + " --threads " + (rep ? "2" : "1") +
                              " --out \"" + dir.string() + "\" > \"" + (dir / "stdout.txt").string() + "\"";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) {
        o.check(false, inv.name + ": command failed: " + cmd);
        continue;
      }
      std::string body;
      for (const auto& f : inv.files) body += csv_body(dir / f);
      bodies.push_back(body);
      stdouts.push_back(csv_body(dir / "stdout.txt"));
    }
    if (bodies.size() == 2) {
      o.check(bodies[0] == bodies[1] && !bodies[0].empty() && stdouts[0] == stdouts[1],
              inv.name + ": CSV bodies byte-identical across two runs (" +
                  std::to_string(bodies[0].size()) + " bytes)");
    }
  }
  // fit over the produced CSV.
  std::vector<std::string> fits;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = root / ("fit" + std::to_string(rep));
    fs::create_directories(dir);
    const std::string cmd = "\"" + g_cli + "\" fit --input \"" + (root / "scaling0" / "scaling.csv").string() +
                            "\" --out \"" + dir.string() + "\" > \"" + (dir / "stdout.txt").string() + "\"";
    if (std::system(cmd.c_str()) == 0) fits.push_back(csv_body(dir / "stdout.txt"));
  }
  o.check(fits.size() == 2 && fits[0] == fits[1], "fit: CSV table byte-identical across two runs");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else if (a == "--cli" && i + 1 < argc) {
      g_cli = argv[++i];
    } else if (a == "--quick") {
      g_quick = true;
    } else {
      std::cerr << "usage: pml_acceptance [--criterion N]... [--cli PATH] [--quick]\n";
      return 2;
    }
  }
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria{
      {1, {"exact solver vs enumeration and audit", criterion_1}},
      {2, {"Moser bound validity", criterion_2}},
      {3, {"d=2 logarithmic growth", criterion_3}},
      {4, {"d=3 boundedness", criterion_4}},
      {5, {"cone barrier", criterion_5}},
      {6, {"planarity of p=1 matchings", criterion_6}},
      {7, {"spectral solver", criterion_7}},
      {8, {"concentration signatures", criterion_8}},
      {9, {"CLI determinism", criterion_9}},
  };
  if (selected.empty()) {
    for (const auto& [id, _] : criteria) selected.push_back(id);
  }
  bool all = true;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = it->second.second();
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& n : out.notes) std::cout << "    " << n << "\n";
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << it->second.first << " ("
              << fmt(secs, 4) << " s)" << std::endl;
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
