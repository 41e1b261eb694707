#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "pml/config.hpp"
#include "pml/errors.hpp"
#include "pml/fit.hpp"
#include "pml/io.hpp"
#include "pml/monotonicity.hpp"
#include "pml/moser.hpp"
#include "pml/rng.hpp"
#include "pml/scaling.hpp"

namespace pml::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::size_t default_threads() {
  if (const char* env = std::getenv("PML_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string format = "csv";
  std::vector<double> p;
  std::size_t dim = 2;
  double side = 8.0;
  double intensity = 1.0;
  std::vector<double> radii;
  std::size_t seeds = 0;
  std::vector<std::string> overrides;
  int verbosity = 0;
};

struct Context {
  Globals g;
  CLI::App* app = nullptr;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  bool given(const std::string& flag) const { return app->get_option(flag)->count() > 0; }
  double p_or(double fallback) const { return g.p.empty() ? fallback : g.p.front(); }

  void log(const std::string& msg) const {
    if (g.verbosity > 0) *err << msg << '\n';
  }

  fs::path out_path(const std::string& name) const {
    fs::create_directories(g.out);
    return fs::path(g.out) / name;
  }

  void write_file(const std::string& name, const std::string& body) const {
    const fs::path path = out_path(name);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open " + path.string() + " for writing");
    f << body;
    log("wrote " + path.string());
  }

  // Snapshot of the parameters a subcommand actually used.
  void snapshot(const std::string& command, json params) const {
    json j;
    j["command"] = command;
    j["parameters"] = std::move(params);
    j["metadata"] = {{"tool", "pml"}, {"version", "0.1.0"}};
    write_file(command + "_config.json", j.dump(2) + "\n");
  }
};

PointCloud load_or_sample(const Context& c, const std::string& path, std::string_view role) {
  if (!path.empty()) return load_cloud(path);
  return sample_poisson(c.g.intensity, Domain::torus(c.g.dim, c.g.side), derive_seed(c.g.seed, role));
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

// ---- sample ---------------------------------------------------------------

struct SampleArgs {
  std::string name = "cloud";
  bool binary = false;
};

int cmd_sample(const Context& c, const SampleArgs& a) {
  const PointCloud cloud =
      sample_poisson(c.g.intensity, Domain::torus(c.g.dim, c.g.side), c.g.seed);
  std::ostringstream body;
  if (a.binary) {
    write_cloud_binary(cloud, body);
    c.write_file(a.name + ".pmlc", body.str());
  } else {
    write_cloud_csv(cloud, body);
    c.write_file(a.name + ".csv", body.str());
  }
  c.snapshot("sample", {{"dim", c.g.dim}, {"side", c.g.side}, {"intensity", c.g.intensity},
                        {"seed", c.g.seed}, {"binary", a.binary}});
  *c.out << "points," << cloud.size() << '\n';
  return kOk;
}

// ---- match ----------------------------------------------------------------

struct MatchArgs {
  std::string mu, nu;
  std::size_t max_cycle = 3;
  std::uint64_t budget = 1'000'000;
};

int cmd_match(const Context& c, const MatchArgs& a) {
  const double p = c.p_or(2.0);
  const PointCloud mu = load_or_sample(c, a.mu, "mu");
  const PointCloud nu = a.nu.empty()
                            ? sample_uniform(mu.size(), mu.domain(), derive_seed(c.g.seed, "nu"))
                            : load_cloud(a.nu);
  if (mu.size() != nu.size()) throw InvalidArgument("match: clouds have different sizes");
  const Matching m = solve_assignment_geometric(mu, nu, p);
  AuditOptions ao;
  ao.budget = a.budget;
  ao.seed = c.g.seed;
  const AuditResult audit = check_cyclical_monotonicity(mu, nu, m, p, a.max_cycle, ao);

  std::ostringstream rows;
  write_matching_csv(m, mu, nu, p, rows);
  c.write_file("matching.csv", rows.str());
  c.snapshot("match", {{"mu", a.mu}, {"nu", a.nu}, {"p", p}, {"seed", c.g.seed},
                       {"max_cycle", a.max_cycle}, {"budget", a.budget}});
  if (c.g.format == "json") {
    json j;
    j["n"] = m.size();
    j["p"] = p;
    j["cost"] = m.cost;
    j["audit"] = json::parse(audit.to_json());
    *c.out << j.dump(2) << '\n';
  } else {
    *c.out << "n,p,cost,audit_clean,audit_exhaustive,cycles_checked\n"
           << m.size() << ',' << format_double(p) << ',' << format_double(m.cost) << ','
           << bool_str(audit.clean()) << ',' << bool_str(audit.exhaustive) << ','
           << audit.cycles_checked << '\n';
  }
  return kOk;
}

// ---- moser ----------------------------------------------------------------

struct MoserArgs {
  std::string mu;
  MoserOptions options;
};

int cmd_moser(const Context& c, const MoserArgs& a) {
  const double p = c.p_or(2.0);
  const PointCloud mu = load_or_sample(c, a.mu, "mu");
  const MoserCertificate cert = moser_upper_bound(mu, p, a.options);
  c.write_file("moser.json", cert.to_json() + "\n");
  c.snapshot("moser", {{"mu", a.mu}, {"p", p}, {"dim", mu.dim()}, {"side", mu.domain().side()},
                       {"seed", c.g.seed}, {"nodes_per_unit", a.options.nodes_per_unit},
                       {"grid_nodes", a.options.grid_nodes}, {"n_min", a.options.n_min}});
  *c.out << cert.to_json() << '\n';
  return kOk;
}

// ---- cone -----------------------------------------------------------------

struct ConeArgs {
  double aperture = 0.5;
  std::uint64_t samples = 1'000'000;
  std::string sampler = "grid";
};

int cmd_cone(const Context& c, const ConeArgs& a) {
  const std::vector<double> ps = c.g.p.empty() ? std::vector<double>{1.25, 1.5, 2, 3, 4} : c.g.p;
  ConeCheckOptions o;
  o.budget = a.samples;
  o.sampler = a.sampler == "random" ? Sampler::Random : Sampler::Grid;
  o.seed = c.g.seed;
  json certs = json::array();
  std::ostringstream table;
  table << "p,aperture,c0,ok,tail_ok,samples,counterexamples,min_F\n";
  bool all_ok = true;
  for (double p : ps) {
    const double c0 = cone_vertex_constant(p, a.aperture);
    const ConeSpec cone = ConeSpec::canonical(p, a.aperture, c0);
    const ConeCheck r = verify_cone_in_U(cone, o);
    all_ok = all_ok && r.ok;
    table << format_double(p) << ',' << format_double(a.aperture) << ',' << format_double(c0) << ','
          << bool_str(r.ok) << ',' << bool_str(r.tail_ok) << ',' << r.samples << ','
          << r.counterexample_count << ',' << format_double(r.min_F) << '\n';
    certs.push_back({{"cone", json::parse(cone.to_json())}, {"check", json::parse(r.to_json())}});
  }
  c.write_file("cone.json", certs.dump(2) + "\n");
  c.snapshot("cone", {{"p", ps}, {"aperture", a.aperture}, {"samples", a.samples},
                      {"sampler", a.sampler}, {"seed", c.g.seed}});
  if (c.g.format == "json") {
    *c.out << certs.dump(2) << '\n';
  } else {
    *c.out << table.str();
  }
  return all_ok ? kOk : kViolations;
}

// ---- audit ----------------------------------------------------------------

struct AuditArgs {
  std::string mu, nu, matching;
  std::size_t max_cycle = 3;
  std::uint64_t budget = 1'000'000;
  double tolerance = 1e-9;
};

int cmd_audit(const Context& c, const AuditArgs& a) {
  const double p = c.p_or(2.0);
  const PointCloud mu = load_cloud(a.mu);
  const PointCloud nu = load_cloud(a.nu);
  std::ifstream in(a.matching);
  if (!in) throw InvalidArgument("cannot open " + a.matching);
  const Matching m = read_matching_csv(in);
  AuditOptions ao;
  ao.budget = a.budget;
  ao.tolerance = a.tolerance;
  ao.seed = c.g.seed;
  const AuditResult audit = check_cyclical_monotonicity(mu, nu, m, p, a.max_cycle, ao);
  json j;
  j["p"] = p;
  j["monotonicity"] = json::parse(audit.to_json());
  if (mu.dim() == 2) {
    const PlanarityResult pr = is_planar(mu, nu, m);
    j["planarity"] = {{"planar", pr.planar}, {"crossings", pr.crossings}};
  } else {
    j["planarity"] = nullptr;
  }
  c.write_file("audit.json", j.dump(2) + "\n");
  c.snapshot("audit", {{"mu", a.mu}, {"nu", a.nu}, {"matching", a.matching}, {"p", p},
                       {"max_cycle", a.max_cycle}, {"budget", a.budget},
                       {"tolerance", a.tolerance}, {"seed", c.g.seed}});
  if (c.g.format == "json") {
    *c.out << j.dump(2) << '\n';
  } else {
    *c.out << "clean,exhaustive,cycles_checked,violations,planar\n"
           << bool_str(audit.clean()) << ',' << bool_str(audit.exhaustive) << ','
           << audit.cycles_checked << ',' << audit.violation_count << ','
           << (mu.dim() == 2 ? bool_str(j["planarity"]["planar"].get<bool>()) : "na") << '\n';
  }
  return audit.clean() ? kOk : kViolations;
}

// ---- scaling --------------------------------------------------------------

int cmd_scaling(const Context& c) {
  std::vector<std::string> overrides;
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s + "]";
  };
  // Flags sit between the file and the explicit --set overrides.
  if (c.given("--dim")) overrides.push_back("dim=" + std::to_string(c.g.dim));
  if (c.given("--p")) overrides.push_back("p=" + format_double(c.g.p.front()));
  if (c.given("--radii")) overrides.push_back("radii=" + list(c.g.radii));
  if (c.given("--seeds")) overrides.push_back("seeds=" + std::to_string(c.g.seeds));
  if (c.given("--seed")) overrides.push_back("seed=" + std::to_string(c.g.seed));
  if (c.given("--intensity")) overrides.push_back("intensity=" + format_double(c.g.intensity));
  if (c.given("--threads")) overrides.push_back("threads=" + std::to_string(c.g.threads));
  overrides.insert(overrides.end(), c.g.overrides.begin(), c.g.overrides.end());

  const std::string resolved = resolve_config(
      c.g.config.empty() ? std::nullopt : std::optional<std::string>(c.g.config), overrides);
  ExperimentConfig cfg = experiment_from_json(resolved);
  if (cfg.threads == 0) cfg.threads = default_threads();
  c.write_file("scaling_config.json", resolved + "\n");
  c.log("running " + std::to_string(cfg.radii.size() * cfg.seeds) + " cells on " +
        std::to_string(cfg.threads) + " threads");

  const ScalingReport report = run_scaling(cfg);
  if (!cfg.csv_path.empty()) c.write_file(cfg.csv_path, report.to_csv());
  if (!cfg.json_path.empty()) c.write_file(cfg.json_path, report.to_json() + "\n");
  if (!cfg.svg_path.empty()) c.write_file(cfg.svg_path, report.to_svg());
  if (c.g.format == "json") {
    *c.out << report.to_json() << '\n';
  } else {
    *c.out << report.to_csv();
  }
  return report.failures == 0 ? kOk : kPartialFailure;
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::string statistic;
  double q = 0.0;
};

int cmd_fit(const Context& c, const FitArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw InvalidArgument("cannot open " + a.input);
  std::string line;
  if (!std::getline(in, line) || line.rfind("statistic,R,seed,value", 0) != 0) {
    throw InvalidArgument("fit: expected a long-format CSV with header statistic,R,seed,value");
  }
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  std::vector<std::string> order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string stat, r, seed, value;
    std::getline(ss, stat, ',');
    std::getline(ss, r, ',');
    std::getline(ss, seed, ',');
    std::getline(ss, value, ',');
    if (!a.statistic.empty() && stat != a.statistic) continue;
    if (value == "nan" || value.empty()) continue;
    if (!series.count(stat)) order.push_back(stat);
    series[stat].emplace_back(std::stod(r), std::stod(value));
  }
  if (series.empty()) throw InvalidArgument("fit: no usable rows");
  const double q = a.q > 0.0 ? a.q : 0.5 * c.p_or(2.0);
  json out = json::object();
  std::ostringstream table;
  table << "statistic,log_a,log_b,log_a_low,log_a_high,power_a,power_b,power_s,score,preferred\n";
  for (const auto& name : order) {
    const ModelComparison mc = compare_growth(series[name], q);
    out[name] = {{"log", {{"a", mc.log_fit.a}, {"b", mc.log_fit.b}, {"q", q}, {"rss", mc.log_fit.rss},
                          {"aic", mc.log_fit.aic}, {"a_ci95", {mc.log_fit.a_low, mc.log_fit.a_high}}}},
                 {"power", {{"a", mc.power_fit.a}, {"b", mc.power_fit.b}, {"s", mc.power_fit.exponent},
                            {"rss", mc.power_fit.rss}, {"aic", mc.power_fit.aic}}},
                 {"score", mc.score},
                 {"preferred", mc.log_preferred() ? "log" : "power"}};
    table << name << ',' << format_double(mc.log_fit.a) << ',' << format_double(mc.log_fit.b) << ','
          << format_double(mc.log_fit.a_low) << ',' << format_double(mc.log_fit.a_high) << ','
          << format_double(mc.power_fit.a) << ',' << format_double(mc.power_fit.b) << ','
          << format_double(mc.power_fit.exponent) << ',' << format_double(mc.score) << ','
          << (mc.log_preferred() ? "log" : "power") << '\n';
  }
  c.write_file("fits.json", out.dump(2) + "\n");
  c.snapshot("fit", {{"input", a.input}, {"statistic", a.statistic}, {"q", q}});
  if (c.g.format == "json") {
    *c.out << out.dump(2) << '\n';
  } else {
    *c.out << table.str();
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context c;
  c.out = &out;
  c.err = &err;
  Globals& g = c.g;

  CLI::App app{"pml: optimal matching and transport laboratory for Poisson point clouds", "pml"};
  c.app = &app;
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--config", g.config, "Experiment config file (.toml or .json)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (default: PML_THREADS or logical cores)");
  app.add_option("--format", g.format, "Stdout format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--p", g.p, "Cost exponent; a comma-separated list for cone")->delimiter(',');
  app.add_option("--dim", g.dim, "Dimension")->capture_default_str();
  app.add_option("--side", g.side, "Torus side length")->capture_default_str();
  app.add_option("--intensity", g.intensity, "Poisson intensity")->capture_default_str();
  app.add_option("--radii", g.radii, "Comma-separated radii")->delimiter(',');
  app.add_option("--seeds", g.seeds, "Seeds per radius");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");
  app.add_flag("-v,--verbose", g.verbosity, "Verbose logging to stderr");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Write a Poisson point cloud");
  sample->add_option("--name", sa.name, "Output file stem")->capture_default_str();
  sample->add_flag("--binary", sa.binary, "Write the PMLC binary form instead of CSV");

  MatchArgs ma;
  auto* match = app.add_subcommand("match", "Exact optimal matching with a monotonicity audit");
  match->add_option("--mu", ma.mu, "First cloud file (sampled when omitted)");
  match->add_option("--nu", ma.nu, "Second cloud file (sampled when omitted)");
  match->add_option("--max-cycle", ma.max_cycle, "Longest audited cycle")->capture_default_str();
  match->add_option("--budget", ma.budget, "Cycle evaluation budget")->capture_default_str();

  MoserArgs mo;
  auto* moser = app.add_subcommand("moser", "Upper-bound certificate for the torus cost to Lebesgue");
  moser->add_option("--mu", mo.mu, "Cloud file on a torus (sampled when omitted)");
  moser->add_option("--nodes-per-unit", mo.options.nodes_per_unit, "Grid nodes per unit length")
      ->capture_default_str();
  moser->add_option("--grid-nodes", mo.options.grid_nodes, "Explicit nodes per axis");
  moser->add_option("--n-min", mo.options.n_min, "Density floor")->capture_default_str();

  ConeArgs ca;
  auto* cone = app.add_subcommand("cone", "Cone vertex constants and their verification");
  cone->add_option("--aperture", ca.aperture, "Cone half-angle in radians")->capture_default_str();
  cone->add_option("--samples", ca.samples, "Samples per cone")->capture_default_str();
  cone->add_option("--sampler", ca.sampler, "Sampling scheme")
      ->check(CLI::IsMember({"grid", "random"}))
      ->capture_default_str();

  AuditArgs aa;
  auto* audit = app.add_subcommand("audit", "Planarity and cyclical monotonicity of a matching");
  audit->add_option("--mu", aa.mu, "First cloud file")->required();
  audit->add_option("--nu", aa.nu, "Second cloud file")->required();
  audit->add_option("--matching", aa.matching, "Matching CSV (i,j,...)")->required();
  audit->add_option("--max-cycle", aa.max_cycle, "Longest audited cycle")->capture_default_str();
  audit->add_option("--budget", aa.budget, "Cycle evaluation budget")->capture_default_str();
  audit->add_option("--tolerance", aa.tolerance, "Relative violation tolerance")->capture_default_str();

  auto* scaling = app.add_subcommand("scaling", "Dyadic-radius scaling experiment");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Growth-law fits from a scaling CSV");
  fit->add_option("--input", fa.input, "Long-format CSV")->required();
  fit->add_option("--statistic", fa.statistic, "Only this statistic");
  fit->add_option("--q", fa.q, "Logarithm power (default p/2)");

  std::vector<std::string> argv_store{"pml"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sample) return cmd_sample(c, sa);
    if (*match) return cmd_match(c, ma);
    if (*moser) return cmd_moser(c, mo);
    if (*cone) return cmd_cone(c, ca);
    if (*audit) return cmd_audit(c, aa);
    if (*scaling) return cmd_scaling(c);
    if (*fit) return cmd_fit(c, fa);
  } catch (const std::exception& e) {
    err << "pml: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace pml::cli
