#include "pml/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "binary_io.hpp"
#include "pml/errors.hpp"

namespace pml {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s, const char* what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InvalidArgument(std::string(what) + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

std::vector<double> parse_list(std::string_view s) {
  std::vector<double> v;
  for (auto part : split(s, ',')) v.push_back(parse_double(part, "cloud header"));
  return v;
}

}  // namespace

void write_cloud_csv(const PointCloud& cloud, std::ostream& out) {
  const Domain& dom = cloud.domain();
  std::vector<double> lo(dom.dim()), hi(dom.dim());
  for (std::size_t a = 0; a < dom.dim(); ++a) {
    lo[a] = dom.lower(a);
    hi[a] = dom.upper(a);
  }
  out << "# pml-cloud v1 kind=" << (dom.is_torus() ? "torus" : "box") << " dim=" << dom.dim()
      << " lower=" << join(lo) << " upper=" << join(hi);
  if (cloud.seed()) out << " seed=" << *cloud.seed();
  out << '\n';
  for (std::size_t a = 0; a < dom.dim(); ++a) out << (a ? ",x" : "x") << a;
  out << '\n';
  for (std::size_t i = 0; i < cloud.size(); ++i) out << join(cloud.point(i)) << '\n';
}

PointCloud read_cloud_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# pml-cloud", 0) != 0) {
    throw InvalidArgument("cloud CSV: missing '# pml-cloud' header");
  }
  std::string kind;
  std::size_t dim = 0;
  std::vector<double> lo, hi;
  std::optional<std::uint64_t> seed;
  std::istringstream hs(line.substr(11));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "kind") kind = val;
    else if (key == "dim") dim = static_cast<std::size_t>(std::stoull(val));
    else if (key == "lower") lo = parse_list(val);
    else if (key == "upper") hi = parse_list(val);
    else if (key == "seed") seed = std::stoull(val);
  }
  if (dim == 0 || lo.size() != dim || hi.size() != dim) {
    throw InvalidArgument("cloud CSV: incomplete domain header");
  }
  Domain dom = kind == "torus" ? Domain::torus(dim, hi[0] - lo[0])
               : kind == "box" ? Domain::box(lo, hi)
                               : throw InvalidArgument("cloud CSV: unknown domain kind '" + kind + "'");
  if (!std::getline(in, line)) throw InvalidArgument("cloud CSV: missing column header");
  std::vector<double> coords;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto parts = split(line, ',');
    if (parts.size() != dim) throw InvalidArgument("cloud CSV: row has the wrong number of columns");
    for (auto part : parts) coords.push_back(parse_double(part, "cloud CSV"));
  }
  return PointCloud(std::move(dom), std::move(coords), seed);
}

void write_cloud_binary(const PointCloud& cloud, std::ostream& out) {
  const Domain& dom = cloud.domain();
  out.write("PMLC", 4);
  detail::put_le<std::uint16_t>(out, 1);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(dom.dim()));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dom.kind()));
  detail::put_le<std::uint8_t>(out, cloud.seed() ? 1 : 0);
  detail::put_le<std::uint64_t>(out, cloud.seed().value_or(0));
  for (std::size_t a = 0; a < dom.dim(); ++a) detail::put_le<double>(out, dom.lower(a));
  for (std::size_t a = 0; a < dom.dim(); ++a) detail::put_le<double>(out, dom.upper(a));
  detail::put_le<std::uint64_t>(out, cloud.size());
  for (double v : cloud.coords()) detail::put_le<double>(out, v);
}

PointCloud read_cloud_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "PMLC") throw InvalidArgument("not a PMLC stream");
  if (detail::get_le<std::uint16_t>(in) != 1) throw InvalidArgument("unsupported PMLC version");
  const std::size_t dim = detail::get_le<std::uint16_t>(in);
  const auto kind = detail::get_le<std::uint8_t>(in);
  const bool has_seed = detail::get_le<std::uint8_t>(in) != 0;
  const auto seed = detail::get_le<std::uint64_t>(in);
  std::vector<double> lo(dim), hi(dim);
  for (double& v : lo) v = detail::get_le<double>(in);
  for (double& v : hi) v = detail::get_le<double>(in);
  const auto count = detail::get_le<std::uint64_t>(in);
  if (dim == 0) throw InvalidArgument("PMLC: zero dimension");
  Domain dom = kind == 0 ? Domain::torus(dim, hi[0] - lo[0])
               : kind == 1 ? Domain::box(lo, hi)
                           : throw InvalidArgument("PMLC: unknown domain kind");
  std::vector<double> coords(count * dim);
  for (double& v : coords) v = detail::get_le<double>(in);
  return PointCloud(std::move(dom), std::move(coords),
                    has_seed ? std::optional<std::uint64_t>(seed) : std::nullopt);
}

namespace {

bool is_binary_path(const std::string& path) {
  auto ends = [&](std::string_view suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends(".bin") || ends(".pmlc");
}

}  // namespace

void save_cloud(const PointCloud& cloud, const std::string& path) {
  const bool bin = is_binary_path(path);
  std::ofstream out(path, bin ? std::ios::binary : std::ios::out);
  if (!out) throw InvalidArgument("cannot open " + path + " for writing");
  bin ? write_cloud_binary(cloud, out) : write_cloud_csv(cloud, out);
}

PointCloud load_cloud(const std::string& path) {
  const bool bin = is_binary_path(path);
  std::ifstream in(path, bin ? std::ios::binary : std::ios::in);
  if (!in) throw InvalidArgument("cannot open " + path);
  return bin ? read_cloud_binary(in) : read_cloud_csv(in);
}

void write_matching_csv(const Matching& m, const PointCloud& mu, const PointCloud& nu, double p,
                        std::ostream& out) {
  out << "i,j,mass,cost_contrib\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double c = cost_from_squared(dist_squared(mu.point(i), nu.point(m.target[i]), mu.domain()), p);
    out << i << ',' << m.target[i] << ",1," << format_double(c) << '\n';
  }
}

Matching read_matching_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("i,j", 0) != 0) {
    throw InvalidArgument("matching CSV: expected an 'i,j,...' header");
  }
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto parts = split(line, ',');
    if (parts.size() < 2) throw InvalidArgument("matching CSV: short row");
    const double i = parse_double(parts[0], "matching CSV"), j = parse_double(parts[1], "matching CSV");
    if (i < 0 || j < 0 || i != std::floor(i) || j != std::floor(j)) {
      throw InvalidArgument("matching CSV: indices must be non-negative integers");
    }
    rows.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  Matching m;
  m.target.assign(rows.size(), rows.size());
  for (auto [i, j] : rows) {
    if (i >= rows.size()) throw InvalidArgument("matching CSV: source index out of range");
    m.target[i] = j;
  }
  if (!m.is_permutation()) throw InvalidArgument("matching CSV: rows do not form a bijection");
  return m;
}

std::string matching_to_json(const Matching& m) {
  nlohmann::ordered_json j;
  j["size"] = m.size();
  j["cost"] = m.cost;
  j["target"] = m.target;
  return j.dump(2);
}

void write_plan_csv(const TransportPlan& plan, const CostMatrix& cost, std::ostream& out) {
  out << "i,j,mass,cost_contrib\n";
  for (const auto& e : plan.entries) {
    out << e.src << ',' << e.dst << ',' << format_double(e.mass) << ','
        << format_double(e.mass * cost(e.src, e.dst)) << '\n';
  }
}

std::string plan_to_json(const TransportPlan& plan) {
  nlohmann::ordered_json j;
  j["cost"] = plan.cost;
  j["marginal_violation"] = plan.marginal_violation();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : plan.entries) arr.push_back({e.src, e.dst, e.mass});
  j["entries"] = std::move(arr);
  return j.dump(2);
}

}  // namespace pml
