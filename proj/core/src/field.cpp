#include "pml/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "pml/errors.hpp"

namespace pml {

std::size_t Grid::size() const noexcept {
  std::size_t s = 1;
  for (std::size_t a = 0; a < dim; ++a) s *= n;
  return s;
}

namespace {

void check_grid(const Grid& g) {
  if (g.dim == 0 || g.dim > 3) throw InvalidArgument("grid: dimension must be 1, 2 or 3");
  if (g.n < 4) throw InvalidArgument("grid: need at least 4 nodes per axis");
  if (!(g.side > 0.0) || !std::isfinite(g.side)) throw InvalidArgument("grid: side must be positive");
}

}  // namespace

ScalarField::ScalarField(Grid grid) : grid_(grid) {
  check_grid(grid_);
  values_.assign(grid_.size(), 0.0);
}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  check_grid(grid_);
  if (values_.size() != grid_.size()) throw InvalidArgument("field: value count does not match grid");
}

std::size_t ScalarField::flat_index(std::span<const long> index) const {
  if (index.size() != grid_.dim) throw InvalidArgument("field: index dimension mismatch");
  const long n = static_cast<long>(grid_.n);
  std::size_t idx = 0;
  for (long i : index) {
    long k = i % n;
    if (k < 0) k += n;
    idx = idx * grid_.n + static_cast<std::size_t>(k);
  }
  return idx;
}

double ScalarField::at(std::span<const long> index) const { return values_[flat_index(index)]; }

double ScalarField::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

double ScalarField::integral() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) *
         std::pow(grid_.spacing(), static_cast<double>(grid_.dim));
}

double ScalarField::l2_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s / static_cast<double>(values_.size()));
}

ScalarField VectorField::norm() const {
  ScalarField out(grid);
  for (const auto& c : components) {
    for (std::size_t i = 0; i < c.size(); ++i) out[i] += c[i] * c[i];
  }
  for (double& v : out.values()) v = std::sqrt(v);
  return out;
}

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Real <-> half-complex transform pair for one grid.
class Spectrum {
 public:
  explicit Spectrum(const Grid& g) : grid_(g) {
    half_ = g.n / 2 + 1;
    complex_size_ = g.size() / g.n * half_;
    real_ = fftw_alloc_real(g.size());
    cplx_ = fftw_alloc_complex(complex_size_);
    std::vector<int> dims(g.dim, static_cast<int>(g.n));
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c(static_cast<int>(g.dim), dims.data(), real_, cplx_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r(static_cast<int>(g.dim), dims.data(), cplx_, real_, FFTW_ESTIMATE);
  }
  ~Spectrum() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(cplx_);
  }
  Spectrum(const Spectrum&) = delete;
  Spectrum& operator=(const Spectrum&) = delete;

  std::size_t complex_size() const noexcept { return complex_size_; }

  void forward(std::span<const double> values, std::vector<std::complex<double>>& out) {
    std::copy(values.begin(), values.end(), real_);
    fftw_execute(forward_);
    out.resize(complex_size_);
    for (std::size_t k = 0; k < complex_size_; ++k) out[k] = {cplx_[k][0], cplx_[k][1]};
  }

  /// Inverse transform including the 1/n^d normalization.
  void backward(const std::vector<std::complex<double>>& in, std::span<double> out) {
    for (std::size_t k = 0; k < complex_size_; ++k) {
      cplx_[k][0] = in[k].real();
      cplx_[k][1] = in[k].imag();
    }
    fftw_execute(backward_);
    const double norm = 1.0 / static_cast<double>(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = real_[i] * norm;
  }

  /// Signed integer wave vector of half-complex entry k.
  void wave_vector(std::size_t k, std::vector<long>& out) const {
    out.resize(grid_.dim);
    out[grid_.dim - 1] = static_cast<long>(k % half_);
    std::size_t rest = k / half_;
    const long n = static_cast<long>(grid_.n);
    for (std::size_t a = grid_.dim - 1; a-- > 0;) {
      long i = static_cast<long>(rest % grid_.n);
      rest /= grid_.n;
      out[a] = i <= n / 2 ? i : i - n;
    }
  }

  bool is_nyquist(long k) const noexcept {
    return grid_.n % 2 == 0 && (k == static_cast<long>(grid_.n) / 2 || k == -static_cast<long>(grid_.n) / 2);
  }

 private:
  Grid grid_;
  std::size_t half_ = 0, complex_size_ = 0;
  double* real_ = nullptr;
  fftw_complex* cplx_ = nullptr;
  fftw_plan forward_ = nullptr, backward_ = nullptr;
};

Grid torus_grid(const PointCloud& cloud, std::size_t n) {
  const Domain& dom = cloud.domain();
  if (!dom.is_torus()) throw InvalidArgument("mollify: the cloud must live on a torus");
  Grid g{dom.dim(), n, dom.side()};
  check_grid(g);
  return g;
}

double wave_norm2(const std::vector<long>& k, double side) {
  double s = 0.0;
  for (long x : k) s += static_cast<double>(x) * static_cast<double>(x);
  return s / (side * side);
}

// 1D periodic Gaussian of standard deviation s at offset x, images within 8 s.
double wrapped_gaussian_1d(double x, double side, double s) {
  const double reach = 8.0 * s;
  double d = x - side * std::nearbyint(x / side);
  double total = 0.0;
  const long jmax = static_cast<long>(std::ceil(reach / side)) + 1;
  for (long j = -jmax; j <= jmax; ++j) {
    const double y = d + static_cast<double>(j) * side;
    if (std::fabs(y) <= reach) total += std::exp(-0.5 * y * y / (s * s));
  }
  return total / (s * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

ScalarField mollify(const PointCloud& cloud, std::size_t n, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("mollify: scale must be positive");
  const Grid g = torus_grid(cloud, n);
  const std::size_t d = g.dim;
  const double h = g.spacing();
  const double sigma2 = scale * scale;

  // Spread with a narrower Gaussian tau, then widen to sigma in Fourier
  // space.  tau is the smallest width whose aliasing error is below e^-36.
  const double c = 36.0 * sigma2 * h * h / (2.0 * std::numbers::pi * std::numbers::pi);
  const double disc = sigma2 * sigma2 - 4.0 * c;
  const double tau2 = disc > 0.0 ? 0.5 * (sigma2 - std::sqrt(disc)) : 0.5 * sigma2;
  const double tau = std::sqrt(tau2);
  const long reach = static_cast<long>(std::ceil(8.5 * tau / h));
  const long width = 2 * reach + 2;
  const long nn = static_cast<long>(g.n);
  const double norm1 = 1.0 / (tau * std::sqrt(2.0 * std::numbers::pi));

  std::vector<double> grid_vals(g.size(), 0.0);
  std::vector<double> w(d * static_cast<std::size_t>(width));
  std::vector<long> base(d), off(d);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto x = cloud.point(i);
    for (std::size_t a = 0; a < d; ++a) {
      base[a] = static_cast<long>(std::floor(x[a] / h));
      for (long m = 0; m < width; ++m) {
        const double node = static_cast<double>(base[a] - reach + m) * h;
        const double y = node - x[a];
        w[a * static_cast<std::size_t>(width) + static_cast<std::size_t>(m)] =
            norm1 * std::exp(-0.5 * y * y / tau2);
      }
    }
    std::fill(off.begin(), off.end(), 0);
    while (true) {
      double weight = 1.0;
      std::size_t idx = 0;
      for (std::size_t a = 0; a < d; ++a) {
        weight *= w[a * static_cast<std::size_t>(width) + static_cast<std::size_t>(off[a])];
        long k = (base[a] - reach + off[a]) % nn;
        if (k < 0) k += nn;
        idx = idx * g.n + static_cast<std::size_t>(k);
      }
      grid_vals[idx] += weight;
      std::size_t a = d;
      bool done = true;
      while (a-- > 0) {
        if (++off[a] < width) {
          done = false;
          break;
        }
        off[a] = 0;
      }
      if (done) break;
    }
  }

  Spectrum fft(g);
  std::vector<std::complex<double>> hat;
  fft.forward(grid_vals, hat);
  std::vector<long> k;
  const double factor = -2.0 * std::numbers::pi * std::numbers::pi * (sigma2 - tau2);
  for (std::size_t j = 0; j < hat.size(); ++j) {
    fft.wave_vector(j, k);
    hat[j] *= std::exp(factor * wave_norm2(k, g.side));
  }
  ScalarField out(g);
  fft.backward(hat, out.values());
  return out;
}

double mollified_value(const PointCloud& cloud, std::span<const double> x, double scale) {
  const Domain& dom = cloud.domain();
  if (!dom.is_torus()) throw InvalidArgument("mollify: the cloud must live on a torus");
  if (x.size() != dom.dim()) throw InvalidArgument("mollify: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    double v = 1.0;
    for (std::size_t a = 0; a < x.size() && v != 0.0; ++a) {
      v *= wrapped_gaussian_1d(x[a] - p[a], dom.side(), scale);
    }
    total += v;
  }
  return total;
}

ScalarField mollify_direct(const PointCloud& cloud, std::size_t n, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("mollify: scale must be positive");
  const Grid g = torus_grid(cloud, n);
  ScalarField out(g);
  std::vector<double> x(g.dim);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    std::size_t rest = idx;
    for (std::size_t a = g.dim; a-- > 0;) {
      x[a] = static_cast<double>(rest % g.n) * g.spacing();
      rest /= g.n;
    }
    out[idx] = mollified_value(cloud, x, scale);
  }
  return out;
}

ScalarField solve_poisson(const ScalarField& rhs) {
  const double rms = rhs.l2_norm();
  const double mean = rhs.mean();
  if (std::fabs(mean) > 1e-9 * rms) {
    throw InvalidArgument("solve_poisson: right-hand side must have mean zero");
  }
  const Grid& g = rhs.grid();
  Spectrum fft(g);
  std::vector<std::complex<double>> hat;
  fft.forward(rhs.values(), hat);
  std::vector<long> k;
  const double c = 4.0 * std::numbers::pi * std::numbers::pi;
  for (std::size_t j = 0; j < hat.size(); ++j) {
    fft.wave_vector(j, k);
    const double k2 = wave_norm2(k, g.side);
    hat[j] = k2 > 0.0 ? hat[j] / (c * k2) : std::complex<double>(0.0, 0.0);
  }
  ScalarField out(g);
  fft.backward(hat, out.values());
  return out;
}

namespace {

// Shift of a flat index by `step` along `axis` (periodic).
std::size_t neighbour(const Grid& g, std::size_t idx, std::size_t axis, long step) {
  std::size_t stride = 1;
  for (std::size_t a = g.dim - 1; a > axis; --a) stride *= g.n;
  const long i = static_cast<long>((idx / stride) % g.n);
  long j = (i + step) % static_cast<long>(g.n);
  if (j < 0) j += static_cast<long>(g.n);
  return idx + (static_cast<std::size_t>(j) - static_cast<std::size_t>(i)) * stride;
}

}  // namespace

ScalarField negative_laplacian(const ScalarField& f, Derivative method) {
  const Grid& g = f.grid();
  ScalarField out(g);
  if (method == Derivative::Centered) {
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      double s = 0.0;
      for (std::size_t a = 0; a < g.dim; ++a) {
        s += 2.0 * f[idx] - f[neighbour(g, idx, a, 1)] - f[neighbour(g, idx, a, -1)];
      }
      out[idx] = s * inv_h2;
    }
    return out;
  }
  Spectrum fft(g);
  std::vector<std::complex<double>> hat;
  fft.forward(f.values(), hat);
  std::vector<long> k;
  const double c = 4.0 * std::numbers::pi * std::numbers::pi;
  for (std::size_t j = 0; j < hat.size(); ++j) {
    fft.wave_vector(j, k);
    hat[j] *= c * wave_norm2(k, g.side);
  }
  fft.backward(hat, out.values());
  return out;
}

VectorField gradient(const ScalarField& f, Derivative method) {
  const Grid& g = f.grid();
  VectorField out{g, std::vector<std::vector<double>>(g.dim, std::vector<double>(g.size(), 0.0))};
  if (method == Derivative::Centered) {
    const double inv = 0.5 / g.spacing();
    for (std::size_t a = 0; a < g.dim; ++a) {
      for (std::size_t idx = 0; idx < g.size(); ++idx) {
        out.components[a][idx] = (f[neighbour(g, idx, a, 1)] - f[neighbour(g, idx, a, -1)]) * inv;
      }
    }
    return out;
  }
  Spectrum fft(g);
  std::vector<std::complex<double>> hat, tmp;
  fft.forward(f.values(), hat);
  std::vector<long> k;
  const double c = 2.0 * std::numbers::pi / g.side;
  for (std::size_t a = 0; a < g.dim; ++a) {
    tmp = hat;
    for (std::size_t j = 0; j < tmp.size(); ++j) {
      fft.wave_vector(j, k);
      if (fft.is_nyquist(k[a])) {
        tmp[j] = 0.0;
      } else {
        tmp[j] *= std::complex<double>(0.0, c * static_cast<double>(k[a]));
      }
    }
    fft.backward(tmp, out.components[a]);
  }
  return out;
}

ScalarField divergence(const VectorField& v, Derivative method) {
  const Grid& g = v.grid;
  if (v.components.size() != g.dim) throw InvalidArgument("divergence: component count mismatch");
  ScalarField out(g);
  if (method == Derivative::Centered) {
    const double inv = 0.5 / g.spacing();
    for (std::size_t a = 0; a < g.dim; ++a) {
      const auto& c = v.components[a];
      for (std::size_t idx = 0; idx < g.size(); ++idx) {
        out[idx] += (c[neighbour(g, idx, a, 1)] - c[neighbour(g, idx, a, -1)]) * inv;
      }
    }
    return out;
  }
  Spectrum fft(g);
  std::vector<std::complex<double>> acc(fft.complex_size(), 0.0), hat;
  std::vector<long> k;
  const double c = 2.0 * std::numbers::pi / g.side;
  for (std::size_t a = 0; a < g.dim; ++a) {
    fft.forward(v.components[a], hat);
    for (std::size_t j = 0; j < hat.size(); ++j) {
      fft.wave_vector(j, k);
      if (!fft.is_nyquist(k[a])) acc[j] += hat[j] * std::complex<double>(0.0, c * static_cast<double>(k[a]));
    }
  }
  fft.backward(acc, out.values());
  return out;
}

double gradient_energy(const ScalarField& phi, double p, Derivative method) {
  if (!(p >= 1.0)) throw InvalidArgument("gradient_energy: p must be >= 1");
  const ScalarField mag = gradient(phi, method).norm();
  double s = 0.0;
  for (double v : mag.values()) s += std::pow(v, p);
  return s / (p * static_cast<double>(mag.size()));
}

void write_field_csv(const ScalarField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path + " for writing");
  const Grid& g = f.grid();
  out << "# dim=" << g.dim << " n=" << g.n << " side=" << std::setprecision(17) << g.side << '\n';
  for (std::size_t a = 0; a < g.dim; ++a) out << 'i' << a << ',';
  out << "value\n";
  std::vector<std::size_t> idx(g.dim);
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    std::size_t rest = flat;
    for (std::size_t a = g.dim; a-- > 0;) {
      idx[a] = rest % g.n;
      rest /= g.n;
    }
    for (std::size_t a = 0; a < g.dim; ++a) out << idx[a] << ',';
    out << std::setprecision(17) << f[flat] << '\n';
  }
}

void write_field_binary(const ScalarField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path + " for writing");
  out.write("PMLF", 4);
  detail::put_le<std::uint16_t>(out, 1);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(f.grid().dim));
  detail::put_le<std::uint64_t>(out, f.grid().n);
  detail::put_le<double>(out, f.grid().side);
  for (double v : f.values()) detail::put_le<double>(out, v);
}

ScalarField read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "PMLF") throw InvalidArgument(path + ": not a PMLF file");
  const auto version = detail::get_le<std::uint16_t>(in);
  if (version != 1) throw InvalidArgument(path + ": unsupported PMLF version");
  Grid g;
  g.dim = detail::get_le<std::uint16_t>(in);
  g.n = detail::get_le<std::uint64_t>(in);
  g.side = detail::get_le<double>(in);
  check_grid(g);
  std::vector<double> v(g.size());
  for (double& x : v) x = detail::get_le<double>(in);
  return ScalarField(g, std::move(v));
}

}  // namespace pml
