#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "pml/errors.hpp"
#include "pml/geometry.hpp"

namespace pml {

namespace {

// Error-free transformations (Knuth two-sum, FMA two-product).
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bv = s - a;
  const double av = s - bv;
  e = (a - av) + (b - bv);
}

inline void two_product(double a, double b, double& p, double& e) {
  p = a * b;
  e = std::fma(a, b, -p);
}

// Exact sign of a sum of doubles, using a non-overlapping expansion built
// one term at a time (Shewchuk's Grow-Expansion).
template <std::size_t N>
int exact_sum_sign(const std::array<double, N>& terms) {
  std::array<double, N> expansion{};
  std::size_t len = 0;
  for (double t : terms) {
    double q = t;
    std::size_t out = 0;
    for (std::size_t i = 0; i < len; ++i) {
      double s, e;
      two_sum(q, expansion[i], s, e);
      if (e != 0.0) expansion[out++] = e;
      q = s;
    }
    if (q != 0.0) expansion[out++] = q;
    len = out;
  }
  // The most significant component carries the sign.
  for (std::size_t i = len; i-- > 0;) {
    if (expansion[i] > 0.0) return 1;
    if (expansion[i] < 0.0) return -1;
  }
  return 0;
}

bool on_closed_segment(std::span<const double> a, std::span<const double> b,
                       std::span<const double> c) {
  // c is known to be collinear with a and b.
  return std::min(a[0], b[0]) <= c[0] && c[0] <= std::max(a[0], b[0]) &&
         std::min(a[1], b[1]) <= c[1] && c[1] <= std::max(a[1], b[1]);
}

bool same_point(std::span<const double> x, std::span<const double> y) {
  return x[0] == y[0] && x[1] == y[1];
}

}  // namespace

int orient2d(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  if (a.size() < 2 || b.size() < 2 || c.size() < 2) {
    throw InvalidArgument("orient2d: points must be planar");
  }
  const double detleft = (a[0] - c[0]) * (b[1] - c[1]);
  const double detright = (a[1] - c[1]) * (b[0] - c[0]);
  const double det = detleft - detright;
  const double bound = (std::fabs(detleft) + std::fabs(detright)) *
                       (8.0 * std::numeric_limits<double>::epsilon());
  if (det > bound) return 1;
  if (-det > bound) return -1;

  // det = ax*by - ax*cy - cx*by - ay*bx + ay*cx + cy*bx, every product split exactly.
  std::array<double, 12> terms{};
  const std::array<std::array<double, 3>, 6> products{{
      {a[0], b[1], 1.0},
      {a[0], c[1], -1.0},
      {c[0], b[1], -1.0},
      {a[1], b[0], -1.0},
      {a[1], c[0], 1.0},
      {c[1], b[0], 1.0},
  }};
  for (std::size_t k = 0; k < products.size(); ++k) {
    double p, e;
    two_product(products[k][0], products[k][1], p, e);
    terms[2 * k] = products[k][2] * p;
    terms[2 * k + 1] = products[k][2] * e;
  }
  return exact_sum_sign(terms);
}

bool segments_cross(std::span<const double> a1, std::span<const double> b1,
                    std::span<const double> a2, std::span<const double> b2) {
  if (same_point(a1, a2) || same_point(a1, b2) || same_point(b1, a2) || same_point(b1, b2)) {
    return false;
  }
  const int o1 = orient2d(a1, b1, a2);
  const int o2 = orient2d(a1, b1, b2);
  const int o3 = orient2d(a2, b2, a1);
  const int o4 = orient2d(a2, b2, b1);

  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && on_closed_segment(a1, b1, a2)) return true;
  if (o2 == 0 && on_closed_segment(a1, b1, b2)) return true;
  if (o3 == 0 && on_closed_segment(a2, b2, a1)) return true;
  if (o4 == 0 && on_closed_segment(a2, b2, b1)) return true;
  return false;
}

bool segments_cross(const Segment& s1, const Segment& s2) {
  if (s1.a.size() != 2 || s1.b.size() != 2 || s2.a.size() != 2 || s2.b.size() != 2) {
    throw InvalidArgument("segments_cross: segments must be planar");
  }
  return segments_cross(s1.a, s1.b, s2.a, s2.b);
}

}  // namespace pml
