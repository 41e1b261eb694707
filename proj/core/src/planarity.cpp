#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "pml/errors.hpp"
#include "pml/monotonicity.hpp"

namespace pml {

namespace {

using Point2 = std::array<double, 2>;

struct Seg {
  Point2 a, b;
  std::size_t id;
};

bool cross(const Seg& s, const Seg& t) { return segments_cross(s.a, s.b, t.a, t.b); }

Seg shifted(const Seg& s, double dx, double dy) {
  return {{s.a[0] + dx, s.a[1] + dy}, {s.b[0] + dx, s.b[1] + dy}, s.id};
}

std::vector<Seg> matched_segments(const PointCloud& mu, const PointCloud& nu, const Matching& m) {
  const Domain& dom = mu.domain();
  std::vector<Seg> segs(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i);
    const auto y = nu.point(m.target[i]);
    segs[i].id = i;
    for (std::size_t a = 0; a < 2; ++a) {
      segs[i].a[a] = x[a];
      // Minimal image on the torus; Euclidean difference in a box.
      segs[i].b[a] = x[a] + dom.axis_delta(y[a], x[a], a);
    }
  }
  return segs;
}

void all_pairs(const std::vector<Seg>& segs, const Domain& dom,
               std::vector<std::pair<std::size_t, std::size_t>>& out) {
  const bool torus = dom.is_torus();
  const double l = dom.side();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (std::size_t j = i + 1; j < segs.size(); ++j) {
      bool hit = false;
      if (!torus) {
        hit = cross(segs[i], segs[j]);
      } else {
        for (int sx = -1; sx <= 1 && !hit; ++sx) {
          for (int sy = -1; sy <= 1 && !hit; ++sy) {
            hit = cross(segs[i], shifted(segs[j], sx * l, sy * l));
          }
        }
      }
      if (hit) out.emplace_back(i, j);
    }
  }
}

// Uniform bucketing of segment bounding boxes; pairs sharing a bucket are
// tested.  On a torus every periodic copy meeting the fundamental cell is
// inserted, so each crossing appears for some pair of copies.
void bucketed(const std::vector<Seg>& segs, const Domain& dom,
              std::vector<std::pair<std::size_t, std::size_t>>& out) {
  std::vector<Seg> items;
  double lo[2], hi[2];
  if (dom.is_torus()) {
    const double l = dom.side();
    for (const Seg& s : segs) {
      for (int sx = -1; sx <= 1; ++sx) {
        for (int sy = -1; sy <= 1; ++sy) {
          const Seg t = shifted(s, sx * l, sy * l);
          if (std::max(t.a[0], t.b[0]) < dom.lower(0) || std::min(t.a[0], t.b[0]) > dom.upper(0) ||
              std::max(t.a[1], t.b[1]) < dom.lower(1) || std::min(t.a[1], t.b[1]) > dom.upper(1)) {
            continue;
          }
          items.push_back(t);
        }
      }
    }
    for (std::size_t a = 0; a < 2; ++a) {
      lo[a] = dom.lower(a);
      hi[a] = dom.upper(a);
    }
  } else {
    items = segs;
    lo[0] = lo[1] = std::numeric_limits<double>::infinity();
    hi[0] = hi[1] = -std::numeric_limits<double>::infinity();
    for (const Seg& s : items) {
      for (std::size_t a = 0; a < 2; ++a) {
        lo[a] = std::min({lo[a], s.a[a], s.b[a]});
        hi[a] = std::max({hi[a], s.a[a], s.b[a]});
      }
    }
  }
  const auto g = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(segs.size()))));
  const double w[2] = {std::max(hi[0] - lo[0], 1e-300) / static_cast<double>(g),
                       std::max(hi[1] - lo[1], 1e-300) / static_cast<double>(g)};
  auto cell = [&](double v, std::size_t a) {
    const double t = std::floor((v - lo[a]) / w[a]);
    return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(g - 1)));
  };
  std::vector<std::vector<std::size_t>> buckets(g * g);
  for (std::size_t k = 0; k < items.size(); ++k) {
    const Seg& s = items[k];
    const std::size_t x0 = cell(std::min(s.a[0], s.b[0]), 0), x1 = cell(std::max(s.a[0], s.b[0]), 0);
    const std::size_t y0 = cell(std::min(s.a[1], s.b[1]), 1), y1 = cell(std::max(s.a[1], s.b[1]), 1);
    for (std::size_t cx = x0; cx <= x1; ++cx) {
      for (std::size_t cy = y0; cy <= y1; ++cy) buckets[cx * g + cy].push_back(k);
    }
  }
  for (const auto& b : buckets) {
    for (std::size_t u = 0; u < b.size(); ++u) {
      for (std::size_t v = u + 1; v < b.size(); ++v) {
        const Seg& s = items[b[u]];
        const Seg& t = items[b[v]];
        if (s.id == t.id) continue;
        if (cross(s, t)) out.emplace_back(std::min(s.id, t.id), std::max(s.id, t.id));
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

}  // namespace

PlanarityResult is_planar(const PointCloud& mu, const PointCloud& nu, const Matching& matching) {
  if (mu.dim() != 2 || nu.dim() != 2) throw InvalidArgument("is_planar: clouds must be planar");
  if (!(mu.domain() == nu.domain())) throw InvalidArgument("is_planar: clouds live in different domains");
  if (matching.size() != mu.size() || mu.size() != nu.size() || !matching.is_permutation()) {
    throw InvalidArgument("is_planar: matching is not a bijection between the clouds");
  }
  const std::vector<Seg> segs = matched_segments(mu, nu, matching);
  PlanarityResult r;
  if (segs.size() <= 2000) {
    all_pairs(segs, mu.domain(), r.crossings);
  } else {
    bucketed(segs, mu.domain(), r.crossings);
  }
  r.planar = r.crossings.empty();
  return r;
}

}  // namespace pml
