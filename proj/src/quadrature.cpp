#include "dfvem/quadrature.hpp"

#include "dfvem/exceptions.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace dfvem {

namespace {

// Legendre P_n and P_n' at x by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  const double dp = std::abs(x) == 1.0 ? 0.5 * n * (n + 1) * std::pow(x, n + 1)
                                       : n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

QuadratureRule1D build_gauss_legendre(int n) {
  QuadratureRule1D r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [p, dp] = legendre(n, x);
    (void)p;
    r.points[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

QuadratureRule1D build_gauss_lobatto(int n) {
  const int N = n - 1;  // interior nodes are the roots of P_N'
  QuadratureRule1D r;
  r.points.resize(n);
  r.weights.resize(n);
  r.points[0] = -1.0;
  r.points[N] = 1.0;
  for (int i = 1; i < N; ++i) {
    double x = -std::cos(std::numbers::pi * i / N);
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(N, x);
      // (1-x^2) P'' = 2x P' - N(N+1) P
      const double ddp = (2.0 * x * dp - N * (N + 1.0) * p) / (1.0 - x * x);
      const double dx = dp / ddp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.points[i] = x;
  }
  for (int i = 0; i < n; ++i) {
    const double p = legendre(N, r.points[i]).first;
    r.weights[i] = 2.0 / (N * (N + 1.0) * p * p);
  }
  // Exact symmetry about 0.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (r.points[N - i] - r.points[i]);
    r.points[i] = -x;
    r.points[N - i] = x;
    const double w = 0.5 * (r.weights[i] + r.weights[N - i]);
    r.weights[i] = r.weights[N - i] = w;
  }
  if (n % 2 == 1) r.points[n / 2] = 0.0;
  return r;
}

template <class Builder>
const QuadratureRule1D& cached(std::map<int, std::unique_ptr<QuadratureRule1D>>& cache, std::mutex& m,
                               int n, Builder build) {
  std::lock_guard lock(m);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule1D>(build(n));
  return *slot;
}

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double tri_area(const Triangle& t) { return 0.5 * cross(t[1] - t[0], t[2] - t[0]); }

}  // namespace

const QuadratureRule1D& gauss_legendre(int n) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one point");
  static std::mutex m;
  static std::map<int, std::unique_ptr<QuadratureRule1D>> cache;
  return cached(cache, m, n, build_gauss_legendre);
}

const QuadratureRule1D& gauss_lobatto(int n) {
  if (n < 2) throw ConfigError("Gauss-Lobatto rule needs at least two points");
  static std::mutex m;
  static std::map<int, std::unique_ptr<QuadratureRule1D>> cache;
  return cached(cache, m, n, build_gauss_lobatto);
}

std::vector<Point> gauss_lobatto_nodes(int p, const Point& a, const Point& b) {
  if (p < 2) throw ConfigError("Gauss-Lobatto edge nodes need p >= 2; got " + std::to_string(p));
  const auto& rule = gauss_lobatto(p + 1);
  std::vector<Point> nodes;
  nodes.reserve(p + 1);
  for (double t : rule.points) nodes.push_back(0.5 * (1.0 - t) * a + 0.5 * (1.0 + t) * b);
  nodes.front() = a;
  nodes.back() = b;
  return nodes;
}

double QuadratureRule::measure() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

void QuadratureRule::append(const QuadratureRule& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

QuadratureRule triangle_quadrature(const Triangle& tri, int exactness) {
  const int k = std::max(exactness, 0);
  const auto& gs = gauss_legendre((k + 3) / 2);  // radial: degree k+1 with the Jacobian
  const auto& gt = gauss_legendre((k + 2) / 2);
  const double two_area = 2.0 * std::abs(tri_area(tri));
  const Point e1 = tri[1] - tri[0];
  const Point e2 = tri[2] - tri[0];
  QuadratureRule r;
  r.exactness = k;
  r.points.reserve(gs.points.size() * gt.points.size());
  r.weights.reserve(gs.points.size() * gt.points.size());
  for (std::size_t i = 0; i < gs.points.size(); ++i) {
    const double s = 0.5 * (gs.points[i] + 1.0);
    for (std::size_t j = 0; j < gt.points.size(); ++j) {
      const double t = 0.5 * (gt.points[j] + 1.0);
      r.points.push_back(tri[0] + s * ((1.0 - t) * e1 + t * e2));
      r.weights.push_back(0.25 * gs.weights[i] * gt.weights[j] * two_area * s);
    }
  }
  return r;
}

std::vector<Triangle> ear_clip(std::span<const Point> poly) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) idx[i] = static_cast<int>(i);
  const double scale = polygon_diameter(poly);
  const double tol = 1e-14 * scale * scale;
  std::vector<Triangle> tris;
  while (idx.size() > 3) {
    const std::size_t n = idx.size();
    bool clipped = false;
    for (std::size_t i = 0; i < n && !clipped; ++i) {
      const Point& a = poly[idx[(i + n - 1) % n]];
      const Point& b = poly[idx[i]];
      const Point& c = poly[idx[(i + 1) % n]];
      if (cross(b - a, c - b) <= tol) continue;  // reflex or flat corner
      bool empty = true;
      for (std::size_t j = 0; j < n && empty; ++j) {
        if (j == i || j == (i + n - 1) % n || j == (i + 1) % n) continue;
        const Point& q = poly[idx[j]];
        if (cross(b - a, q - a) >= -tol && cross(c - b, q - b) >= -tol && cross(a - c, q - c) >= -tol)
          empty = false;
      }
      if (!empty) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
    }
    if (!clipped) throw MeshError("ear clipping failed: polygon is not simple");
  }
  tris.push_back({poly[idx[0]], poly[idx[1]], poly[idx[2]]});
  return tris;
}

std::vector<Triangle> triangulate_polygon(std::span<const Point> poly) {
  const double area = signed_area(poly);
  if (!(area > 0.0)) throw MeshError("cannot triangulate a degenerate or clockwise polygon");
  const Point c = polygon_centroid(poly);
  std::vector<Triangle> fan;
  const std::size_t n = poly.size();
  bool star = true;
  for (std::size_t i = 0; i < n && star; ++i) {
    Triangle t{c, poly[i], poly[(i + 1) % n]};
    if (tri_area(t) <= 1e-12 * area) star = false;
    fan.push_back(t);
  }
  return star ? fan : ear_clip(poly);
}

QuadratureRule polygon_quadrature(std::span<const Point> poly, int exactness) {
  QuadratureRule r;
  r.exactness = exactness;
  for (const auto& t : triangulate_polygon(poly)) r.append(triangle_quadrature(t, exactness));
  return r;
}

QuadratureRule corner_refined_quadrature(std::span<const Point> poly, const Point& corner, int exactness,
                                         int levels, double ratio) {
  const std::size_t n = poly.size();
  std::size_t ic = n;
  const double scale = polygon_diameter(poly);
  for (std::size_t i = 0; i < n; ++i)
    if ((poly[i] - corner).norm() <= 1e-12 * scale) ic = i;
  if (ic == n) return polygon_quadrature(poly, exactness);

  // Fan from the corner when the polygon is star-shaped with respect to it.
  std::vector<Triangle> tris;
  const double area = signed_area(poly);
  bool star = true;
  for (std::size_t k = 1; k + 1 < n && star; ++k) {
    Triangle t{poly[ic], poly[(ic + k) % n], poly[(ic + k + 1) % n]};
    if (tri_area(t) <= 1e-12 * area) star = false;
    tris.push_back(t);
  }
  if (!star) tris = triangulate_polygon(poly);

  QuadratureRule r;
  r.exactness = exactness;
  for (auto t : tris) {
    int at = -1;
    for (int j = 0; j < 3; ++j)
      if ((t[j] - corner).norm() <= 1e-12 * scale) at = j;
    if (at < 0) {
      r.append(triangle_quadrature(t, exactness));
      continue;
    }
    const Point c = t[at];
    const Point a = t[(at + 1) % 3] - c;
    const Point b = t[(at + 2) % 3] - c;
    double outer = 1.0;
    for (int l = 0; l < levels; ++l) {
      const double inner = outer * ratio;
      r.append(triangle_quadrature({c + outer * a, c + outer * b, c + inner * b}, exactness));
      r.append(triangle_quadrature({c + outer * a, c + inner * b, c + inner * a}, exactness));
      outer = inner;
    }
    r.append(triangle_quadrature({c, c + outer * a, c + outer * b}, exactness));
  }
  return r;
}

}  // namespace dfvem
