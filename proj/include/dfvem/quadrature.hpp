#pragma once

#include "dfvem/geometry.hpp"

#include <array>
#include <span>
#include <vector>

namespace dfvem {

struct QuadratureRule1D {
  std::vector<double> points;   // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

/// n-point Gauss-Legendre rule (exact to degree 2n-1).
const QuadratureRule1D& gauss_legendre(int n);
/// n-point Gauss-Lobatto rule, endpoints included (exact to degree 2n-3). n >= 2.
const QuadratureRule1D& gauss_lobatto(int n);

/// The p+1 Gauss-Lobatto nodes of the segment [a, b], ordered from a to b. p >= 2.
std::vector<Point> gauss_lobatto_nodes(int p, const Point& a, const Point& b);

struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
  int exactness = 0;

  std::size_t size() const { return points.size(); }
  double measure() const;
  void append(const QuadratureRule& other);
};

using Triangle = std::array<Point, 3>;

/// Collapsed (Duffy) Gauss rule; the collapsed vertex is tri[0].
QuadratureRule triangle_quadrature(const Triangle& tri, int exactness);

/// Fan from the centroid when every fan triangle is positive, otherwise ear clipping.
std::vector<Triangle> triangulate_polygon(std::span<const Point> poly);
/// Ear-clipping triangulation of a simple counter-clockwise polygon.
std::vector<Triangle> ear_clip(std::span<const Point> poly);

QuadratureRule polygon_quadrature(std::span<const Point> poly, int exactness);

/// Polygon rule with geometric subdivision towards `corner` (a vertex of the polygon):
/// every sub-triangle touching the corner is cut into `levels` trapezoidal shells of ratio
/// `ratio`, and the innermost triangle gets a rule collapsed at the corner.
QuadratureRule corner_refined_quadrature(std::span<const Point> poly, const Point& corner,
                                         int exactness, int levels = 8, double ratio = 0.5);

}  // namespace dfvem
