#include "dfvem/geometry.hpp"

#include "dfvem/exceptions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace dfvem {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

// Proper or touching intersection of closed segments [p1,p2] and [q1,q2].
bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2,
                        double tol) {
  const auto orient = [](const Point& a, const Point& b, const Point& c) {
    return cross(b - a, c - a);
  };
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) &&
      ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))) {
    return true;
  }
  const auto on_segment = [tol](const Point& a, const Point& b, const Point& c, double d) {
    if (std::abs(d) > tol) return false;
    return std::min(a.x(), b.x()) - tol <= c.x() && c.x() <= std::max(a.x(), b.x()) + tol &&
           std::min(a.y(), b.y()) - tol <= c.y() && c.y() <= std::max(a.y(), b.y()) + tol;
  };
  return on_segment(q1, q2, p1, d1) || on_segment(q1, q2, p2, d2) ||
         on_segment(p1, p2, q1, d3) || on_segment(p1, p2, q2, d4);
}

}  // namespace

double signed_area(std::span<const Point> poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

Point polygon_centroid(std::span<const Point> poly) {
  // Shift to the first vertex to limit cancellation on small, far-off cells.
  const Point o = poly[0];
  double a = 0.0;
  Point c = Point::Zero();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = poly[i] - o;
    const Point q = poly[(i + 1) % n] - o;
    const double w = cross(p, q);
    a += w;
    c += w * (p + q);
  }
  return o + c / (3.0 * a);
}

double polygon_diameter(std::span<const Point> poly) {
  double d = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, (poly[i] - poly[j]).norm());
  return d;
}

bool is_simple_polygon(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  const double tol = 1e-14 * polygon_diameter(poly) * polygon_diameter(poly);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a1 = poly[i];
    const Point& a2 = poly[(i + 1) % n];
    if ((a2 - a1).norm() == 0.0) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      const Point& b1 = poly[j];
      const Point& b2 = poly[(j + 1) % n];
      if (adjacent) {
        // Adjacent sides may only share their common vertex: reject folding back.
        const Point& shared = (j == i + 1) ? a2 : a1;
        const Point& other_a = (j == i + 1) ? a1 : a2;
        const Point& other_b = (j == i + 1) ? b2 : b1;
        const Point u = other_a - shared;
        const Point v = other_b - shared;
        if (std::abs(cross(u, v)) <= tol && u.dot(v) > 0.0) return false;
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2, tol)) return false;
    }
  }
  return true;
}

PolygonalMesh::PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
                             std::vector<int> layers)
    : vertices_(std::move(vertices)), cells_(std::move(cells)), layers_(std::move(layers)) {
  build();
}

void PolygonalMesh::build() {
  if (cells_.empty()) throw MeshError("mesh has no cells");
  if (!layers_.empty() && layers_.size() != cells_.size())
    throw MeshError("layer count does not match cell count");
  for (int l : layers_)
    if (l < 0) throw MeshError("negative layer index");

  const int nv = num_vertices();
  area_.resize(cells_.size());
  diameter_.resize(cells_.size());
  centroid_.resize(cells_.size());
  cell_edges_.assign(cells_.size(), {});
  edges_.clear();

  std::map<std::pair<int, int>, int> edge_index;
  std::vector<int> first_orientation_tail;  // tail vertex of the first traversal
  std::vector<char> used(nv, 0);

  for (int c = 0; c < num_cells(); ++c) {
    const auto& loop = cells_[c];
    if (loop.size() < 3) throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    std::set<int> distinct(loop.begin(), loop.end());
    if (distinct.size() != loop.size())
      throw MeshError("cell " + std::to_string(c) + " repeats a vertex");
    for (int v : loop) {
      if (v < 0 || v >= nv) throw MeshError("cell " + std::to_string(c) + " references a bad vertex");
      used[v] = 1;
    }
    const auto pts = cell_points(c);
    const double a = signed_area(pts);
    if (!(a > 0.0))
      throw MeshError("cell " + std::to_string(c) + " is not counter-clockwise with positive area");
    if (!is_simple_polygon(pts)) throw MeshError("cell " + std::to_string(c) + " is not simple");
    area_[c] = a;
    centroid_[c] = polygon_centroid(pts);
    diameter_[c] = polygon_diameter(pts);

    const int n = static_cast<int>(loop.size());
    for (int i = 0; i < n; ++i) {
      const int a0 = loop[i];
      const int a1 = loop[(i + 1) % n];
      const auto key = std::minmax(a0, a1);
      auto it = edge_index.find({key.first, key.second});
      if (it == edge_index.end()) {
        const int e = num_edges();
        edge_index.emplace(std::pair{key.first, key.second}, e);
        Edge edge;
        edge.vertices = {key.first, key.second};
        edge.cells = {c, -1};
        edges_.push_back(edge);
        first_orientation_tail.push_back(a0);
        cell_edges_[c].push_back(e);
      } else {
        const int e = it->second;
        Edge& edge = edges_[e];
        if (edge.cells[1] != -1)
          throw MeshError("edge " + std::to_string(key.first) + "-" + std::to_string(key.second) +
                          " is shared by more than two cells");
        if (first_orientation_tail[e] == a0)
          throw MeshError("edge " + std::to_string(key.first) + "-" + std::to_string(key.second) +
                          " has the same orientation in two cells");
        edge.cells[1] = c;
        cell_edges_[c].push_back(e);
      }
    }
  }
  for (auto& e : edges_) e.boundary = e.cells[1] == -1;
  for (int v = 0; v < nv; ++v)
    if (!used[v]) throw MeshError("vertex " + std::to_string(v) + " belongs to no cell");

  // Conformity: no vertex may sit strictly inside an edge (bucketed search).
  const double scale = length_scale();
  const double tol = 1e-12 * scale;
  Eigen::AlignedBox2d box;
  for (const auto& p : vertices_) box.extend(p);
  const int nb = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(nv))));
  const Point lo = box.min();
  const Point ext = (box.max() - box.min()).cwiseMax(Point::Constant(1e-300));
  const auto bucket = [&](const Point& p) {
    const int ix = std::clamp(static_cast<int>((p.x() - lo.x()) / ext.x() * nb), 0, nb - 1);
    const int iy = std::clamp(static_cast<int>((p.y() - lo.y()) / ext.y() * nb), 0, nb - 1);
    return std::pair{ix, iy};
  };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nb) * nb);
  for (int v = 0; v < nv; ++v) {
    const auto [ix, iy] = bucket(vertices_[v]);
    buckets[static_cast<std::size_t>(iy) * nb + ix].push_back(v);
  }
  for (const auto& e : edges_) {
    const Point& a = vertices_[e.vertices[0]];
    const Point& b = vertices_[e.vertices[1]];
    const Point pmin = a.cwiseMin(b) - Point::Constant(tol);
    const Point pmax = a.cwiseMax(b) + Point::Constant(tol);
    const auto [x0, y0] = bucket(pmin);
    const auto [x1, y1] = bucket(pmax);
    const Point d = b - a;
    const double len2 = d.squaredNorm();
    for (int iy = y0; iy <= y1; ++iy)
      for (int ix = x0; ix <= x1; ++ix)
        for (int v : buckets[static_cast<std::size_t>(iy) * nb + ix]) {
          if (v == e.vertices[0] || v == e.vertices[1]) continue;
          const Point w = vertices_[v] - a;
          const double t = w.dot(d) / len2;
          if (t <= 0.0 || t >= 1.0) continue;
          if (std::abs(cross(d, w)) / std::sqrt(len2) <= tol)
            throw MeshError("vertex " + std::to_string(v) + " is a hanging node inside edge " +
                            std::to_string(e.vertices[0]) + "-" + std::to_string(e.vertices[1]));
        }
  }
}

double PolygonalMesh::edge_length(int e) const {
  return (vertices_[edges_[e].vertices[1]] - vertices_[edges_[e].vertices[0]]).norm();
}

std::vector<Point> PolygonalMesh::cell_points(int c) const {
  std::vector<Point> pts;
  pts.reserve(cells_[c].size());
  for (int v : cells_[c]) pts.push_back(vertices_[v]);
  return pts;
}

double PolygonalMesh::total_area() const {
  double a = 0.0;
  for (double x : area_) a += x;
  return a;
}

PolygonalMesh PolygonalMesh::with_grading(const GradingSpec& spec) const {
  PolygonalMesh m = *this;
  m.grading_ = spec;
  return m;
}

PolygonalMesh PolygonalMesh::with_layers(std::vector<int> layers) const {
  if (layers.size() != cells_.size()) throw MeshError("layer count does not match cell count");
  PolygonalMesh m = *this;
  m.layers_ = std::move(layers);
  return m;
}

std::vector<int> PolygonalMesh::vertex_neighbours(int c) const {
  std::set<int> mine(cells_[c].begin(), cells_[c].end());
  std::vector<int> out;
  for (int k = 0; k < num_cells(); ++k) {
    if (k == c) continue;
    for (int v : cells_[k])
      if (mine.count(v)) {
        out.push_back(k);
        break;
      }
  }
  return out;
}

int PolygonalMesh::find_vertex(const Point& p) const {
  const double tol = 1e-12 * length_scale();
  for (int v = 0; v < num_vertices(); ++v)
    if ((vertices_[v] - p).norm() <= tol) return v;
  return -1;
}

double PolygonalMesh::length_scale() const {
  Eigen::AlignedBox2d box;
  for (const auto& p : vertices_) box.extend(p);
  return box.diagonal().norm();
}

int DegreeDistribution::max_degree() const {
  return cell_degree.empty() ? 0 : *std::max_element(cell_degree.begin(), cell_degree.end());
}

const char* to_string(MeshFamily family) {
  switch (family) {
    case MeshFamily::cartesian_graded: return "cartesian_graded";
    case MeshFamily::rings_with_diagonal: return "rings_with_diagonal";
    case MeshFamily::rings_plain: return "rings_plain";
  }
  return "?";
}

const char* to_string(Domain domain) {
  return domain == Domain::unit_square ? "unit_square" : "l_shape";
}

MeshFamily mesh_family_from_string(const std::string& name) {
  if (name == "cartesian_graded") return MeshFamily::cartesian_graded;
  if (name == "rings_with_diagonal") return MeshFamily::rings_with_diagonal;
  if (name == "rings_plain") return MeshFamily::rings_plain;
  throw ConfigError("unknown mesh family '" + name +
                    "' (expected cartesian_graded, rings_with_diagonal or rings_plain)");
}

Domain domain_from_string(const std::string& name) {
  if (name == "unit_square") return Domain::unit_square;
  if (name == "l_shape") return Domain::l_shape;
  throw ConfigError("unknown domain '" + name + "' (expected unit_square or l_shape)");
}

}  // namespace dfvem
