#include "dfvem/exceptions.hpp"
#include "dfvem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace dfvem {

namespace {

// Collects vertices by exact coordinates; generators compute each coordinate from one table
// so shared corners compare equal bit for bit.
class VertexPool {
public:
  int add(const Point& p) {
    const auto key = std::pair{p.x(), p.y()};
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(points_.size());
    index_.emplace(key, id);
    points_.push_back(p);
    return id;
  }
  std::vector<int> add_loop(const std::vector<Point>& loop) {
    std::vector<int> ids;
    ids.reserve(loop.size());
    for (const auto& p : loop) ids.push_back(add(p));
    return ids;
  }
  std::vector<Point> take() { return std::move(points_); }
  const std::vector<Point>& points() const { return points_; }

private:
  std::map<std::pair<double, double>, int> index_;
  std::vector<Point> points_;
};

std::vector<Point> ccw(std::vector<Point> loop) {
  if (signed_area(loop) < 0.0) std::reverse(loop.begin(), loop.end());
  return loop;
}

// Inserts every pool vertex lying strictly inside a cell side into that cell's loop.
void resolve_hanging_vertices(const std::vector<Point>& pts, std::vector<std::vector<int>>& cells) {
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double tol = 1e-13 * std::max(scale, 1.0);
  for (auto& loop : cells) {
    std::vector<int> out;
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % n];
      out.push_back(a);
      const Point d = pts[b] - pts[a];
      const double len2 = d.squaredNorm();
      std::vector<std::pair<double, int>> inside;
      for (int v = 0; v < static_cast<int>(pts.size()); ++v) {
        if (v == a || v == b) continue;
        const Point w = pts[v] - pts[a];
        const double t = w.dot(d) / len2;
        if (t <= 0.0 || t >= 1.0) continue;
        if (std::abs(d.x() * w.y() - d.y() * w.x()) / std::sqrt(len2) <= tol) inside.emplace_back(t, v);
      }
      std::sort(inside.begin(), inside.end());
      for (const auto& [t, v] : inside) out.push_back(v);
    }
    loop = std::move(out);
  }
}

std::vector<Point> rectangle(double x0, double x1, double y0, double y1) {
  return {Point(x0, y0), Point(x1, y0), Point(x1, y1), Point(x0, y1)};
}

}  // namespace

PolygonalMesh make_uniform_square_mesh(int cells_per_side, Domain domain) {
  const int n = cells_per_side;
  if (n < 1) throw ConfigError("cells_per_side must be at least 1");
  if (domain == Domain::l_shape && n % 2 != 0)
    throw ConfigError("l_shape needs an even cells_per_side so the removed quadrant is resolved; got " +
                      std::to_string(n));

  const double lo = domain == Domain::unit_square ? 0.0 : -1.0;
  const double len = domain == Domain::unit_square ? 1.0 : 2.0;
  std::vector<double> coord(n + 1);
  for (int i = 0; i <= n; ++i) coord[i] = lo + len * static_cast<double>(i) / n;
  if (domain == Domain::l_shape) coord[n / 2] = 0.0;

  VertexPool pool;
  std::vector<std::vector<int>> cells;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (domain == Domain::l_shape && i >= n / 2 && j < n / 2) continue;
      cells.push_back(pool.add_loop(rectangle(coord[i], coord[i + 1], coord[j], coord[j + 1])));
    }
  return PolygonalMesh(pool.take(), std::move(cells));
}

PolygonalMesh make_graded_lshape_mesh(const GradingSpec& spec) {
  if (!(spec.sigma > 0.0 && spec.sigma < 1.0))
    throw ConfigError("grading parameter sigma must lie in (0,1); got " + std::to_string(spec.sigma));
  if (spec.n_layers < 0) throw ConfigError("n_layers must be nonnegative");
  if (spec.corner.norm() != 0.0)
    throw ConfigError("graded L-shape meshes refine towards the re-entrant corner (0,0)");

  const int n = spec.n_layers;
  std::vector<double> s(n + 1);
  for (int k = 0; k <= n; ++k) s[k] = std::pow(spec.sigma, k);

  VertexPool pool;
  std::vector<std::vector<int>> cells;
  std::vector<int> layers;
  const auto push = [&](std::vector<Point> loop, int layer) {
    cells.push_back(pool.add_loop(ccw(std::move(loop))));
    layers.push_back(layer);
  };

  switch (spec.family) {
    case MeshFamily::cartesian_graded: {
      // Quadrants of the L-shape as reflections of the unit square [0,1]^2.
      const std::array<Point, 3> mirror = {Point(1, 1), Point(-1, 1), Point(-1, -1)};
      for (const auto& m : mirror) {
        const auto place = [&](std::vector<Point> loop) {
          for (auto& p : loop) p = p.cwiseProduct(m);
          return loop;
        };
        push(place(rectangle(0.0, s[n], 0.0, s[n])), 0);
        for (int k = n - 1; k >= 0; --k) {
          const int layer = n - k;
          push(place(rectangle(s[k + 1], s[k], 0.0, s[k + 1])), layer);
          push(place(rectangle(s[k + 1], s[k], s[k + 1], s[k])), layer);
          push(place(rectangle(0.0, s[k + 1], s[k + 1], s[k])), layer);
        }
      }
      auto pts = pool.take();
      resolve_hanging_vertices(pts, cells);
      return PolygonalMesh(std::move(pts), std::move(cells), std::move(layers)).with_grading(spec);
    }
    case MeshFamily::rings_plain: {
      const double c = s[n];
      push({Point(0, 0), Point(c, 0), Point(c, c), Point(-c, c), Point(-c, -c), Point(0, -c)}, 0);
      for (int k = n - 1; k >= 0; --k) {
        const double o = s[k];
        const double t = s[k + 1];
        push({Point(t, 0), Point(o, 0), Point(o, o), Point(-o, o), Point(-o, -o), Point(0, -o),
              Point(0, -t), Point(-t, -t), Point(-t, t), Point(t, t)},
             n - k);
      }
      break;
    }
    case MeshFamily::rings_with_diagonal: {
      const double c = s[n];
      push({Point(0, 0), Point(c, 0), Point(c, c), Point(-c, c)}, 0);
      push({Point(0, 0), Point(-c, c), Point(-c, -c), Point(0, -c)}, 0);
      for (int k = n - 1; k >= 0; --k) {
        const double o = s[k];
        const double t = s[k + 1];
        push({Point(t, 0), Point(o, 0), Point(o, o), Point(-o, o), Point(-t, t), Point(t, t)}, n - k);
        push({Point(-o, o), Point(-o, -o), Point(0, -o), Point(0, -t), Point(-t, -t), Point(-t, t)},
             n - k);
      }
      break;
    }
  }
  return PolygonalMesh(pool.take(), std::move(cells), std::move(layers)).with_grading(spec);
}

PolygonalMesh assign_layers(const PolygonalMesh& mesh, std::span<const Point> corners) {
  if (corners.empty()) throw ConfigError("assign_layers needs at least one corner");
  std::set<int> corner_ids;
  for (const auto& c : corners) {
    const int v = mesh.find_vertex(c);
    if (v < 0)
      throw ConfigError("corner (" + std::to_string(c.x()) + ", " + std::to_string(c.y()) +
                        ") is not a mesh vertex");
    corner_ids.insert(v);
  }

  // vertex -> cells incidence
  std::vector<std::vector<int>> cells_of(mesh.num_vertices());
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int v : mesh.cell(c)) cells_of[v].push_back(c);

  std::vector<int> layer(mesh.num_cells(), kUnlayered);
  std::vector<int> front;
  for (int v : corner_ids)
    for (int c : cells_of[v])
      if (layer[c] == kUnlayered) {
        layer[c] = 0;
        front.push_back(c);
      }
  int j = 0;
  while (!front.empty()) {
    ++j;
    std::set<int> next;
    for (int c : front)
      for (int v : mesh.cell(c))
        for (int k : cells_of[v])
          if (layer[k] == kUnlayered) next.insert(k);
    front.assign(next.begin(), next.end());
    for (int c : front) layer[c] = j;
  }
  for (int c = 0; c < mesh.num_cells(); ++c)
    if (layer[c] == kUnlayered) throw MeshError("cell " + std::to_string(c) + " is not connected to a corner");
  return mesh.with_layers(std::move(layer));
}

std::vector<int> edge_degrees_from_cells(const PolygonalMesh& mesh, std::span<const int> cell_degree) {
  std::vector<int> out(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto& edge = mesh.edge(e);
    out[e] = cell_degree[edge.cells[0]];
    if (!edge.boundary) out[e] = std::max(out[e], cell_degree[edge.cells[1]]);
  }
  return out;
}

DegreeDistribution assign_degrees(const PolygonalMesh& mesh, const DegreeMode& mode) {
  DegreeDistribution d;
  d.cell_degree.resize(mesh.num_cells());
  if (const auto* u = std::get_if<UniformDegree>(&mode)) {
    if (u->p < kMinDegree)
      throw ConfigError("degree of accuracy must be at least 2; got " + std::to_string(u->p));
    std::fill(d.cell_degree.begin(), d.cell_degree.end(), u->p);
  } else {
    const double mu = std::get<HpDegree>(mode).mu;
    if (!(mu > 0.0)) throw ConfigError("slope parameter mu must be positive");
    if (!mesh.layered()) throw ConfigError("hp degree law needs a layered mesh");
    d.mu = mu;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      // Guard against mu*(j+1) landing a rounding error above an integer.
      const int law = static_cast<int>(std::ceil(mu * (mesh.layer(c) + 1) - 1e-12));
      if (law < kMinDegree) ++d.clamped_cells;
      d.cell_degree[c] = std::max(kMinDegree, law);
    }
  }
  d.edge_degree = edge_degrees_from_cells(mesh, d.cell_degree);
  return d;
}

double star_ball_radius(std::span<const Point> poly) {
  const std::size_t m = poly.size();
  // Inward unit normals n_i and offsets: n_i . x - r >= n_i . a_i.
  std::vector<Point> normal(m);
  std::vector<double> offset(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Point d = poly[(i + 1) % m] - poly[i];
    normal[i] = Point(-d.y(), d.x()) / d.norm();
    offset[i] = normal[i].dot(poly[i]);
  }
  const double scale = polygon_diameter(poly);
  double best = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t k = j + 1; k < m; ++k) {
        Eigen::Matrix3d a;
        a << normal[i].x(), normal[i].y(), -1.0, normal[j].x(), normal[j].y(), -1.0, normal[k].x(),
            normal[k].y(), -1.0;
        const Eigen::Vector3d b(offset[i], offset[j], offset[k]);
        Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
        if (!lu.isInvertible()) continue;
        const Eigen::Vector3d x = lu.solve(b);
        const double r = x(2);
        if (r <= best) continue;
        const Point c(x(0), x(1));
        bool feasible = true;
        for (std::size_t l = 0; l < m && feasible; ++l)
          feasible = normal[l].dot(c) - r >= offset[l] - 1e-12 * scale;
        if (feasible) best = r;
      }
  return best;
}

MeshQualityReport check_mesh_assumptions(const PolygonalMesh& mesh) {
  MeshQualityReport r;
  r.gamma_a1 = std::numeric_limits<double>::infinity();
  r.gamma_a2 = std::numeric_limits<double>::infinity();
  double hmin = std::numeric_limits<double>::infinity();
  double hmax = 0.0;
  r.cell_gamma_a1.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double h = mesh.diameter(c);
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
    const auto pts = mesh.cell_points(c);
    const double g = star_ball_radius(pts) / h;
    r.cell_gamma_a1[c] = g;
    if (g <= 0.0) r.non_star_shaped_cells.push_back(c);
    r.gamma_a1 = std::min(r.gamma_a1, g);
    for (int e : mesh.cell_edges(c)) r.gamma_a2 = std::min(r.gamma_a2, mesh.edge_length(e) / h);
  }
  r.quasi_uniformity_ratio = hmax / hmin;
  r.neighbour_ratio = 1.0;
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int k : mesh.vertex_neighbours(c))
      r.neighbour_ratio = std::max(r.neighbour_ratio, mesh.diameter(c) / mesh.diameter(k));
  return r;
}

}  // namespace dfvem
