#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dfvem {

using Point = Eigen::Vector2d;

enum class Domain { unit_square, l_shape };

/// Layout of a geometrically graded L-shape mesh.
///  - cartesian_graded: per quadrant, nested squares of side sigma^k, each ring split
///    into three rectangles (hanging vertices become polygon vertices);
///  - rings_with_diagonal: L-shaped ring bands cut along the bisector of the re-entrant angle;
///  - rings_plain: one non-convex L-shaped band per layer.
enum class MeshFamily { cartesian_graded, rings_with_diagonal, rings_plain };

struct GradingSpec {
  double sigma = 0.5;
  int n_layers = 1;
  Point corner = Point::Zero();
  MeshFamily family = MeshFamily::cartesian_graded;
};

struct Edge {
  std::array<int, 2> vertices{};
  /// Adjacent cells; cells[1] == -1 on the boundary.
  std::array<int, 2> cells{-1, -1};
  bool boundary = true;
};

inline constexpr int kUnlayered = -1;

/// Conforming polygonal mesh. Immutable after construction.
///
/// Cells are counter-clockwise vertex loops. Local edge i of a cell joins loop[i] and
/// loop[i+1]. A vertex lying in the interior of a neighbour's side must appear in that
/// neighbour's loop too, i.e. hanging nodes are ordinary polygon vertices.
class PolygonalMesh {
public:
  PolygonalMesh() = default;

  /// Builds topology and per-cell geometry; throws MeshError if any invariant fails.
  PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
                std::vector<int> layers = {});

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(int v) const { return vertices_[v]; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  std::span<const int> cell(int c) const { return cells_[c]; }
  /// Global edge index of each local edge of cell c.
  std::span<const int> cell_edges(int c) const { return cell_edges_[c]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  double area(int c) const { return area_[c]; }
  double diameter(int c) const { return diameter_[c]; }
  const Point& centroid(int c) const { return centroid_[c]; }
  double edge_length(int e) const;
  std::vector<Point> cell_points(int c) const;
  double total_area() const;

  bool layered() const { return !layers_.empty(); }
  int layer(int c) const { return layers_.empty() ? kUnlayered : layers_[c]; }
  const std::vector<int>& layers() const { return layers_; }

  const std::optional<GradingSpec>& grading() const { return grading_; }
  PolygonalMesh with_grading(const GradingSpec& spec) const;
  PolygonalMesh with_layers(std::vector<int> layers) const;

  /// Cells sharing at least one vertex with c (c excluded), sorted.
  std::vector<int> vertex_neighbours(int c) const;
  /// Index of the vertex at p (within a relative tolerance), or -1.
  int find_vertex(const Point& p) const;
  /// Diagonal of the vertex bounding box.
  double length_scale() const;

private:
  void build();

  std::vector<Point> vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<std::vector<int>> cell_edges_;
  std::vector<Edge> edges_;
  std::vector<double> area_;
  std::vector<double> diameter_;
  std::vector<Point> centroid_;
  std::vector<int> layers_;
  std::optional<GradingSpec> grading_;
};

// Polygon utilities on explicit point loops.
double signed_area(std::span<const Point> poly);
Point polygon_centroid(std::span<const Point> poly);
double polygon_diameter(std::span<const Point> poly);
bool is_simple_polygon(std::span<const Point> poly);

/// Per-cell accuracy degree and per-edge degree (max over the adjacent cells).
struct DegreeDistribution {
  std::vector<int> cell_degree;
  std::vector<int> edge_degree;
  double mu = 0.0;
  /// Number of cells whose degree law value was raised to the floor of 2.
  int clamped_cells = 0;

  int max_degree() const;
};

struct UniformDegree {
  int p = 2;
};
struct HpDegree {
  double mu = 1.0;
};
using DegreeMode = std::variant<UniformDegree, HpDegree>;

inline constexpr int kMinDegree = 2;

PolygonalMesh make_uniform_square_mesh(int cells_per_side, Domain domain);
PolygonalMesh make_graded_lshape_mesh(const GradingSpec& spec);

/// Layer 0 holds the cells with a corner among their vertices; layer j the not-yet-layered
/// cells sharing a closure point with layer j-1.
PolygonalMesh assign_layers(const PolygonalMesh& mesh, std::span<const Point> corners);

DegreeDistribution assign_degrees(const PolygonalMesh& mesh, const DegreeMode& mode);

/// Edge degrees from cell degrees by the max rule.
std::vector<int> edge_degrees_from_cells(const PolygonalMesh& mesh, std::span<const int> cell_degree);

struct MeshQualityReport {
  /// Largest gamma with every cell star-shaped w.r.t. a ball of radius gamma * h_K.
  double gamma_a1 = 0.0;
  /// min over cells and their edges of h_e / h_K.
  double gamma_a2 = 0.0;
  /// max h_K / min h_K over the whole mesh.
  double quasi_uniformity_ratio = 0.0;
  /// max h_K1 / h_K2 over vertex-neighbouring cells.
  double neighbour_ratio = 0.0;
  std::vector<int> non_star_shaped_cells;
  std::vector<double> cell_gamma_a1;
};

MeshQualityReport check_mesh_assumptions(const PolygonalMesh& mesh);

/// Radius of the largest ball w.r.t. which the polygon is star-shaped (0 if none).
double star_ball_radius(std::span<const Point> poly);

const char* to_string(MeshFamily family);
const char* to_string(Domain domain);
MeshFamily mesh_family_from_string(const std::string& name);
Domain domain_from_string(const std::string& name);

}  // namespace dfvem
