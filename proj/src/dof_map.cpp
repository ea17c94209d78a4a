#include "dfvem/exceptions.hpp"
#include "dfvem/quadrature.hpp"
#include "dfvem/system.hpp"

#include <algorithm>

namespace dfvem {

int GlobalDofMap::num_boundary() const {
  return static_cast<int>(std::count(boundary.begin(), boundary.end(), char{1}));
}

GlobalDofMap build_dof_map(const PolygonalMesh& mesh, const DegreeDistribution& degrees) {
  const int nc = mesh.num_cells();
  const int ne = mesh.num_edges();
  if (static_cast<int>(degrees.cell_degree.size()) != nc || static_cast<int>(degrees.edge_degree.size()) != ne)
    throw ConfigError("degree distribution does not match the mesh");

  GlobalDofMap map;
  std::vector<int> edge_offset(ne + 1);
  edge_offset[0] = mesh.num_vertices();
  for (int e = 0; e < ne; ++e) {
    const auto& edge = mesh.edge(e);
    int expected = degrees.cell_degree[edge.cells[0]];
    if (!edge.boundary) expected = std::max(expected, degrees.cell_degree[edge.cells[1]]);
    if (degrees.edge_degree[e] != expected)
      throw ConfigError("edge " + std::to_string(e) + " has degree " + std::to_string(degrees.edge_degree[e]) +
                        " but the max rule gives " + std::to_string(expected));
    edge_offset[e + 1] = edge_offset[e] + degrees.edge_degree[e] - 1;
  }
  map.num_nodes = edge_offset[ne];
  map.nodes.assign(mesh.vertices().begin(), mesh.vertices().end());
  map.nodes.reserve(map.num_nodes);
  std::vector<char> node_on_boundary(map.num_nodes, 0);
  for (int e = 0; e < ne; ++e) {
    const auto& edge = mesh.edge(e);
    const auto gl = gauss_lobatto_nodes(degrees.edge_degree[e], mesh.vertex(edge.vertices[0]),
                                        mesh.vertex(edge.vertices[1]));
    for (int k = 1; k + 1 < static_cast<int>(gl.size()); ++k) map.nodes.push_back(gl[k]);
    if (edge.boundary) {
      node_on_boundary[edge.vertices[0]] = node_on_boundary[edge.vertices[1]] = 1;
      for (int k = edge_offset[e]; k < edge_offset[e + 1]; ++k) node_on_boundary[k] = 1;
    }
  }

  int next = 2 * map.num_nodes;
  map.velocity.resize(nc);
  map.pressure_offset.resize(nc);
  map.pressure_size.resize(nc);
  int pressure = 0;
  for (int c = 0; c < nc; ++c) {
    const auto loop = mesh.cell(c);
    const auto edges = mesh.cell_edges(c);
    const int p = degrees.cell_degree[c];
    std::vector<int> local_nodes;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      local_nodes.push_back(loop[i]);
      const int e = edges[i];
      const int pe = degrees.edge_degree[e];
      const bool forward = mesh.edge(e).vertices[0] == loop[i];
      for (int k = 1; k < pe; ++k) local_nodes.push_back(edge_offset[e] + (forward ? k - 1 : pe - 1 - k));
    }
    const int nb = static_cast<int>(local_nodes.size());
    const int interior = poly_dim(p - 3) + poly_dim(p - 1) - 1;
    auto& dofs = map.velocity[c];
    dofs.resize(2 * nb + interior);
    for (int i = 0; i < nb; ++i) {
      dofs[i] = map.node_dof(local_nodes[i], 0);
      dofs[nb + i] = map.node_dof(local_nodes[i], 1);
    }
    for (int k = 0; k < interior; ++k) dofs[2 * nb + k] = next++;
    map.pressure_offset[c] = pressure;
    map.pressure_size[c] = poly_dim(p - 1);
    pressure += map.pressure_size[c];
  }
  map.num_velocity = next;
  map.num_pressure = pressure;
  map.boundary.assign(map.num_velocity, 0);
  for (int n = 0; n < map.num_nodes; ++n)
    if (node_on_boundary[n]) map.boundary[map.node_dof(n, 0)] = map.boundary[map.node_dof(n, 1)] = 1;
  return map;
}

}  // namespace dfvem
