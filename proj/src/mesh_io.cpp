#include "dfvem/mesh_io.hpp"

#include "dfvem/exceptions.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace dfvem {

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Next non-empty, non-comment line.
bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return true;
  }
  return false;
}

std::size_t read_header(std::istream& in, const std::string& expected, std::string& line) {
  std::istringstream ss(line);
  std::string name;
  long long count = -1;
  ss >> name >> count;
  if (name != expected || count < 0)
    throw MeshError("mesh file: expected '" + expected + " <count>', got '" + line + "'");
  (void)in;
  return static_cast<std::size_t>(count);
}

}  // namespace

void write_mesh(std::ostream& out, const PolygonalMesh& mesh) {
  out << "VERTICES " << mesh.num_vertices() << '\n';
  for (const auto& p : mesh.vertices()) out << format_double(p.x()) << ' ' << format_double(p.y()) << '\n';
  out << "EDGES " << mesh.num_edges() << '\n';
  for (const auto& e : mesh.edges())
    out << e.vertices[0] << ' ' << e.vertices[1] << ' ' << (e.boundary ? 1 : 0) << '\n';
  out << "CELLS " << mesh.num_cells() << '\n';
  for (const auto& loop : mesh.cells()) {
    out << loop.size();
    for (int v : loop) out << ' ' << v;
    out << '\n';
  }
  if (mesh.layered()) {
    out << "LAYERS " << mesh.num_cells() << '\n';
    for (int l : mesh.layers()) out << l << '\n';
  }
}

PolygonalMesh read_mesh(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw MeshError("mesh file is empty");
  const std::size_t nv = read_header(in, "VERTICES", line);
  std::vector<Point> vertices(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!next_line(in, line)) throw MeshError("mesh file: truncated VERTICES section");
    const char* s = line.c_str();
    char* end = nullptr;
    const double x = std::strtod(s, &end);
    if (end == s) throw MeshError("mesh file: bad vertex line '" + line + "'");
    const char* s2 = end;
    const double y = std::strtod(s2, &end);
    if (end == s2) throw MeshError("mesh file: bad vertex line '" + line + "'");
    vertices[i] = Point(x, y);
  }

  if (!next_line(in, line)) throw MeshError("mesh file: missing EDGES section");
  const std::size_t ne = read_header(in, "EDGES", line);
  std::set<std::tuple<int, int, int>> file_edges;
  for (std::size_t i = 0; i < ne; ++i) {
    if (!next_line(in, line)) throw MeshError("mesh file: truncated EDGES section");
    std::istringstream ss(line);
    int a = -1, b = -1, flag = -1;
    if (!(ss >> a >> b >> flag)) throw MeshError("mesh file: bad edge line '" + line + "'");
    file_edges.emplace(std::min(a, b), std::max(a, b), flag);
  }

  if (!next_line(in, line)) throw MeshError("mesh file: missing CELLS section");
  const std::size_t nc = read_header(in, "CELLS", line);
  std::vector<std::vector<int>> cells(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    if (!next_line(in, line)) throw MeshError("mesh file: truncated CELLS section");
    std::istringstream ss(line);
    std::size_t k = 0;
    if (!(ss >> k)) throw MeshError("mesh file: bad cell line '" + line + "'");
    cells[c].resize(k);
    for (auto& v : cells[c])
      if (!(ss >> v)) throw MeshError("mesh file: bad cell line '" + line + "'");
  }

  std::vector<int> layers;
  if (next_line(in, line)) {
    const std::size_t nl = read_header(in, "LAYERS", line);
    if (nl != nc) throw MeshError("mesh file: LAYERS count differs from CELLS count");
    layers.resize(nl);
    for (auto& l : layers) {
      if (!next_line(in, line)) throw MeshError("mesh file: truncated LAYERS section");
      l = std::stoi(line);
    }
  }

  PolygonalMesh mesh(std::move(vertices), std::move(cells), std::move(layers));
  std::set<std::tuple<int, int, int>> built;
  for (const auto& e : mesh.edges()) built.emplace(e.vertices[0], e.vertices[1], e.boundary ? 1 : 0);
  if (built != file_edges) throw MeshError("mesh file: EDGES section does not match the cells");
  return mesh;
}

void save_mesh(const std::filesystem::path& path, const PolygonalMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write mesh file " + path.string());
  write_mesh(out, mesh);
}

PolygonalMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file " + path.string());
  return read_mesh(in);
}

}  // namespace dfvem
