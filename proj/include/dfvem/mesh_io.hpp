#pragma once

#include "dfvem/geometry.hpp"

#include <filesystem>
#include <iosfwd>

namespace dfvem {

// Plain-text sectioned mesh format:
//
//   VERTICES <n>      then n lines "x y" (17 significant digits)
//   EDGES <m>         then m lines "v0 v1 boundary_flag"
//   CELLS <c>         then c lines "k v_0 ... v_{k-1}" (counter-clockwise)
//   LAYERS <c>        optional, then c lines with one layer index each
//
// Lines starting with '#' are comments. Reading rebuilds the topology from the cells and
// checks it against the EDGES section.

void write_mesh(std::ostream& out, const PolygonalMesh& mesh);
PolygonalMesh read_mesh(std::istream& in);

void save_mesh(const std::filesystem::path& path, const PolygonalMesh& mesh);
PolygonalMesh load_mesh(const std::filesystem::path& path);

}  // namespace dfvem
