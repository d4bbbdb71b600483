#pragma once

#include <array>
#include <string>
#include <vector>

#include "ov/vec.hpp"

namespace ov {

// Indexed triangle mesh with per-vertex colors. Faces wind counter-clockwise
// seen from outside (normals toward positive SDF).
struct TriMesh {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;
  std::vector<std::array<int, 3>> faces;

  std::size_t vertex_count() const { return positions.size(); }
  std::size_t face_count() const { return faces.size(); }
};

struct MeshTopology {
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::size_t faces = 0;
  std::size_t boundary_edges = 0;    // edges with exactly one incident face
  std::size_t nonmanifold_edges = 0; // edges with more than two
  int components = 0;
  long euler_characteristic = 0;

  bool closed() const { return boundary_edges == 0 && nonmanifold_edges == 0; }
};

MeshTopology analyze_topology(const TriMesh& mesh);

// Per-component Euler characteristics, for defect counting on multi-part
// extractions.
std::vector<long> component_euler_characteristics(const TriMesh& mesh);

double mesh_area(const TriMesh& mesh);
double signed_volume(const TriMesh& mesh);

enum class MeshFormat { kObj, kPlyBinary };

// OBJ writes extended "v x y z r g b" vertex lines; PLY is binary little
// endian with float64 properties so a re-import reproduces the arrays
// bit-exactly.
void export_mesh(const TriMesh& mesh, const std::string& path,
                 MeshFormat format);
TriMesh import_ply(const std::string& path);

}  // namespace ov
