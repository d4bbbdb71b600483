#pragma once

#include <array>
#include <vector>

#include "ov/field.hpp"
#include "ov/trimesh.hpp"
#include "ov/vec.hpp"

namespace ov {

struct TetVertex {
  Vec3 rest;
  double sdf = 1.0;
  Vec3 offset{0, 0, 0};  // deformation, norm-clamped
  Vec3 color{0.5, 0.5, 0.5};
};

// Body-centered tetrahedralization of the unit cube: lattice nodes plus cell
// centers, four tets per interior cell face and two per boundary face
// (12 * resolution^3 total). Tets are positively oriented at rest;
// deformation is clamped below half the mean rest edge length so updates
// keep them that way.
struct TetGrid {
  int resolution = 0;
  double mean_edge_length = 0.0;
  std::vector<TetVertex> verts;
  std::vector<std::array<int, 4>> tets;

  Vec3 deformed(int vi) const { return verts[vi].rest + verts[vi].offset; }
  double offset_limit() const { return 0.5 * mean_edge_length; }
  void clamp_offsets();
  // Number of tets with non-positive orientation under current offsets.
  int inverted_count() const;
};

TetGrid make_bcc_grid(int resolution);

// BCC grid with vertex SDF/color sampled from the field, zero deformation.
TetGrid init_tetgrid_from_field(const VoxelField& field, int resolution);

// Provenance of a marching-tets output vertex: grid edge (vi, vj) and the
// interpolation parameter tau with crossing = (1-tau)*vi + tau*vj.
struct CrossingRef {
  int vi = 0, vj = 0;
  double tau = 0.0;
};

// Standard marching tetrahedra. Vertex SDF values of exactly zero are
// perturbed by +1e-8 first; crossings interpolate deformed positions and
// colors along edges and weld by edge, with crossings landing on a grid
// vertex snapped to it and welded by node. Interior level sets therefore
// produce closed meshes. Triangles wind with normals toward positive SDF.
TriMesh marching_tets(const TetGrid& grid,
                      std::vector<CrossingRef>* provenance = nullptr);

}  // namespace ov
