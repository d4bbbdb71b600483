#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ov/image.hpp"
#include "ov/trimesh.hpp"
#include "ov/vec.hpp"

namespace ov {

using SdfFn = std::function<double(const Vec3&)>;

// Intersection-over-union of the inside regions (sdf < 0) sampled at the
// centers of an evaluation grid over the unit cube.
double occupancy_iou(const SdfFn& a, const SdfFn& b, int grid_resolution);

// Deterministic area-weighted surface samples.
std::vector<Vec3> sample_mesh_surface(const TriMesh& mesh, int count,
                                      std::uint64_t seed);

// Symmetric mean nearest-neighbor distance between two sample clouds.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// Zero-mean normalized cross-correlation; 0 when either image is constant.
double normalized_cross_correlation(const Image& a, const Image& b);

struct SurfaceDefects {
  int extra_components = 0;     // components beyond the first
  long euler_deficit = 0;       // sum over components of |2 - chi|
  std::size_t boundary_edges = 0;

  bool any() const {
    return extra_components > 0 || euler_deficit != 0 || boundary_edges > 0;
  }
};

// Topology-level defect summary: anything other than a single closed
// genus-0 surface counts.
SurfaceDefects measure_surface_defects(const TriMesh& mesh);

}  // namespace ov
