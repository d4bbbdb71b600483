#pragma once

#include <vector>

#include "ov/camera.hpp"
#include "ov/image.hpp"
#include "ov/trimesh.hpp"
#include "ov/vec.hpp"

namespace ov {

struct RasterConfig {
  int width = 128;
  int height = 128;
  // Sigmoid slope of the edge model, in 1/pixel: per-triangle coverage is
  // sigmoid(sharpness * signed pixel distance to the projected boundary).
  double sharpness = 50.0;
  // Band half-width in multiples of 1/sharpness beyond which coverage is
  // treated as zero/one.
  double cutoff = 10.0;
  Vec3 background{1.0, 1.0, 1.0};
};

struct RasterOutput {
  Image silhouette;  // H x W x 1, union coverage 1 - prod(1 - alpha_j)
  Image color;       // H x W x 3, nearest hit blended over background
};

// Soft-silhouette rasterization: per-triangle sigmoid coverage aggregated
// into a union opacity; color from the depth-nearest covering triangle
// (boundary pixels fall back to the highest-coverage triangle), composited
// over the background by the union opacity.
RasterOutput rasterize_soft(const TriMesh& mesh, const CameraPose& pose,
                            const RasterConfig& config);

struct MeshGradient {
  std::vector<Vec3> position;
  std::vector<Vec3> color;

  void resize(std::size_t n) {
    position.assign(n, Vec3::Zero());
    color.assign(n, Vec3::Zero());
  }
};

// Reverse pass; either cotangent may be null. Propagates through the edge
// distance terms, the pinhole projection, and the color interpolation of the
// picked triangle. Discrete picks (depth winner, band membership) are treated
// as constant.
MeshGradient rasterize_soft_adjoint(const TriMesh& mesh, const CameraPose& pose,
                                    const RasterConfig& config,
                                    const Image* upstream_silhouette,
                                    const Image* upstream_color);

}  // namespace ov
