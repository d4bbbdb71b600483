#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ov/vec.hpp"

namespace ov {

struct FieldSample {
  double sdf = 0.0;
  Vec3 color{0.5, 0.5, 0.5};
};

// Resolved trilinear cell lookup: the eight enclosing node indices plus the
// per-axis interpolation weights. Corner k encodes offsets as
// k = dx | dy<<1 | dz<<2, with product weight wx[dx]*wy[dy]*wz[dz].
struct CellQuery {
  std::array<std::size_t, 8> idx;
  double wx[2], wy[2], wz[2];
  double inv_h;  // 1 / cell size, for spatial gradients

  double corner_weight(int k) const {
    return wx[k & 1] * wy[(k >> 1) & 1] * wz[(k >> 2) & 1];
  }
};

struct NodeWeights {
  std::array<std::size_t, 8> idx;
  std::array<double, 8> w;
};

// Dense trilinear SDF + RGB field over the unit cube [-0.5, 0.5]^3 with
// N nodes per axis. Node storage order is x fastest, then y, then z, matching
// the OVF1 checkpoint layout. Queries are const and safe to run from any
// number of threads against an unchanging field; mutation is exclusive and
// bumps the revision counter used to validate adjoint caches.
class VoxelField {
 public:
  VoxelField(int resolution, double beta);

  // Centered blob init: sphere of radius 0.35 minus node noise of amplitude
  // 0.01 * cell size; colors mid-gray.
  static VoxelField default_init(int resolution, double beta,
                                 std::uint64_t seed);

  int resolution() const { return n_; }
  double beta() const { return beta_; }
  void set_beta(double beta);
  double cell_size() const { return h_; }
  std::size_t node_count() const { return sdf_.size(); }
  std::uint64_t revision() const { return revision_; }

  std::size_t node_index(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) +
           static_cast<std::size_t>(n_) *
               (static_cast<std::size_t>(iy) +
                static_cast<std::size_t>(n_) * static_cast<std::size_t>(iz));
  }
  Vec3 node_position(int ix, int iy, int iz) const {
    return Vec3(-0.5 + ix * h_, -0.5 + iy * h_, -0.5 + iz * h_);
  }

  double sdf_node(std::size_t i) const { return sdf_[i]; }
  Vec3 color_node(std::size_t i) const {
    return Vec3(color_[3 * i], color_[3 * i + 1], color_[3 * i + 2]);
  }
  const std::vector<double>& sdf_values() const { return sdf_; }
  const std::vector<double>& color_values() const { return color_; }

  void set_sdf_node(std::size_t i, double v);
  void set_color_node(std::size_t i, const Vec3& c);
  // Bulk in-place update used by optimizers; single revision bump.
  void apply_update(const std::vector<double>& sdf_delta,
                    const std::vector<double>& color_delta);
  void assign(std::vector<double> sdf, std::vector<double> color);

  // Point query with the out-of-cube extension: outside the cube the SDF is
  // the distance to the cube surface plus the interpolated boundary value, and
  // the color is the boundary color. Interpolated colors clamp to [0,1].
  FieldSample query(const Vec3& p) const;
  double query_sdf(const Vec3& p) const;

  // Trilinear weights of the eight enclosing nodes (the adjoint of query with
  // respect to node values). Out-of-cube points use the clamped cell.
  NodeWeights param_weights(const Vec3& p) const;

  // Spatial gradient of the interpolant (piecewise per cell); outside the
  // cube, gradient of the extension formula.
  Vec3 spatial_gradient(const Vec3& p) const;

  // Hot-path lookup for the renderer; p is clamped into the cube.
  CellQuery cell_query(const Vec3& p) const;
  double sdf_value(const CellQuery& q) const;
  Vec3 sdf_grad(const CellQuery& q) const;
  Vec3 color_raw(const CellQuery& q) const;  // unclamped interpolation

  // OVF1 checkpoint: magic "OVF1", u32 resolution, f32 beta, N^3 f32 sdf
  // values (x fastest), 3*N^3 f32 colors. Little endian throughout.
  void save(const std::string& path) const;
  static VoxelField load(const std::string& path);

 private:
  int n_;
  double h_;
  double beta_;
  std::uint64_t revision_ = 0;
  std::vector<double> sdf_;    // n^3
  std::vector<double> color_;  // 3 * n^3, rgb per node
};

// Exact signed-distance primitives used as ground-truth targets. Union takes
// the pointwise minimum (exact for disjoint parts).
class AnalyticSdf {
 public:
  using ColorFn = std::function<Vec3(const Vec3&)>;

  static AnalyticSdf sphere(const Vec3& center, double radius);
  static AnalyticSdf box(const Vec3& center, const Vec3& half_extents);
  static AnalyticSdf union_of(std::vector<AnalyticSdf> parts);

  AnalyticSdf translated(const Vec3& offset) const;
  AnalyticSdf with_color(const Vec3& rgb) const;
  AnalyticSdf with_color(ColorFn fn) const;

  double sdf(const Vec3& p) const;
  FieldSample query(const Vec3& p) const;

 private:
  enum class Kind { Sphere, Box, Union };
  Kind kind_ = Kind::Sphere;
  Vec3 center_{0, 0, 0};
  Vec3 half_{0, 0, 0};
  double radius_ = 0.0;
  std::vector<AnalyticSdf> children_;
  ColorFn color_;  // null -> mid-gray
};

// Samples an analytic target onto a voxel grid; node values are exact.
VoxelField bake_field(const AnalyticSdf& target, int resolution, double beta);

}  // namespace ov
