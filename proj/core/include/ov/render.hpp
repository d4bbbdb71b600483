#pragma once

#include <cstdint>
#include <vector>

#include "ov/camera.hpp"
#include "ov/field.hpp"
#include "ov/image.hpp"
#include "ov/vec.hpp"

namespace ov {

// Logistic CDF kernel of the SDF-to-weight transform: Psi_beta(x) =
// sigmoid(x / beta). density() is its derivative, density_grad() the second
// derivative; both stay finite for any argument.
struct WeightKernel {
  double beta;

  explicit WeightKernel(double b) : beta(b) {}

  static double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }

  double cdf(double x) const { return sigmoid(x / beta); }
  double density(double x) const {
    const double s = sigmoid(x / beta);
    return s * (1.0 - s) / beta;
  }
  double density_grad(double x) const {
    const double s = sigmoid(x / beta);
    return s * (1.0 - s) * (1.0 - 2.0 * s) / (beta * beta);
  }
};

struct RenderConfig {
  int samples_per_ray = 96;
  double near_clip = 0.1;
  double far_clip = 4.0;
  Vec3 background{1.0, 1.0, 1.0};
  // When positive, overrides the field's kernel sharpness; lets an oracle
  // replicate a query path whose beta is annealed externally.
  double beta_override = -1.0;
};

// Per-ray integration bounds kept for the adjoint recompute.
struct RaySpan {
  double near = 0.0;
  double far = 0.0;
  bool hit = false;
};

struct RenderCache {
  std::uint64_t field_revision = 0;
  int samples_per_ray = 0;
  std::vector<RaySpan> spans;
};

struct RenderOutput {
  Image color;       // H x W x 3
  Image depth;       // H x W x 1, zero where nothing was hit
  Image weight_sum;  // H x W x 1, in [0, 1]
  RenderCache cache;
};

// Accumulated cotangent over field parameters (sdf nodes, color nodes).
struct FieldGradient {
  std::vector<double> sdf;
  std::vector<double> color;

  void resize_like(const VoxelField& f) {
    sdf.assign(f.node_count(), 0.0);
    color.assign(3 * f.node_count(), 0.0);
  }
  void add_scaled(const FieldGradient& g, double s) {
    for (std::size_t i = 0; i < sdf.size(); ++i) sdf[i] += s * g.sdf[i];
    for (std::size_t i = 0; i < color.size(); ++i) color[i] += s * g.color[i];
  }
  double norm() const;
  bool finite() const;
};

// Forward pass: midpoint quadrature of the SDF-derived weight density along
// each ray, cumulative weight clamped to 1 front to back, background
// composited with the leftover transmittance.
RenderOutput render(const VoxelField& field, const RayBundle& rays,
                    const RenderConfig& config);

Image render_silhouette(const VoxelField& field, const RayBundle& rays,
                        const RenderConfig& config);

// Reverse pass. upstream_color is an H x W x 3 cotangent on the color image;
// upstream_opacity (optional, may be null) an H x W x 1 cotangent on the
// weight-sum image. Gradients accumulate into grad (resized if empty). The
// cache must come from a forward render of the same field state; a stale or
// mismatched cache raises ContractError.
void render_adjoint(const VoxelField& field, const RayBundle& rays,
                    const RenderConfig& config, const RenderCache& cache,
                    const Image* upstream_color, const Image* upstream_opacity,
                    FieldGradient& grad);

// Per-ray quadrature trace for diagnostics and physics tests.
struct RayProfile {
  std::vector<double> t;
  std::vector<double> sdf;
  std::vector<double> weight;
  double weight_sum = 0.0;
  bool hit = false;
};

RayProfile render_ray_profile(const VoxelField& field, const Ray& ray,
                              const RenderConfig& config);

}  // namespace ov
