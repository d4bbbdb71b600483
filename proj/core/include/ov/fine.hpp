#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ov/camera.hpp"
#include "ov/diffusion.hpp"
#include "ov/rasterize.hpp"
#include "ov/tetgrid.hpp"

namespace ov {

struct TetGridGradient {
  std::vector<double> sdf;
  std::vector<Vec3> offset;
  std::vector<Vec3> color;

  void resize(std::size_t n) {
    sdf.assign(n, 0.0);
    offset.assign(n, Vec3::Zero());
    color.assign(n, Vec3::Zero());
  }
};

// Pulls a mesh-space cotangent back to the grid through the marching-tets
// crossing interpolation: positions into deformations and (via the crossing
// parameter) vertex SDF values, colors into vertex colors and SDF.
void backprop_mesh_to_grid(const TetGrid& grid,
                           const std::vector<CrossingRef>& provenance,
                           const MeshGradient& mesh_grad,
                           TetGridGradient& grid_grad);

struct FineConfig {
  int geometry_iters = 140;
  int texture_iters = 60;

  double lr_sdf = 1e-2;
  double lr_offset = 1e-2;
  double lr_color = 3e-2;
  double moment_decay1 = 0.9;
  double moment_decay2 = 0.99;
  double adam_epsilon = 1e-8;

  RasterConfig raster;
  PoseSampleConfig pose;
  int model_resolution = 64;

  // Fine-stage noise runs cooler than the coarse loop.
  int t_start = 300;
  int t_end = 20;
  int t_jitter = 25;

  std::string prompt;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FineStepReport {
  int iteration = 0;
  bool geometry_phase = true;
  int t = 0;
  double residual_norm = 0.0;
  double grad_norm = 0.0;
  int backtracks = 0;
  bool skipped = false;
};

struct FineResult {
  TetGrid grid;
  std::vector<FineStepReport> reports;
};

struct FineCallbacks {
  std::function<void(const TetGrid&, const FineStepReport&)> on_step;
};

// Single-view SDS refinement of the tetrahedral grid: geometry phase first
// (SDF + deformation), then texture phase (colors only). Deformation updates
// that invert a tetrahedron are halved up to 10 times, then dropped; offsets
// stay norm-clamped below half the mean edge length.
FineResult optimize_fine(TetGrid grid, ScoreOracle& oracle,
                         const FineConfig& cfg, const NoiseSchedule& schedule,
                         const FineCallbacks* callbacks = nullptr);

}  // namespace ov
