#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ov/camera.hpp"
#include "ov/diffusion.hpp"
#include "ov/field.hpp"
#include "ov/render.hpp"
#include "ov/rng.hpp"

namespace ov {

// Gradient mixing of the two priors at iteration l of L: weight
// (1 - (l/L)^lambda) on the orthogonal-view prior, (l/L)^lambda on the
// pre-trained prior. Exact IEEE arithmetic, no smoothing.
std::pair<double, double> blend_weights(int l, int total, double lambda);

enum class PriorMode {
  kProgressive,     // blend per blend_weights
  kPureOrthogonal,  // composite prior only, every iteration
  kPurePretrained,  // per-view prior only, every iteration
};

struct SdsConfig {
  int iterations = 400;
  double lambda = 1.0;
  PriorMode mode = PriorMode::kProgressive;

  // First-order adaptive-moment update on raw node values. The step size
  // decays linearly to learning_rate_end over the run; adaptive-moment steps
  // are scale-free, so without decay the late sharp-kernel phase oscillates
  // at the full step size and undoes converged geometry.
  double learning_rate = 0.01;
  double learning_rate_end = 2e-3;
  double moment_decay1 = 0.9;
  double moment_decay2 = 0.9;
  double adam_epsilon = 1e-8;

  // Timestep annealing: linear t_start -> t_end over the run plus uniform
  // jitter, clamped back into [t_end, t_start].
  int t_start = 980;
  int t_end = 20;
  int t_jitter = 25;

  int render_width = 64;
  int render_height = 64;
  // Oracle-facing resolution: composites and per-view batches are resized to
  // model_resolution square before noising.
  int model_resolution = 64;

  RenderConfig render;
  PoseSampleConfig pose;

  // Weight-kernel sharpness anneal over the coarse run.
  double beta_start = 0.05;
  double beta_end = 0.005;

  // 4 = orthogonal quadruple per step, 1 = single view per step (only valid
  // for the per-view prior).
  int views_per_step = 4;

  std::string prompt;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-step observability record. wall_ms is measured and therefore excluded
// from the serialized stream, which must be byte-identical across reruns of
// the same seed.
struct StepReport {
  int iteration = 0;
  int t = 0;
  double w_ov = 0.0;
  double w_pre = 0.0;
  double grad_norm_ov = 0.0;
  double grad_norm_pre = 0.0;
  double residual_ov = 0.0;
  double residual_pre = 0.0;
  bool skipped = false;
  double wall_ms = 0.0;
};

// One NDJSON line, deterministic field order and float formatting.
std::string step_report_line(const StepReport& r);

int anneal_timestep(int l, int total, const SdsConfig& cfg, Rng& rng);

struct SdsStepDiag {
  double residual_norm = 0.0;
  double grad_norm = 0.0;
};

// Composite-prior gradient: render the quadruple, tile clockwise, resize to
// the model resolution, noise at t, query the oracle, and pull the weighted
// residual back through resize/untile and the renderer adjoint. omega(t) =
// 1 - alpha_bar(t).
FieldGradient sds_step_ov(const VoxelField& field, ScoreOracle& oracle,
                          const std::array<CameraPose, 4>& cameras, int t,
                          const NoiseSchedule& schedule, const SdsConfig& cfg,
                          Rng& rng, SdsStepDiag* diag = nullptr);

// Per-view prior gradient: same as sds_step_ov but the views stay separate
// as a batch; independent noise per view; gradients sum over the batch.
FieldGradient sds_step_pre(const VoxelField& field, ScoreOracle& oracle,
                           const std::vector<CameraPose>& cameras, int t,
                           const NoiseSchedule& schedule, const SdsConfig& cfg,
                           Rng& rng, SdsStepDiag* diag = nullptr);

struct CoarseCallbacks {
  // Called after each optimizer update with the current field state.
  std::function<void(const VoxelField&, const StepReport&)> on_step;
};

struct CoarseResult {
  VoxelField field;
  std::vector<StepReport> reports;
  int skipped_steps = 0;
};

// The coarse loop: sample base pose, extend to the quadruple, anneal t,
// blend the prior gradients, apply one adaptive-moment update. Deterministic
// under a fixed seed. Steps with non-finite gradients are skipped and
// reported; more than 1% skipped aborts.
CoarseResult optimize_coarse(VoxelField field, ScoreOracle* oracle_ov,
                             ScoreOracle* oracle_pre, const SdsConfig& cfg,
                             const NoiseSchedule& schedule,
                             const CoarseCallbacks* callbacks = nullptr);

}  // namespace ov
