#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ov/field.hpp"
#include "ov/metrics.hpp"
#include "ov/sds.hpp"
#include "ov/trimesh.hpp"

namespace ov {

// Flat key=value run configuration. Unknown keys are rejected; every field
// is range-checked before any compute starts.
struct RunConfig {
  std::string target = "sphere";  // analytic target name, or "remote"
  std::string remote_host;
  int remote_port = 0;
  std::string prompt;
  std::uint64_t seed = 0;
  int coarse_iterations = 400;
  double lambda = 1.0;
  std::string preset = "progressive";
  int grid_resolution = 48;
  int render_resolution = 64;
  int model_resolution = 64;
  int tet_resolution = 32;
  int fine_iterations = 200;  // split 70/30 geometry/texture
  int checkpoint_every = 100;
  std::string output_dir;

  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::string to_text() const;  // canonical snapshot, fixed key order
  void validate() const;
  PriorMode prior_mode() const;
};

struct SynthesisArtifacts {
  std::string run_dir;
  double iou = -1.0;  // vs the analytic target; -1 for remote runs
  double coarse_chamfer = -1.0;
  double fine_chamfer = -1.0;
};

// Full pipeline: coarse SDS -> marching-tets extraction -> fine refinement ->
// export, with config snapshot, checkpoints, step reports, meshes, turntable
// renders, and a metrics file in the run directory. On error a diagnostic
// file lands in the run directory and the exception propagates.
SynthesisArtifacts cmd_synthesize(const RunConfig& config);

// Writes the 48-pose dataset list and a manifest skeleton.
void cmd_prep_poses(const std::string& out_dir);

void cmd_extract_mesh(const std::string& checkpoint_path,
                      const std::string& mesh_out, int tet_resolution);

void cmd_render_turntable(const std::string& checkpoint_path,
                          const std::string& out_dir, int image_size);

// ---------------------------------------------------------------------------
// Paired view-consistency experiment: single-view optimization against the
// view-blind oracle vs quadruple optimization against the faithful oracle,
// on the azimuth-asymmetric nose target.

struct JanusConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int iterations = 160;
  int grid_resolution = 40;
  int render_resolution = 48;
  int model_resolution = 48;
  int eval_size = 64;  // silhouette resolution for the similarity metric
};

struct JanusRow {
  std::uint64_t seed = 0;
  double s_front_biased = 0.0;  // mirror similarity, single-view/view-blind run
  double s_quadruple = 0.0;     // mirror similarity, quadruple/faithful run
  bool pair_ok = false;         // s_quadruple < s_front_biased
  double corr_front = 0.0;      // run's 180-degree silhouette vs true front
  double corr_back = 0.0;       // vs true back
  bool front_like = false;      // corr_front > corr_back
};

// Mean NCC between silhouettes at azimuth pairs (a, a+180) for
// a in {0, 45, 90, 135}.
double mirror_similarity(const VoxelField& field, int image_size);

std::vector<JanusRow> run_janus_experiment(const JanusConfig& config);

// Writes report.txt plus silhouette PNGs; returns 0 when every pair satisfies
// the inequality and every front-biased run is front-like at 180 degrees.
int cmd_janus_report(const JanusConfig& config, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Prior-regime ablation on the cottage target: progressive blend vs the
// composite prior alone, same budget, topology of the extracted meshes.

struct AblationResult {
  SurfaceDefects progressive;
  SurfaceDefects pure_orthogonal;
  TriMesh mesh_progressive;
  TriMesh mesh_pure_orthogonal;
};

AblationResult run_lambda_ablation(std::uint64_t seed, int iterations,
                                   int grid_resolution, int render_resolution,
                                   int model_resolution, int tet_resolution);

}  // namespace ov
