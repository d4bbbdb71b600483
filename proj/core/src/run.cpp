#include "ov/run.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "ov/camera.hpp"
#include "ov/diffusion.hpp"
#include "ov/errors.hpp"
#include "ov/fine.hpp"
#include "ov/png_io.hpp"
#include "ov/rasterize.hpp"
#include "ov/render.hpp"
#include "ov/targets.hpp"
#include "ov/tetgrid.hpp"

namespace fs = std::filesystem;

namespace ov {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (blank) continue;
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "target") cfg.target = value;
      else if (key == "remote_host") cfg.remote_host = value;
      else if (key == "remote_port") cfg.remote_port = std::stoi(value);
      else if (key == "prompt") cfg.prompt = value;
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "coarse_iterations") cfg.coarse_iterations = std::stoi(value);
      else if (key == "lambda") cfg.lambda = std::stod(value);
      else if (key == "preset") cfg.preset = value;
      else if (key == "grid_resolution") cfg.grid_resolution = std::stoi(value);
      else if (key == "render_resolution") cfg.render_resolution = std::stoi(value);
      else if (key == "model_resolution") cfg.model_resolution = std::stoi(value);
      else if (key == "tet_resolution") cfg.tet_resolution = std::stoi(value);
      else if (key == "fine_iterations") cfg.fine_iterations = std::stoi(value);
      else if (key == "checkpoint_every") cfg.checkpoint_every = std::stoi(value);
      else if (key == "output_dir") cfg.output_dir = value;
      else throw ConfigError("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
      throw ConfigError("config key " + key + ": cannot parse value '" +
                        value + "'");
    } catch (const std::out_of_range&) {
      throw ConfigError("config key " + key + ": value out of range");
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_text(ss.str());
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "target = " << target << '\n'
     << "remote_host = " << remote_host << '\n'
     << "remote_port = " << remote_port << '\n'
     << "prompt = " << prompt << '\n'
     << "seed = " << seed << '\n'
     << "coarse_iterations = " << coarse_iterations << '\n'
     << "lambda = " << format_double(lambda) << '\n'
     << "preset = " << preset << '\n'
     << "grid_resolution = " << grid_resolution << '\n'
     << "render_resolution = " << render_resolution << '\n'
     << "model_resolution = " << model_resolution << '\n'
     << "tet_resolution = " << tet_resolution << '\n'
     << "fine_iterations = " << fine_iterations << '\n'
     << "checkpoint_every = " << checkpoint_every << '\n'
     << "output_dir = " << output_dir << '\n';
  return os.str();
}

void RunConfig::validate() const {
  if (target != "remote") make_target(target);  // throws on unknown names
  if (target == "remote" && (remote_host.empty() || remote_port <= 0))
    throw ConfigError("remote target needs remote_host and remote_port");
  if (coarse_iterations < 0) throw ConfigError("coarse_iterations must be >= 0");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (preset != "progressive" && preset != "pure-orthogonal" &&
      preset != "pure-pretrained")
    throw ConfigError("unknown preset: " + preset);
  if (grid_resolution < 2) throw ConfigError("grid_resolution must be >= 2");
  if (render_resolution < 8) throw ConfigError("render_resolution must be >= 8");
  if (model_resolution < 8) throw ConfigError("model_resolution must be >= 8");
  if (tet_resolution < 2) throw ConfigError("tet_resolution must be >= 2");
  if (fine_iterations < 0) throw ConfigError("fine_iterations must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

PriorMode RunConfig::prior_mode() const {
  if (preset == "pure-orthogonal") return PriorMode::kPureOrthogonal;
  if (preset == "pure-pretrained") return PriorMode::kPurePretrained;
  return PriorMode::kProgressive;
}

namespace {

std::string resolve_run_dir(const RunConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  const char* root = std::getenv("ORTHOVIEW_OUTPUT_ROOT");
  const std::string base = root ? root : "runs";
  return base + "/" + cfg.target + "-seed" + std::to_string(cfg.seed);
}

OraclePipeline pipeline_for(const RunConfig& cfg) {
  OraclePipeline p;
  p.render_width = cfg.render_resolution;
  p.render_height = cfg.render_resolution;
  p.target_beta = 0.005;
  p.bake_resolution = 96;
  return p;
}

SdsConfig sds_config_for(const RunConfig& cfg) {
  SdsConfig s;
  s.iterations = cfg.coarse_iterations;
  s.lambda = cfg.lambda;
  s.mode = cfg.prior_mode();
  s.render_width = cfg.render_resolution;
  s.render_height = cfg.render_resolution;
  s.model_resolution = cfg.model_resolution;
  s.prompt = cfg.prompt;
  s.seed = cfg.seed;
  return s;
}

std::vector<CameraPose> turntable_poses(int image_size) {
  std::vector<CameraPose> poses;
  for (int k = 0; k < 8; ++k) {
    CameraPose p;
    p.azimuth_deg = 45.0 * k;
    p.elevation_deg = 15.0;
    p.radius = 1.8;
    p.width = image_size;
    p.height = image_size;
    poses.push_back(p);
  }
  return poses;
}

std::string zero_pad(int v, int width) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << v;
  return os.str();
}

// Reference surface samples of an analytic target via a high-resolution bake.
std::vector<Vec3> reference_surface_samples(const AnalyticSdf& target,
                                            int count) {
  const VoxelField baked = bake_field(target, 96, 0.005);
  const TetGrid grid = init_tetgrid_from_field(baked, 48);
  const TriMesh mesh = marching_tets(grid);
  return sample_mesh_surface(mesh, count, 1234567);
}

}  // namespace

SynthesisArtifacts cmd_synthesize(const RunConfig& config) {
  config.validate();
  const std::string run_dir = resolve_run_dir(config);
  fs::create_directories(run_dir);

  try {
    {
      std::ofstream os(run_dir + "/config.txt");
      os << config.to_text();
      if (!os) throw IoError("cannot write config snapshot");
    }

    const NoiseSchedule schedule = NoiseSchedule::linear();
    const bool analytic = config.target != "remote";

    std::unique_ptr<ScoreOracle> oracle;
    AnalyticSdf target = target_sphere();
    if (analytic) {
      target = make_target(config.target);
      oracle = make_synthetic_target_oracle(target, pipeline_for(config), schedule);
    } else {
      oracle = make_remote_oracle(config.remote_host, config.remote_port);
    }

    // Coarse stage.
    SdsConfig sds = sds_config_for(config);
    VoxelField init =
        VoxelField::default_init(config.grid_resolution, sds.beta_start,
                                 config.seed);

    std::ofstream reports(run_dir + "/step_reports.ndjson");
    if (!reports) throw IoError("cannot open step report stream");
    int checkpoint_counter = 0;
    CoarseCallbacks callbacks;
    callbacks.on_step = [&](const VoxelField& f, const StepReport& r) {
      reports << step_report_line(r) << '\n';
      if (config.checkpoint_every > 0 &&
          (r.iteration + 1) % config.checkpoint_every == 0) {
        f.save(run_dir + "/checkpoint_" + zero_pad(r.iteration + 1, 6) + ".ovf");
        ++checkpoint_counter;
      }
    };

    CoarseResult coarse = optimize_coarse(std::move(init), oracle.get(),
                                          oracle.get(), sds, schedule,
                                          &callbacks);
    reports.close();
    coarse.field.save(run_dir + "/field_final.ovf");

    // Extraction.
    TetGrid grid = init_tetgrid_from_field(coarse.field, config.tet_resolution);
    const TriMesh coarse_mesh = marching_tets(grid);
    export_mesh(coarse_mesh, run_dir + "/mesh_coarse.obj", MeshFormat::kObj);
    export_mesh(coarse_mesh, run_dir + "/mesh_coarse.ply", MeshFormat::kPlyBinary);

    // Fine stage.
    FineConfig fine_cfg;
    fine_cfg.geometry_iters = config.fine_iterations * 7 / 10;
    fine_cfg.texture_iters = config.fine_iterations - fine_cfg.geometry_iters;
    fine_cfg.model_resolution = config.model_resolution;
    fine_cfg.prompt = config.prompt;
    fine_cfg.seed = config.seed ^ 0x9e3779b97f4a7c15ULL;
    FineResult fine = optimize_fine(std::move(grid), *oracle, fine_cfg, schedule);

    const TriMesh final_mesh = marching_tets(fine.grid);
    export_mesh(final_mesh, run_dir + "/mesh_final.obj", MeshFormat::kObj);
    export_mesh(final_mesh, run_dir + "/mesh_final.ply", MeshFormat::kPlyBinary);

    // Turntable renders of the refined mesh.
    RasterConfig raster;
    raster.width = 256;
    raster.height = 256;
    const auto poses = turntable_poses(256);
    for (std::size_t k = 0; k < poses.size(); ++k) {
      const RasterOutput view = rasterize_soft(final_mesh, poses[k], raster);
      write_png(view.color, run_dir + "/turntable_" + std::to_string(k) + ".png");
    }

    SynthesisArtifacts artifacts;
    artifacts.run_dir = run_dir;
    if (analytic) {
      const auto target_sdf = [&](const Vec3& p) { return target.sdf(p); };
      const auto field_sdf = [&](const Vec3& p) {
        return coarse.field.query_sdf(p);
      };
      artifacts.iou = occupancy_iou(field_sdf, target_sdf, 64);
      const auto ref = reference_surface_samples(target, 4000);
      if (!coarse_mesh.faces.empty())
        artifacts.coarse_chamfer = chamfer_distance(
            sample_mesh_surface(coarse_mesh, 4000, 42), ref);
      if (!final_mesh.faces.empty())
        artifacts.fine_chamfer =
            chamfer_distance(sample_mesh_surface(final_mesh, 4000, 42), ref);
      std::ofstream metrics(run_dir + "/metrics.txt");
      metrics << "iou = " << format_double(artifacts.iou) << '\n'
              << "coarse_chamfer = " << format_double(artifacts.coarse_chamfer)
              << '\n'
              << "fine_chamfer = " << format_double(artifacts.fine_chamfer)
              << '\n';
    }
    return artifacts;
  } catch (const std::exception& e) {
    std::ofstream diag(run_dir + "/error.txt");
    diag << e.what() << '\n';
    throw;
  }
}

void cmd_prep_poses(const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream os(out_dir + "/poses.txt");
    if (!os) throw IoError("cannot write pose list");
    os << poses_to_text(enumerate_dataset_poses());
  }
  {
    std::ofstream os(out_dir + "/manifest.tsv");
    if (!os) throw IoError("cannot write manifest skeleton");
    os << "# composite.png\tcaption\n";
  }
}

void cmd_extract_mesh(const std::string& checkpoint_path,
                      const std::string& mesh_out, int tet_resolution) {
  const VoxelField field = VoxelField::load(checkpoint_path);
  const TetGrid grid = init_tetgrid_from_field(field, tet_resolution);
  const TriMesh mesh = marching_tets(grid);
  const bool ply = mesh_out.size() >= 4 &&
                   mesh_out.compare(mesh_out.size() - 4, 4, ".ply") == 0;
  export_mesh(mesh, mesh_out, ply ? MeshFormat::kPlyBinary : MeshFormat::kObj);
}

void cmd_render_turntable(const std::string& checkpoint_path,
                          const std::string& out_dir, int image_size) {
  const VoxelField field = VoxelField::load(checkpoint_path);
  fs::create_directories(out_dir);
  RenderConfig rc;
  const auto poses = turntable_poses(image_size);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const RenderOutput out = render(field, pose_to_rays(poses[k]), rc);
    const std::string stem = out_dir + "/view_" + std::to_string(k);
    write_png(out.color, stem + "_color.png");
    write_png(out.weight_sum, stem + "_opacity.png");
    write_png_normalized(out.depth, rc.near_clip, rc.far_clip,
                         stem + "_depth.png");
  }
}

// ---------------------------------------------------------------------------

double mirror_similarity(const VoxelField& field, int image_size) {
  RenderConfig rc;
  double total = 0.0;
  const double azimuths[4] = {0.0, 45.0, 90.0, 135.0};
  for (double a : azimuths) {
    CameraPose front;
    front.azimuth_deg = a;
    front.elevation_deg = 15.0;
    front.width = image_size;
    front.height = image_size;
    CameraPose back = front;
    back.azimuth_deg = a + 180.0;
    const Image sil_a = render_silhouette(field, pose_to_rays(front), rc);
    const Image sil_b = render_silhouette(field, pose_to_rays(back), rc);
    total += normalized_cross_correlation(sil_a, sil_b);
  }
  return total / 4.0;
}

namespace {

Image true_target_silhouette(const AnalyticSdf& target, double azimuth,
                             int image_size) {
  const VoxelField baked = bake_field(target, 96, 0.005);
  CameraPose pose;
  pose.azimuth_deg = azimuth;
  pose.elevation_deg = 15.0;
  pose.width = image_size;
  pose.height = image_size;
  RenderConfig rc;
  return render_silhouette(baked, pose_to_rays(pose), rc);
}

VoxelField run_coarse_for_janus(const JanusConfig& cfg, std::uint64_t seed,
                                bool quadruple_faithful) {
  const AnalyticSdf nose = target_nose();
  const NoiseSchedule schedule = NoiseSchedule::linear();

  OraclePipeline pipe;
  pipe.render_width = cfg.render_resolution;
  pipe.render_height = cfg.render_resolution;

  SdsConfig sds;
  sds.iterations = cfg.iterations;
  sds.render_width = cfg.render_resolution;
  sds.render_height = cfg.render_resolution;
  sds.model_resolution = cfg.model_resolution;
  sds.seed = seed;

  VoxelField init =
      VoxelField::default_init(cfg.grid_resolution, sds.beta_start, seed);

  if (quadruple_faithful) {
    sds.mode = PriorMode::kPureOrthogonal;
    sds.views_per_step = 4;
    auto oracle = make_synthetic_target_oracle(nose, pipe, schedule);
    return optimize_coarse(std::move(init), oracle.get(), nullptr, sds,
                           schedule)
        .field;
  }
  sds.mode = PriorMode::kPurePretrained;
  sds.views_per_step = 1;
  auto oracle = make_front_biased_oracle(nose, pipe, schedule);
  return optimize_coarse(std::move(init), nullptr, oracle.get(), sds, schedule)
      .field;
}

}  // namespace

std::vector<JanusRow> run_janus_experiment(const JanusConfig& cfg) {
  std::vector<JanusRow> rows;
  const AnalyticSdf nose = target_nose();
  const Image true_front = true_target_silhouette(nose, 0.0, cfg.eval_size);
  const Image true_back = true_target_silhouette(nose, 180.0, cfg.eval_size);

  for (std::uint64_t seed : cfg.seeds) {
    JanusRow row;
    row.seed = seed;

    const VoxelField biased = run_coarse_for_janus(cfg, seed, false);
    const VoxelField faithful = run_coarse_for_janus(cfg, seed, true);

    row.s_front_biased = mirror_similarity(biased, cfg.eval_size);
    row.s_quadruple = mirror_similarity(faithful, cfg.eval_size);
    row.pair_ok = row.s_quadruple < row.s_front_biased;

    CameraPose back_pose;
    back_pose.azimuth_deg = 180.0;
    back_pose.elevation_deg = 15.0;
    back_pose.width = cfg.eval_size;
    back_pose.height = cfg.eval_size;
    RenderConfig rc;
    const Image run_back =
        render_silhouette(biased, pose_to_rays(back_pose), rc);
    row.corr_front = normalized_cross_correlation(run_back, true_front);
    row.corr_back = normalized_cross_correlation(run_back, true_back);
    row.front_like = row.corr_front > row.corr_back;
    rows.push_back(row);
  }
  return rows;
}

int cmd_janus_report(const JanusConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto rows = run_janus_experiment(cfg);

  std::ofstream os(out_dir + "/report.txt");
  os << "# seed  S_front_biased  S_quadruple  pair_ok  corr_front  corr_back  "
        "front_like\n";
  bool all_ok = true;
  for (const auto& r : rows) {
    os << r.seed << "  " << format_double(r.s_front_biased) << "  "
       << format_double(r.s_quadruple) << "  " << (r.pair_ok ? 1 : 0) << "  "
       << format_double(r.corr_front) << "  " << format_double(r.corr_back)
       << "  " << (r.front_like ? 1 : 0) << '\n';
    all_ok = all_ok && r.pair_ok && r.front_like;
  }
  os << (all_ok ? "RESULT: pass\n" : "RESULT: fail\n");
  return all_ok ? 0 : 1;
}

AblationResult run_lambda_ablation(std::uint64_t seed, int iterations,
                                   int grid_resolution, int render_resolution,
                                   int model_resolution, int tet_resolution) {
  const AnalyticSdf cottage = target_cottage();
  const NoiseSchedule schedule = NoiseSchedule::linear();

  OraclePipeline pipe;
  pipe.render_width = render_resolution;
  pipe.render_height = render_resolution;
  auto oracle = make_synthetic_target_oracle(cottage, pipe, schedule);

  auto run_one = [&](PriorMode mode) {
    SdsConfig sds;
    sds.iterations = iterations;
    sds.mode = mode;
    sds.render_width = render_resolution;
    sds.render_height = render_resolution;
    sds.model_resolution = model_resolution;
    sds.seed = seed;
    VoxelField init =
        VoxelField::default_init(grid_resolution, sds.beta_start, seed);
    CoarseResult res = optimize_coarse(std::move(init), oracle.get(),
                                       oracle.get(), sds, schedule);
    const TetGrid grid = init_tetgrid_from_field(res.field, tet_resolution);
    return marching_tets(grid);
  };

  AblationResult out;
  out.mesh_progressive = run_one(PriorMode::kProgressive);
  out.mesh_pure_orthogonal = run_one(PriorMode::kPureOrthogonal);
  out.progressive = measure_surface_defects(out.mesh_progressive);
  out.pure_orthogonal = measure_surface_defects(out.mesh_pure_orthogonal);
  return out;
}

}  // namespace ov
