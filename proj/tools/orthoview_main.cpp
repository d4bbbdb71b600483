// orthoview: score-distillation 3D synthesis from orthogonal-view composites.
//
// Subcommands: synthesize, prep-poses, janus-report, extract-mesh,
// render-turntable.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ov/errors.hpp"
#include "ov/run.hpp"
#include "ov/targets.hpp"

namespace {

// Flags override keys from an optional config file.
void add_config_flags(CLI::App* cmd, ov::RunConfig& cfg, std::string& config_path) {
  cmd->add_option("--config", config_path, "key = value config file");
  cmd->add_option("--target", cfg.target,
                  "analytic target name or 'remote'");
  cmd->add_option("--remote-host", cfg.remote_host, "score endpoint host");
  cmd->add_option("--remote-port", cfg.remote_port, "score endpoint port");
  cmd->add_option("--prompt", cfg.prompt, "text prompt (remote oracles)");
  cmd->add_option("--seed", cfg.seed, "RNG seed");
  cmd->add_option("--coarse-iterations", cfg.coarse_iterations,
                  "coarse optimization steps");
  cmd->add_option("--lambda", cfg.lambda, "progressive blend exponent");
  cmd->add_option("--preset", cfg.preset,
                  "progressive | pure-orthogonal | pure-pretrained");
  cmd->add_option("--grid-resolution", cfg.grid_resolution,
                  "voxel field nodes per axis");
  cmd->add_option("--render-resolution", cfg.render_resolution,
                  "per-view render size");
  cmd->add_option("--model-resolution", cfg.model_resolution,
                  "oracle-facing image size");
  cmd->add_option("--tet-resolution", cfg.tet_resolution,
                  "tetrahedral grid cells per axis");
  cmd->add_option("--fine-iterations", cfg.fine_iterations,
                  "fine-stage steps (70/30 geometry/texture)");
  cmd->add_option("--checkpoint-every", cfg.checkpoint_every,
                  "checkpoint interval in steps (0 = final only)");
  cmd->add_option("--output-dir", cfg.output_dir,
                  "run directory (default: $ORTHOVIEW_OUTPUT_ROOT/<name>)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orthoview: progressive two-prior score distillation to 3D"};
  app.require_subcommand(1);

  // synthesize
  ov::RunConfig cfg;
  std::string config_path;
  auto* synth = app.add_subcommand(
      "synthesize", "coarse SDS -> mesh extraction -> fine refinement -> export");
  add_config_flags(synth, cfg, config_path);

  // prep-poses
  std::string prep_out = "prep";
  auto* prep = app.add_subcommand("prep-poses",
                                  "write the 48-pose list and manifest skeleton");
  prep->add_option("--output-dir", prep_out, "output directory");

  // janus-report
  ov::JanusConfig janus_cfg;
  std::string janus_out = "janus";
  int janus_seed_count = 5;
  auto* janus = app.add_subcommand(
      "janus-report", "paired single-view vs quadruple consistency experiment");
  janus->add_option("--output-dir", janus_out, "output directory");
  janus->add_option("--seeds", janus_seed_count, "number of paired seeds");
  janus->add_option("--iterations", janus_cfg.iterations, "steps per run");
  janus->add_option("--grid-resolution", janus_cfg.grid_resolution,
                    "voxel field nodes per axis");
  janus->add_option("--render-resolution", janus_cfg.render_resolution,
                    "per-view render size");

  // extract-mesh
  std::string ckpt_path, mesh_out = "mesh.obj";
  int extract_res = 32;
  auto* extract = app.add_subcommand("extract-mesh",
                                     "marching tetrahedra over a checkpoint");
  extract->add_option("checkpoint", ckpt_path, "OVF1 checkpoint")->required();
  extract->add_option("--output", mesh_out, "mesh path (.obj or .ply)");
  extract->add_option("--tet-resolution", extract_res, "grid cells per axis");

  // render-turntable
  std::string tt_ckpt, tt_out = "turntable";
  int tt_size = 256;
  auto* turntable = app.add_subcommand(
      "render-turntable", "volume-render 8 poses at 45-degree steps to PNG");
  turntable->add_option("checkpoint", tt_ckpt, "OVF1 checkpoint")->required();
  turntable->add_option("--output-dir", tt_out, "output directory");
  turntable->add_option("--image-size", tt_size, "PNG size in pixels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      ov::RunConfig merged = cfg;
      if (!config_path.empty()) {
        merged = ov::RunConfig::from_file(config_path);
        // Re-parse flags on top of the file values.
        ov::RunConfig flag_defaults;
        auto override_if = [&](auto& dst, const auto& flag_val,
                               const auto& default_val) {
          if (!(flag_val == default_val)) dst = flag_val;
        };
        override_if(merged.target, cfg.target, flag_defaults.target);
        override_if(merged.remote_host, cfg.remote_host, flag_defaults.remote_host);
        override_if(merged.remote_port, cfg.remote_port, flag_defaults.remote_port);
        override_if(merged.prompt, cfg.prompt, flag_defaults.prompt);
        override_if(merged.seed, cfg.seed, flag_defaults.seed);
        override_if(merged.coarse_iterations, cfg.coarse_iterations,
                    flag_defaults.coarse_iterations);
        override_if(merged.lambda, cfg.lambda, flag_defaults.lambda);
        override_if(merged.preset, cfg.preset, flag_defaults.preset);
        override_if(merged.grid_resolution, cfg.grid_resolution,
                    flag_defaults.grid_resolution);
        override_if(merged.render_resolution, cfg.render_resolution,
                    flag_defaults.render_resolution);
        override_if(merged.model_resolution, cfg.model_resolution,
                    flag_defaults.model_resolution);
        override_if(merged.tet_resolution, cfg.tet_resolution,
                    flag_defaults.tet_resolution);
        override_if(merged.fine_iterations, cfg.fine_iterations,
                    flag_defaults.fine_iterations);
        override_if(merged.checkpoint_every, cfg.checkpoint_every,
                    flag_defaults.checkpoint_every);
        override_if(merged.output_dir, cfg.output_dir, flag_defaults.output_dir);
      }
      const ov::SynthesisArtifacts art = ov::cmd_synthesize(merged);
      std::cout << "run directory: " << art.run_dir << '\n';
      if (art.iou >= 0.0) {
        std::cout << "occupancy IoU vs target: " << art.iou << '\n'
                  << "coarse chamfer: " << art.coarse_chamfer << '\n'
                  << "fine chamfer: " << art.fine_chamfer << '\n';
      }
      return 0;
    }
    if (prep->parsed()) {
      ov::cmd_prep_poses(prep_out);
      std::cout << "wrote " << prep_out << "/poses.txt and manifest.tsv\n";
      return 0;
    }
    if (janus->parsed()) {
      janus_cfg.seeds.clear();
      for (int s = 1; s <= janus_seed_count; ++s) janus_cfg.seeds.push_back(s);
      const int rc = ov::cmd_janus_report(janus_cfg, janus_out);
      std::cout << "report: " << janus_out << "/report.txt ("
                << (rc == 0 ? "pass" : "fail") << ")\n";
      return rc;
    }
    if (extract->parsed()) {
      ov::cmd_extract_mesh(ckpt_path, mesh_out, extract_res);
      std::cout << "wrote " << mesh_out << '\n';
      return 0;
    }
    if (turntable->parsed()) {
      ov::cmd_render_turntable(tt_ckpt, tt_out, tt_size);
      std::cout << "wrote 8 views under " << tt_out << '\n';
      return 0;
    }
  } catch (const ov::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
