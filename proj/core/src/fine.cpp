#include "ov/fine.hpp"

#include <algorithm>
#include <cmath>

#include "ov/compose.hpp"
#include "ov/errors.hpp"

namespace ov {

void backprop_mesh_to_grid(const TetGrid& grid,
                           const std::vector<CrossingRef>& provenance,
                           const MeshGradient& mesh_grad,
                           TetGridGradient& grid_grad) {
  if (provenance.size() != mesh_grad.position.size())
    throw ContractError("provenance does not match mesh gradient");
  if (grid_grad.sdf.size() != grid.verts.size())
    grid_grad.resize(grid.verts.size());

  for (std::size_t m = 0; m < provenance.size(); ++m) {
    const CrossingRef& cr = provenance[m];
    const Vec3& gpos = mesh_grad.position[m];
    const Vec3& gcol = mesh_grad.color[m];
    const double tau = cr.tau;

    grid_grad.offset[cr.vi] += (1.0 - tau) * gpos;
    grid_grad.offset[cr.vj] += tau * gpos;
    grid_grad.color[cr.vi] += (1.0 - tau) * gcol;
    grid_grad.color[cr.vj] += tau * gcol;

    // tau = f_i / (f_i - f_j); crossing position and color both move with it.
    const double fi = grid.verts[cr.vi].sdf == 0.0 ? 1e-8 : grid.verts[cr.vi].sdf;
    const double fj = grid.verts[cr.vj].sdf == 0.0 ? 1e-8 : grid.verts[cr.vj].sdf;
    const double denom = fi - fj;
    if (denom == 0.0) continue;
    const Vec3 dpos_dtau = grid.deformed(cr.vj) - grid.deformed(cr.vi);
    const Vec3 dcol_dtau = grid.verts[cr.vj].color - grid.verts[cr.vi].color;
    const double gtau = gpos.dot(dpos_dtau) + gcol.dot(dcol_dtau);
    grid_grad.sdf[cr.vi] += gtau * (-fj / (denom * denom));
    grid_grad.sdf[cr.vj] += gtau * (fi / (denom * denom));
  }
}

void FineConfig::validate() const {
  if (geometry_iters < 0 || texture_iters < 0)
    throw ConfigError("fine iteration counts must be non-negative");
  if (!(lr_sdf > 0.0) || !(lr_offset > 0.0) || !(lr_color > 0.0))
    throw ConfigError("fine learning rates must be positive");
  if (t_start <= t_end || t_end < 1) throw ConfigError("need t_start > t_end >= 1");
  if (model_resolution <= 0) throw ConfigError("model resolution must be positive");
  pose.validate();
}

namespace {

struct Moments {
  std::vector<double> m, v;
  std::vector<int> k;
  void init(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    k.assign(n, 0);
  }
};

// Lazy adaptive-moment update (sparse gradient support; see the coarse
// optimizer): entries with zero gradient keep their moments untouched.
std::vector<double> adam_step(Moments& mo, const std::vector<double>& g,
                              double lr, double b1, double b2, double eps) {
  std::vector<double> delta(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 0.0) continue;
    ++mo.k[i];
    mo.m[i] = b1 * mo.m[i] + (1.0 - b1) * g[i];
    mo.v[i] = b2 * mo.v[i] + (1.0 - b2) * g[i] * g[i];
    const double m_hat = mo.m[i] / (1.0 - std::pow(b1, mo.k[i]));
    const double v_hat = mo.v[i] / (1.0 - std::pow(b2, mo.k[i]));
    delta[i] = -lr * m_hat / (std::sqrt(v_hat) + eps);
  }
  return delta;
}

std::vector<double> flatten(const std::vector<Vec3>& v) {
  std::vector<double> out(3 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[3 * i] = v[i].x();
    out[3 * i + 1] = v[i].y();
    out[3 * i + 2] = v[i].z();
  }
  return out;
}

int fine_timestep(int l, int total, const FineConfig& cfg, Rng& rng) {
  const double frac = total > 0 ? static_cast<double>(l) / total : 0.0;
  long t = std::lround(cfg.t_start + (cfg.t_end - cfg.t_start) * frac);
  if (cfg.t_jitter > 0) t += rng.uniform_int(-cfg.t_jitter, cfg.t_jitter);
  t = std::clamp(t, static_cast<long>(cfg.t_end), static_cast<long>(cfg.t_start));
  return static_cast<int>(t);
}

}  // namespace

FineResult optimize_fine(TetGrid grid, ScoreOracle& oracle,
                         const FineConfig& cfg, const NoiseSchedule& schedule,
                         const FineCallbacks* callbacks) {
  cfg.validate();
  const int total = cfg.geometry_iters + cfg.texture_iters;
  Rng rng(cfg.seed);

  const std::size_t n = grid.verts.size();
  Moments mo_sdf, mo_off, mo_col;
  mo_sdf.init(n);
  mo_off.init(3 * n);
  mo_col.init(3 * n);

  PoseSampleConfig pose_cfg = cfg.pose;
  pose_cfg.width = cfg.raster.width;
  pose_cfg.height = cfg.raster.height;

  FineResult result{std::move(grid), {}};
  result.reports.reserve(total);

  for (int l = 0; l < total; ++l) {
    const bool geometry_phase = l < cfg.geometry_iters;
    FineStepReport report;
    report.iteration = l;
    report.geometry_phase = geometry_phase;

    const CameraPose pose = sample_base_pose(rng, pose_cfg);
    const int t = fine_timestep(l, total, cfg, rng);
    report.t = t;

    std::vector<CrossingRef> provenance;
    const TriMesh mesh = marching_tets(result.grid, &provenance);
    if (mesh.faces.empty()) {
      report.skipped = true;
      result.reports.push_back(report);
      continue;
    }

    const RasterOutput out = rasterize_soft(mesh, pose, cfg.raster);
    Image model_in = resize(out.color, cfg.model_resolution, cfg.model_resolution);
    for (double& v : model_in.data) v = 2.0 * v - 1.0;
    const NoisedImage noised = add_noise(model_in, t, schedule, rng);

    PromptContext ctx;
    ctx.prompt = cfg.prompt;
    ctx.composite = false;
    ctx.cameras = {pose};
    const std::vector<Image> eps_hat =
        oracle.predict_noise({noised.noisy}, t, ctx);
    if (eps_hat.size() != 1 || !eps_hat[0].same_shape(model_in))
      throw ProtocolError("oracle returned wrong shape in fine stage");

    const double omega = 1.0 - schedule.alpha_bar(t);
    Image up_model(cfg.model_resolution, cfg.model_resolution, 3);
    double res_sq = 0.0;
    for (std::size_t i = 0; i < up_model.data.size(); ++i) {
      const double r = omega * (eps_hat[0].data[i] - noised.eps.data[i]);
      res_sq += r * r;
      up_model.data[i] = 2.0 * r;
    }
    report.residual_norm = std::sqrt(res_sq);

    const Image up_raster =
        resize_transpose(up_model, cfg.raster.width, cfg.raster.height);
    const MeshGradient mg =
        rasterize_soft_adjoint(mesh, pose, cfg.raster, nullptr, &up_raster);

    TetGridGradient gg;
    gg.resize(n);
    backprop_mesh_to_grid(result.grid, provenance, mg, gg);

    double gnorm_sq = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      gnorm_sq += gg.sdf[i] * gg.sdf[i] + gg.offset[i].squaredNorm() +
                  gg.color[i].squaredNorm();
      if (!std::isfinite(gg.sdf[i]) || !gg.offset[i].allFinite() ||
          !gg.color[i].allFinite())
        finite = false;
    }
    report.grad_norm = std::sqrt(gnorm_sq);
    if (!finite) {
      report.skipped = true;
      result.reports.push_back(report);
      continue;
    }

    if (geometry_phase) {
      const auto dsdf = adam_step(mo_sdf, gg.sdf, cfg.lr_sdf, cfg.moment_decay1,
                                  cfg.moment_decay2, cfg.adam_epsilon);
      const auto doff =
          adam_step(mo_off, flatten(gg.offset), cfg.lr_offset,
                    cfg.moment_decay1, cfg.moment_decay2, cfg.adam_epsilon);
      for (std::size_t i = 0; i < n; ++i) result.grid.verts[i].sdf += dsdf[i];

      // Deformation with inversion backtracking: halve the step until all
      // tetrahedra stay positively oriented, then clamp.
      std::vector<Vec3> saved(n);
      for (std::size_t i = 0; i < n; ++i) saved[i] = result.grid.verts[i].offset;
      double scale = 1.0;
      bool ok = false;
      for (int attempt = 0; attempt <= 10; ++attempt) {
        for (std::size_t i = 0; i < n; ++i)
          result.grid.verts[i].offset =
              saved[i] + scale * Vec3(doff[3 * i], doff[3 * i + 1],
                                      doff[3 * i + 2]);
        result.grid.clamp_offsets();
        if (result.grid.inverted_count() == 0) {
          ok = true;
          break;
        }
        report.backtracks++;
        scale *= 0.5;
      }
      if (!ok) {
        for (std::size_t i = 0; i < n; ++i)
          result.grid.verts[i].offset = saved[i];
      }
    } else {
      const auto dcol =
          adam_step(mo_col, flatten(gg.color), cfg.lr_color, cfg.moment_decay1,
                    cfg.moment_decay2, cfg.adam_epsilon);
      for (std::size_t i = 0; i < n; ++i)
        result.grid.verts[i].color +=
            Vec3(dcol[3 * i], dcol[3 * i + 1], dcol[3 * i + 2]);
    }

    if (callbacks && callbacks->on_step) callbacks->on_step(result.grid, report);
    result.reports.push_back(report);
  }
  return result;
}

}  // namespace ov
