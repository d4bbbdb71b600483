#include "ov/sds.hpp"

#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ov/compose.hpp"
#include "ov/errors.hpp"

namespace ov {

std::pair<double, double> blend_weights(int l, int total, double lambda) {
  if (total <= 0) throw ConfigError("blend_weights: total iterations must be positive");
  if (l < 0 || l > total) throw ConfigError("blend_weights: iteration out of range");
  if (!(lambda > 0.0)) throw ConfigError("blend_weights: lambda must be positive");
  const double frac = static_cast<double>(l) / static_cast<double>(total);
  const double w_pre = std::pow(frac, lambda);
  return {1.0 - w_pre, w_pre};
}

void SdsConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(learning_rate > 0.0) || !(learning_rate_end > 0.0))
    throw ConfigError("learning rates must be positive");
  if (t_start <= t_end || t_end < 1) throw ConfigError("need t_start > t_end >= 1");
  if (t_jitter < 0) throw ConfigError("t_jitter must be non-negative");
  if (render_width <= 0 || render_height <= 0)
    throw ConfigError("render resolution must be positive");
  if (model_resolution <= 0) throw ConfigError("model resolution must be positive");
  if (!(beta_start > 0.0) || !(beta_end > 0.0))
    throw ConfigError("beta schedule must stay positive");
  if (views_per_step != 1 && views_per_step != 4)
    throw ConfigError("views_per_step must be 1 or 4");
  if (mode != PriorMode::kPurePretrained && views_per_step != 4)
    throw ConfigError("the composite prior needs the full quadruple");
  pose.validate();
}

std::string step_report_line(const StepReport& r) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["t"] = r.t;
  j["w_ov"] = r.w_ov;
  j["w_pre"] = r.w_pre;
  j["grad_norm_ov"] = r.grad_norm_ov;
  j["grad_norm_pre"] = r.grad_norm_pre;
  j["residual_ov"] = r.residual_ov;
  j["residual_pre"] = r.residual_pre;
  j["skipped"] = r.skipped;
  return j.dump();
}

int anneal_timestep(int l, int total, const SdsConfig& cfg, Rng& rng) {
  if (l < 0 || l >= std::max(total, 1))
    throw ConfigError("anneal_timestep: iteration out of range");
  const double frac = total > 0 ? static_cast<double>(l) / total : 0.0;
  const double base = cfg.t_start + (cfg.t_end - cfg.t_start) * frac;
  long t = std::lround(base);
  if (cfg.t_jitter > 0) t += rng.uniform_int(-cfg.t_jitter, cfg.t_jitter);
  t = std::clamp(t, static_cast<long>(cfg.t_end), static_cast<long>(cfg.t_start));
  return static_cast<int>(t);
}

namespace {

double image_norm(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += v * v;
  return std::sqrt(s);
}

Image render_view_color(const VoxelField& field, const CameraPose& pose,
                        const SdsConfig& cfg, RenderOutput& out_keep,
                        RayBundle& rays_keep) {
  CameraPose p = pose;
  p.width = cfg.render_width;
  p.height = cfg.render_height;
  rays_keep = pose_to_rays(p);
  out_keep = render(field, rays_keep, cfg.render);
  return out_keep.color;
}

}  // namespace

FieldGradient sds_step_ov(const VoxelField& field, ScoreOracle& oracle,
                          const std::array<CameraPose, 4>& cameras, int t,
                          const NoiseSchedule& schedule, const SdsConfig& cfg,
                          Rng& rng, SdsStepDiag* diag) {
  std::array<RenderOutput, 4> outs;
  std::array<RayBundle, 4> rays;
  ImageQuad quad;
  for (int k = 0; k < 4; ++k)
    quad.views[k] = render_view_color(field, cameras[k], cfg, outs[k], rays[k]);

  const Image composite = tile(quad);
  Image model_in = resize(composite, cfg.model_resolution, cfg.model_resolution);
  for (double& v : model_in.data) v = 2.0 * v - 1.0;

  const NoisedImage noised = add_noise(model_in, t, schedule, rng);

  PromptContext ctx;
  ctx.prompt = cfg.prompt;
  ctx.composite = true;
  ctx.cameras.assign(cameras.begin(), cameras.end());
  ctx.render_beta = field.beta();
  const std::vector<Image> eps_hat = oracle.predict_noise({noised.noisy}, t, ctx);
  if (eps_hat.size() != 1 || !eps_hat[0].same_shape(model_in))
    throw ProtocolError("oracle returned wrong shape for the composite");

  const double omega = 1.0 - schedule.alpha_bar(t);
  Image residual(model_in.width, model_in.height, 3);
  for (std::size_t i = 0; i < residual.data.size(); ++i)
    residual.data[i] = omega * (eps_hat[0].data[i] - noised.eps.data[i]);

  // Chain through the [0,1] -> [-1,1] pixel map (factor 2), the resize, and
  // the tiling; then one renderer adjoint per view.
  Image up_model = residual;
  for (double& v : up_model.data) v *= 2.0;
  const Image up_composite =
      resize_transpose(up_model, composite.width, composite.height);
  const ImageQuad up_views = untile(up_composite);

  FieldGradient grad;
  grad.resize_like(field);
  for (int k = 0; k < 4; ++k)
    render_adjoint(field, rays[k], cfg.render, outs[k].cache, &up_views.views[k],
                   nullptr, grad);

  if (diag) {
    diag->residual_norm = image_norm(residual);
    diag->grad_norm = grad.norm();
  }
  return grad;
}

FieldGradient sds_step_pre(const VoxelField& field, ScoreOracle& oracle,
                           const std::vector<CameraPose>& cameras, int t,
                           const NoiseSchedule& schedule, const SdsConfig& cfg,
                           Rng& rng, SdsStepDiag* diag) {
  if (cameras.empty()) throw ConfigError("sds_step_pre: no cameras");
  const std::size_t n = cameras.size();
  std::vector<RenderOutput> outs(n);
  std::vector<RayBundle> rays(n);
  std::vector<Image> model_in(n);
  std::vector<Image> eps(n);
  std::vector<Image> noisy(n);

  for (std::size_t k = 0; k < n; ++k) {
    Image view = render_view_color(field, cameras[k], cfg, outs[k], rays[k]);
    Image sized = resize(view, cfg.model_resolution, cfg.model_resolution);
    for (double& v : sized.data) v = 2.0 * v - 1.0;
    NoisedImage nz = add_noise(sized, t, schedule, rng);
    model_in[k] = std::move(sized);
    eps[k] = std::move(nz.eps);
    noisy[k] = std::move(nz.noisy);
  }

  PromptContext ctx;
  ctx.prompt = cfg.prompt;
  ctx.composite = false;
  ctx.cameras = cameras;
  ctx.render_beta = field.beta();
  const std::vector<Image> eps_hat = oracle.predict_noise(noisy, t, ctx);
  if (eps_hat.size() != n)
    throw ProtocolError("oracle batch size mismatch");

  const double omega = 1.0 - schedule.alpha_bar(t);
  FieldGradient grad;
  grad.resize_like(field);
  double res_sq = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    if (!eps_hat[k].same_shape(model_in[k]))
      throw ProtocolError("oracle returned wrong shape for view " +
                          std::to_string(k));
    Image up_model(cfg.model_resolution, cfg.model_resolution, 3);
    for (std::size_t i = 0; i < up_model.data.size(); ++i) {
      const double r = omega * (eps_hat[k].data[i] - eps[k].data[i]);
      res_sq += r * r;
      up_model.data[i] = 2.0 * r;
    }
    const Image up_view =
        resize_transpose(up_model, cfg.render_width, cfg.render_height);
    render_adjoint(field, rays[k], cfg.render, outs[k].cache, &up_view, nullptr,
                   grad);
  }

  if (diag) {
    diag->residual_norm = std::sqrt(res_sq);
    diag->grad_norm = grad.norm();
  }
  return grad;
}

namespace {

// Adaptive-moment state over the flattened (sdf, color) parameter vector.
// Updates are lazy: SDS gradients have sparse support that rotates with the
// sampled cameras, and decaying the second moment of untouched entries makes
// the next touch step at many times the learning rate. Moments advance only where
// the gradient is nonzero, with per-entry touch counts for bias correction.
struct AdamState {
  std::vector<double> m_sdf, v_sdf, m_col, v_col;
  std::vector<int> k_sdf, k_col;

  void init(const VoxelField& f) {
    m_sdf.assign(f.node_count(), 0.0);
    v_sdf.assign(f.node_count(), 0.0);
    m_col.assign(3 * f.node_count(), 0.0);
    v_col.assign(3 * f.node_count(), 0.0);
    k_sdf.assign(f.node_count(), 0);
    k_col.assign(3 * f.node_count(), 0);
  }

  static double lazy_step(double g, double& m, double& v, int& k, double b1,
                          double b2, double lr, double eps) {
    if (g == 0.0) return 0.0;
    ++k;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double m_hat = m / (1.0 - std::pow(b1, k));
    const double v_hat = v / (1.0 - std::pow(b2, k));
    return -lr * m_hat / (std::sqrt(v_hat) + eps);
  }

  void apply(VoxelField& field, const FieldGradient& g, const SdsConfig& cfg,
             double lr) {
    const double b1 = cfg.moment_decay1, b2 = cfg.moment_decay2;
    std::vector<double> dsdf(g.sdf.size());
    std::vector<double> dcol(g.color.size());
    for (std::size_t i = 0; i < g.sdf.size(); ++i)
      dsdf[i] = lazy_step(g.sdf[i], m_sdf[i], v_sdf[i], k_sdf[i], b1, b2, lr,
                          cfg.adam_epsilon);
    for (std::size_t i = 0; i < g.color.size(); ++i)
      dcol[i] = lazy_step(g.color[i], m_col[i], v_col[i], k_col[i], b1, b2, lr,
                          cfg.adam_epsilon);
    field.apply_update(dsdf, dcol);
  }
};

}  // namespace

CoarseResult optimize_coarse(VoxelField field, ScoreOracle* oracle_ov,
                             ScoreOracle* oracle_pre, const SdsConfig& cfg,
                             const NoiseSchedule& schedule,
                             const CoarseCallbacks* callbacks) {
  cfg.validate();
  const int L = cfg.iterations;
  if (cfg.mode != PriorMode::kPurePretrained && oracle_ov == nullptr)
    throw ConfigError("orthogonal-view oracle required for this mode");
  if (cfg.mode != PriorMode::kPureOrthogonal && oracle_pre == nullptr)
    throw ConfigError("pre-trained oracle required for this mode");

  Rng rng(cfg.seed);
  AdamState adam;
  adam.init(field);

  PoseSampleConfig pose_cfg = cfg.pose;
  pose_cfg.width = cfg.render_width;
  pose_cfg.height = cfg.render_height;

  CoarseResult result{std::move(field), {}, 0};
  result.reports.reserve(L);

  for (int l = 0; l < L; ++l) {
    const auto t_begin = std::chrono::steady_clock::now();
    const double beta_frac = L > 1 ? static_cast<double>(l) / (L - 1) : 1.0;
    result.field.set_beta(cfg.beta_start +
                          (cfg.beta_end - cfg.beta_start) * beta_frac);

    const CameraPose base = sample_base_pose(rng, pose_cfg);
    const std::array<CameraPose, 4> quad = extend_quadruple(base);
    const int t = anneal_timestep(l, L, cfg, rng);

    double w_ov = 0.0, w_pre = 0.0;
    switch (cfg.mode) {
      case PriorMode::kProgressive:
        std::tie(w_ov, w_pre) = blend_weights(l, L, cfg.lambda);
        break;
      case PriorMode::kPureOrthogonal:
        w_ov = 1.0;
        break;
      case PriorMode::kPurePretrained:
        w_pre = 1.0;
        break;
    }

    StepReport report;
    report.iteration = l;
    report.t = t;
    report.w_ov = w_ov;
    report.w_pre = w_pre;

    FieldGradient total;
    total.resize_like(result.field);
    if (w_ov > 0.0) {
      SdsStepDiag diag;
      const FieldGradient g =
          sds_step_ov(result.field, *oracle_ov, quad, t, schedule, cfg, rng, &diag);
      total.add_scaled(g, w_ov);
      report.grad_norm_ov = diag.grad_norm;
      report.residual_ov = diag.residual_norm;
    }
    if (w_pre > 0.0) {
      std::vector<CameraPose> views;
      if (cfg.views_per_step == 4)
        views.assign(quad.begin(), quad.end());
      else
        views.push_back(base);
      SdsStepDiag diag;
      const FieldGradient g = sds_step_pre(result.field, *oracle_pre, views, t,
                                           schedule, cfg, rng, &diag);
      total.add_scaled(g, w_pre);
      report.grad_norm_pre = diag.grad_norm;
      report.residual_pre = diag.residual_norm;
    }

    if (!total.finite()) {
      report.skipped = true;
      result.skipped_steps++;
      if (result.skipped_steps > std::max(1, L / 100))
        throw OptimizationError(
            "aborting: " + std::to_string(result.skipped_steps) +
            " steps skipped due to non-finite gradients by iteration " +
            std::to_string(l));
    } else {
      const double lr_frac = L > 1 ? static_cast<double>(l) / (L - 1) : 1.0;
      const double lr =
          cfg.learning_rate +
          (cfg.learning_rate_end - cfg.learning_rate) * lr_frac;
      adam.apply(result.field, total, cfg, lr);
    }

    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_begin)
                         .count();
    if (callbacks && callbacks->on_step) callbacks->on_step(result.field, report);
    result.reports.push_back(report);
  }
  return result;
}

}  // namespace ov
