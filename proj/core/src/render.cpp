#include "ov/render.hpp"

#include <algorithm>
#include <cmath>

#include "ov/errors.hpp"

namespace ov {

namespace {

// Slab intersection against the unit cube [-0.5, 0.5]^3.
bool intersect_cube(const Vec3& o, const Vec3& d, double& t0, double& t1) {
  t0 = 0.0;
  t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < -0.5 || o[a] > 0.5) return false;
      continue;
    }
    double lo = (-0.5 - o[a]) / d[a];
    double hi = (0.5 - o[a]) / d[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
    if (t0 > t1) return false;
  }
  return t1 > t0;
}

RaySpan compute_span(const Ray& ray, const RenderConfig& cfg) {
  RaySpan span;
  double t0, t1;
  if (!intersect_cube(ray.origin, ray.dir, t0, t1)) return span;
  span.near = std::max(t0, cfg.near_clip);
  span.far = std::min(t1, cfg.far_clip);
  span.hit = span.near < span.far;
  return span;
}

inline Vec3 clamp01(const Vec3& c) {
  return Vec3(std::clamp(c.x(), 0.0, 1.0), std::clamp(c.y(), 0.0, 1.0),
              std::clamp(c.z(), 0.0, 1.0));
}

}  // namespace

double FieldGradient::norm() const {
  double s = 0.0;
  for (double v : sdf) s += v * v;
  for (double v : color) s += v * v;
  return std::sqrt(s);
}

bool FieldGradient::finite() const {
  for (double v : sdf)
    if (!std::isfinite(v)) return false;
  for (double v : color)
    if (!std::isfinite(v)) return false;
  return true;
}

RenderOutput render(const VoxelField& field, const RayBundle& rays,
                    const RenderConfig& cfg) {
  if (cfg.samples_per_ray < 2) throw ConfigError("samples_per_ray must be >= 2");

  RenderOutput out;
  out.color = Image(rays.width, rays.height, 3);
  out.depth = Image(rays.width, rays.height, 1);
  out.weight_sum = Image(rays.width, rays.height, 1);
  out.cache.field_revision = field.revision();
  out.cache.samples_per_ray = cfg.samples_per_ray;
  out.cache.spans.resize(rays.rays.size());

  const WeightKernel kernel(
      cfg.beta_override > 0.0 ? cfg.beta_override : field.beta());
  const int S = cfg.samples_per_ray;

  for (std::size_t r = 0; r < rays.rays.size(); ++r) {
    const Ray& ray = rays.rays[r];
    RaySpan& span = out.cache.spans[r];
    span = compute_span(ray, cfg);

    const int y = static_cast<int>(r) / rays.width;
    const int x = static_cast<int>(r) % rays.width;

    if (!span.hit) {
      out.color.at(y, x, 0) = cfg.background.x();
      out.color.at(y, x, 1) = cfg.background.y();
      out.color.at(y, x, 2) = cfg.background.z();
      continue;
    }

    const double dt = (span.far - span.near) / S;
    double wsum = 0.0;
    Vec3 c_acc(0, 0, 0);
    double d_acc = 0.0;

    for (int i = 0; i < S; ++i) {
      const double t = span.near + (i + 0.5) * dt;
      const Vec3 p = ray.origin + t * ray.dir;
      const CellQuery cq = field.cell_query(p);
      const double f = field.sdf_value(cq);
      const double fp = field.sdf_grad(cq).dot(ray.dir);
      const double u = -fp * kernel.density(f);
      if (u <= 0.0) continue;
      const double raw = u * dt;
      const double room = 1.0 - wsum;
      const double w = raw < room ? raw : room;
      if (w <= 0.0) continue;
      wsum += w;
      c_acc += w * clamp01(field.color_raw(cq));
      d_acc += w * t;
    }

    const Vec3 c = c_acc + (1.0 - wsum) * cfg.background;
    out.color.at(y, x, 0) = c.x();
    out.color.at(y, x, 1) = c.y();
    out.color.at(y, x, 2) = c.z();
    out.weight_sum.at(y, x) = wsum;
    out.depth.at(y, x) = d_acc / std::max(wsum, 1e-6);
  }
  return out;
}

Image render_silhouette(const VoxelField& field, const RayBundle& rays,
                        const RenderConfig& cfg) {
  return render(field, rays, cfg).weight_sum;
}

void render_adjoint(const VoxelField& field, const RayBundle& rays,
                    const RenderConfig& cfg, const RenderCache& cache,
                    const Image* upstream_color, const Image* upstream_opacity,
                    FieldGradient& grad) {
  if (cache.field_revision != field.revision())
    throw ContractError("render cache is stale: field was mutated");
  if (cache.spans.size() != rays.rays.size() ||
      cache.samples_per_ray != cfg.samples_per_ray)
    throw ContractError("render cache does not match rays/config");
  if (upstream_color &&
      (upstream_color->width != rays.width ||
       upstream_color->height != rays.height || upstream_color->channels != 3))
    throw ContractError("upstream color cotangent has wrong shape");
  if (upstream_opacity &&
      (upstream_opacity->width != rays.width ||
       upstream_opacity->height != rays.height ||
       upstream_opacity->channels != 1))
    throw ContractError("upstream opacity cotangent has wrong shape");

  if (grad.sdf.empty()) grad.resize_like(field);

  const WeightKernel kernel(
      cfg.beta_override > 0.0 ? cfg.beta_override : field.beta());
  const int S = cfg.samples_per_ray;

  // Per-sample forward state, recomputed per ray.
  struct SampleRec {
    CellQuery cq;
    double t, f, fp, psi1, w;
    bool clamped, active;
    Vec3 color_clamped;
    Vec3 color_unclamped;
  };
  std::vector<SampleRec> recs(S);

  for (std::size_t r = 0; r < rays.rays.size(); ++r) {
    const RaySpan& span = cache.spans[r];
    if (!span.hit) continue;

    const int y = static_cast<int>(r) / rays.width;
    const int x = static_cast<int>(r) % rays.width;

    Vec3 u(0, 0, 0);
    if (upstream_color)
      u = Vec3(upstream_color->at(y, x, 0), upstream_color->at(y, x, 1),
               upstream_color->at(y, x, 2));
    double v = upstream_opacity ? upstream_opacity->at(y, x) : 0.0;
    if (u.isZero(0.0) && v == 0.0) continue;

    const Ray& ray = rays.rays[r];
    const double dt = (span.far - span.near) / S;

    // Forward replay.
    double wsum = 0.0;
    for (int i = 0; i < S; ++i) {
      SampleRec& rec = recs[i];
      rec.t = span.near + (i + 0.5) * dt;
      const Vec3 p = ray.origin + rec.t * ray.dir;
      rec.cq = field.cell_query(p);
      rec.f = field.sdf_value(rec.cq);
      rec.fp = field.sdf_grad(rec.cq).dot(ray.dir);
      rec.psi1 = kernel.density(rec.f);
      const double uraw = -rec.fp * rec.psi1;
      rec.active = uraw > 0.0;
      rec.w = 0.0;
      rec.clamped = false;
      if (rec.active) {
        const double raw = uraw * dt;
        const double room = 1.0 - wsum;
        rec.clamped = raw >= room;
        rec.w = rec.clamped ? room : raw;
        if (rec.w < 0.0) rec.w = 0.0;
        if (rec.w > 0.0) {
          rec.color_unclamped = field.color_raw(rec.cq);
          rec.color_clamped = clamp01(rec.color_unclamped);
        }
        wsum += rec.w;
      }
    }

    // Reverse sweep. gW carries dL/d(cumulative weight before sample i).
    // Final cumulative weight feeds the background term and the opacity
    // cotangent: dL/dW_S = -u . bg + v.
    double gW = -u.dot(cfg.background) + v;
    for (int i = S - 1; i >= 0; --i) {
      const SampleRec& rec = recs[i];
      if (!rec.active) continue;

      const double gw =
          (rec.w > 0.0 ? u.dot(rec.color_clamped) : 0.0) + gW;
      const double ga = rec.clamped ? 0.0 : gw;
      if (rec.clamped) gW -= gw;

      if (rec.w > 0.0) {
        // Color path: dL/dc_i = w_i * u, zero where the clamp is engaged.
        for (int ch = 0; ch < 3; ++ch) {
          const double raw_c = rec.color_unclamped[ch];
          if (raw_c < 0.0 || raw_c > 1.0) continue;
          const double gc = rec.w * u[ch];
          if (gc == 0.0) continue;
          for (int k = 0; k < 8; ++k)
            grad.color[3 * rec.cq.idx[k] + ch] +=
                gc * rec.cq.corner_weight(k);
        }
      }

      if (ga == 0.0) continue;

      // a_i = -fp * psi1(f) * dt, with f and fp both linear in the cell's
      // node values.
      const double gf = ga * dt * (-rec.fp) * kernel.density_grad(rec.f);
      const double gfp = ga * dt * (-rec.psi1);
      const CellQuery& cq = rec.cq;
      const Vec3& d = ray.dir;
      for (int k = 0; k < 8; ++k) {
        const double wxk = cq.wx[k & 1];
        const double wyk = cq.wy[(k >> 1) & 1];
        const double wzk = cq.wz[(k >> 2) & 1];
        const double sx = (k & 1) ? 1.0 : -1.0;
        const double sy = (k & 2) ? 1.0 : -1.0;
        const double sz = (k & 4) ? 1.0 : -1.0;
        const double trilinear = wxk * wyk * wzk;
        const double grad_dot_v =
            cq.inv_h * (sx * wyk * wzk * d.x() + sy * wxk * wzk * d.y() +
                        sz * wxk * wyk * d.z());
        grad.sdf[cq.idx[k]] += gf * trilinear + gfp * grad_dot_v;
      }
    }
  }
}

RayProfile render_ray_profile(const VoxelField& field, const Ray& ray,
                              const RenderConfig& cfg) {
  RayProfile prof;
  const RaySpan span = compute_span(ray, cfg);
  prof.hit = span.hit;
  if (!span.hit) return prof;

  const WeightKernel kernel(
      cfg.beta_override > 0.0 ? cfg.beta_override : field.beta());
  const int S = cfg.samples_per_ray;
  const double dt = (span.far - span.near) / S;
  prof.t.resize(S);
  prof.sdf.resize(S);
  prof.weight.resize(S);
  double wsum = 0.0;
  for (int i = 0; i < S; ++i) {
    const double t = span.near + (i + 0.5) * dt;
    const Vec3 p = ray.origin + t * ray.dir;
    const CellQuery cq = field.cell_query(p);
    const double f = field.sdf_value(cq);
    const double fp = field.sdf_grad(cq).dot(ray.dir);
    const double u = -fp * kernel.density(f);
    double w = 0.0;
    if (u > 0.0) {
      w = std::min(u * dt, 1.0 - wsum);
      if (w < 0.0) w = 0.0;
    }
    wsum += w;
    prof.t[i] = t;
    prof.sdf[i] = f;
    prof.weight[i] = w;
  }
  prof.weight_sum = wsum;
  return prof;
}

}  // namespace ov
