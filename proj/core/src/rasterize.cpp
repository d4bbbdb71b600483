#include "ov/rasterize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ov/errors.hpp"

namespace ov {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
constexpr double kAlphaCap = 1.0 - 1e-12;
constexpr double kMinProjectedArea = 1e-12;

inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Camera-dependent projection constants shared by forward and adjoint.
struct Projector {
  Vec3 origin, fwd, right, up;
  double cx, cy;  // pixel scale factors
  int width, height;

  explicit Projector(const CameraPose& pose, int w, int h)
      : width(w), height(h) {
    pose.frame(fwd, right, up);
    origin = pose.position();
    const double tan_half = std::tan(0.5 * pose.fov_y_deg * kDegToRad);
    const double aspect = static_cast<double>(w) / h;
    cx = w / (2.0 * tan_half * aspect);
    cy = h / (2.0 * tan_half);
  }

  // Returns false when the point is at or behind the camera plane.
  bool project(const Vec3& p, Vec2& pix, double& depth) const {
    const Vec3 rel = p - origin;
    const double z = rel.dot(fwd);
    if (z < 1e-6) return false;
    const double xv = rel.dot(right);
    const double yv = rel.dot(up);
    pix.x() = cx * (xv / z) + 0.5 * width - 0.5;
    pix.y() = -cy * (yv / z) + 0.5 * height - 0.5;
    depth = z;
    return true;
  }

  // d(pixel)/d(world point) rows for px and py.
  void projection_jacobian(const Vec3& p, Vec3& dpx, Vec3& dpy) const {
    const Vec3 rel = p - origin;
    const double z = rel.dot(fwd);
    const double xv = rel.dot(right);
    const double yv = rel.dot(up);
    dpx = cx / z * right - cx * xv / (z * z) * fwd;
    dpy = -cy / z * up + cy * yv / (z * z) * fwd;
  }
};

// Signed pixel distance from q to the triangle (a, b, c): positive inside,
// negative outside. Also reports the nearest feature for the adjoint and the
// barycentrics of the closest point (clamped for outside queries).
struct DistanceResult {
  double d = 0.0;
  // Nearest feature: edge (i0, i1) with perpendicular foot, or vertex i0
  // (i1 == -1).
  int i0 = 0, i1 = -1;
  double seg_t = 0.0;  // foot parameter along the edge
  std::array<double, 3> clamped_bary{0, 0, 0};
};

DistanceResult signed_distance(const Vec2& q, const std::array<Vec2, 3>& v) {
  DistanceResult out;
  const double area2 = cross2(v[1] - v[0], v[2] - v[0]);
  const double orient = area2 >= 0.0 ? 1.0 : -1.0;

  bool inside = true;
  double best_perp = std::numeric_limits<double>::infinity();
  int best_perp_edge = 0;
  double best_seg = std::numeric_limits<double>::infinity();
  int best_seg_edge = 0;
  double best_seg_t = 0.0;

  for (int e = 0; e < 3; ++e) {
    const Vec2& p0 = v[e];
    const Vec2& p1 = v[(e + 1) % 3];
    const Vec2 ev = p1 - p0;
    const Vec2 m = q - p0;
    const double cr = cross2(ev, m);
    if (orient * cr < 0.0) inside = false;

    const double len2 = ev.squaredNorm();
    const double len = std::sqrt(len2);
    const double perp = len > 0.0 ? std::abs(cr) / len : m.norm();
    if (perp < best_perp) {
      best_perp = perp;
      best_perp_edge = e;
    }
    const double t = len2 > 0.0 ? std::clamp(m.dot(ev) / len2, 0.0, 1.0) : 0.0;
    const double seg = (q - (p0 + t * ev)).norm();
    if (seg < best_seg) {
      best_seg = seg;
      best_seg_edge = e;
      best_seg_t = t;
    }
  }

  if (inside) {
    out.d = best_perp;
    out.i0 = best_perp_edge;
    out.i1 = (best_perp_edge + 1) % 3;
    // Interior barycentrics.
    const double inv = 1.0 / area2;
    out.clamped_bary[0] = cross2(v[2] - v[1], q - v[1]) * inv;
    out.clamped_bary[1] = cross2(v[0] - v[2], q - v[2]) * inv;
    out.clamped_bary[2] = cross2(v[1] - v[0], q - v[0]) * inv;
    // Foot parameter for the adjoint.
    const Vec2 ev = v[out.i1] - v[out.i0];
    out.seg_t = std::clamp((q - v[out.i0]).dot(ev) / ev.squaredNorm(), 0.0, 1.0);
  } else {
    out.d = -best_seg;
    const int e = best_seg_edge;
    if (best_seg_t <= 0.0) {
      out.i0 = e;
      out.i1 = -1;
      out.clamped_bary[e] = 1.0;
    } else if (best_seg_t >= 1.0) {
      out.i0 = (e + 1) % 3;
      out.i1 = -1;
      out.clamped_bary[(e + 1) % 3] = 1.0;
    } else {
      out.i0 = e;
      out.i1 = (e + 1) % 3;
      out.seg_t = best_seg_t;
      out.clamped_bary[e] = 1.0 - best_seg_t;
      out.clamped_bary[(e + 1) % 3] = best_seg_t;
    }
  }
  return out;
}

// Gradient of the signed distance with respect to the two feature vertices.
// Returns gradients for v[i0] and v[i1] of the DistanceResult.
void distance_gradient(const Vec2& q, const std::array<Vec2, 3>& v,
                       const DistanceResult& res, Vec2& g0, Vec2& g1) {
  g0.setZero();
  g1.setZero();
  if (res.i1 < 0) {
    // Vertex feature: d = -|q - p|.
    const Vec2 diff = q - v[res.i0];
    const double n = diff.norm();
    if (n > 1e-12) g0 = diff / n;  // d(-|q-p|)/dp = (q-p)/|q-p|
    return;
  }
  const Vec2& p0 = v[res.i0];
  const Vec2& p1 = v[res.i1];
  const Vec2 ev = p1 - p0;
  const Vec2 m = q - p0;
  const double len = ev.norm();
  if (len < 1e-12) return;
  const double cr = cross2(ev, m);

  double sign;
  if (res.d >= 0.0) {
    // Inside: d = |cr| / len.
    sign = cr >= 0.0 ? 1.0 : -1.0;
  } else {
    // Outside with an edge-interior foot: d = -|cr| / len.
    sign = cr >= 0.0 ? -1.0 : 1.0;
  }
  // d = sign * cr / len; grad via cr and len.
  const Vec2 dcr_dp0(p1.y() - q.y(), q.x() - p1.x());
  const Vec2 dcr_dp1(q.y() - p0.y(), p0.x() - q.x());
  const Vec2 dlen_dp0 = -ev / len;
  const Vec2 dlen_dp1 = ev / len;
  g0 = sign * (dcr_dp0 * len - cr * dlen_dp0) / (len * len);
  g1 = sign * (dcr_dp1 * len - cr * dlen_dp1) / (len * len);
}

struct PixelPick {
  double z = std::numeric_limits<double>::infinity();
  int tri = -1;
  std::array<double, 3> bary{0, 0, 0};
  bool interior = false;

  double best_alpha = 0.0;
  int alpha_tri = -1;
  std::array<double, 3> alpha_bary{0, 0, 0};
};

struct Screen {
  std::vector<std::array<Vec2, 3>> tri2d;
  std::vector<std::array<double, 3>> tridepth;
  std::vector<bool> valid;
};

Screen project_mesh(const TriMesh& mesh, const Projector& proj) {
  Screen s;
  const std::size_t n = mesh.faces.size();
  s.tri2d.resize(n);
  s.tridepth.resize(n);
  s.valid.assign(n, false);
  std::vector<Vec2> pix(mesh.positions.size());
  std::vector<double> depth(mesh.positions.size());
  std::vector<bool> ok(mesh.positions.size());
  for (std::size_t i = 0; i < mesh.positions.size(); ++i)
    ok[i] = proj.project(mesh.positions[i], pix[i], depth[i]);
  for (std::size_t f = 0; f < n; ++f) {
    const auto& face = mesh.faces[f];
    if (!ok[face[0]] || !ok[face[1]] || !ok[face[2]]) continue;
    for (int k = 0; k < 3; ++k) {
      s.tri2d[f][k] = pix[face[k]];
      s.tridepth[f][k] = depth[face[k]];
    }
    if (std::abs(cross2(s.tri2d[f][1] - s.tri2d[f][0],
                        s.tri2d[f][2] - s.tri2d[f][0])) < kMinProjectedArea)
      continue;  // edge-on, no stable coverage
    s.valid[f] = true;
  }
  return s;
}

// Shared rasterization sweep: accumulates the coverage product and the
// per-pixel picks. Used identically by forward and adjoint.
void sweep(const Screen& s, const RasterConfig& cfg,
           std::vector<double>& prod, std::vector<PixelPick>& picks) {
  const double band = cfg.cutoff / cfg.sharpness + 0.5;
  prod.assign(static_cast<std::size_t>(cfg.width) * cfg.height, 1.0);
  picks.assign(prod.size(), PixelPick{});

  for (std::size_t f = 0; f < s.tri2d.size(); ++f) {
    if (!s.valid[f]) continue;
    const auto& tv = s.tri2d[f];
    const int x0 = std::max(
        0, static_cast<int>(std::floor(
               std::min({tv[0].x(), tv[1].x(), tv[2].x()}) - band)));
    const int x1 = std::min(
        cfg.width - 1, static_cast<int>(std::ceil(
                           std::max({tv[0].x(), tv[1].x(), tv[2].x()}) + band)));
    const int y0 = std::max(
        0, static_cast<int>(std::floor(
               std::min({tv[0].y(), tv[1].y(), tv[2].y()}) - band)));
    const int y1 = std::min(
        cfg.height - 1, static_cast<int>(std::ceil(
                            std::max({tv[0].y(), tv[1].y(), tv[2].y()}) + band)));

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 q(static_cast<double>(x), static_cast<double>(y));
        const DistanceResult dr = signed_distance(q, tv);
        const double z = cfg.sharpness * dr.d;
        if (z < -cfg.cutoff) continue;
        const double alpha = std::min(sigmoid(z), kAlphaCap);
        const std::size_t pi = static_cast<std::size_t>(y) * cfg.width + x;
        prod[pi] *= 1.0 - alpha;

        PixelPick& pick = picks[pi];
        if (dr.d >= 0.0) {
          const double depth = dr.clamped_bary[0] * s.tridepth[f][0] +
                               dr.clamped_bary[1] * s.tridepth[f][1] +
                               dr.clamped_bary[2] * s.tridepth[f][2];
          if (depth < pick.z) {
            pick.z = depth;
            pick.tri = static_cast<int>(f);
            pick.bary = dr.clamped_bary;
            pick.interior = true;
          }
        }
        if (alpha > pick.best_alpha) {
          pick.best_alpha = alpha;
          pick.alpha_tri = static_cast<int>(f);
          pick.alpha_bary = dr.clamped_bary;
        }
      }
    }
  }
}

}  // namespace

RasterOutput rasterize_soft(const TriMesh& mesh, const CameraPose& pose,
                            const RasterConfig& cfg) {
  RasterOutput out;
  out.silhouette = Image(cfg.width, cfg.height, 1, 0.0);
  out.color = Image(cfg.width, cfg.height, 3);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x)
      for (int c = 0; c < 3; ++c) out.color.at(y, x, c) = cfg.background[c];
  if (mesh.faces.empty()) return out;

  const Projector proj(pose, cfg.width, cfg.height);
  const Screen s = project_mesh(mesh, proj);
  std::vector<double> prod;
  std::vector<PixelPick> picks;
  sweep(s, cfg, prod, picks);

  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const std::size_t pi = static_cast<std::size_t>(y) * cfg.width + x;
      const double sil = 1.0 - prod[pi];
      out.silhouette.at(y, x) = sil;
      const PixelPick& pick = picks[pi];
      const int tri = pick.tri >= 0 ? pick.tri : pick.alpha_tri;
      if (tri < 0) continue;
      const auto& bary = pick.tri >= 0 ? pick.bary : pick.alpha_bary;
      const auto& face = mesh.faces[tri];
      Vec3 c(0, 0, 0);
      for (int k = 0; k < 3; ++k) c += bary[k] * mesh.colors[face[k]];
      for (int ch = 0; ch < 3; ++ch)
        out.color.at(y, x, ch) = sil * c[ch] + (1.0 - sil) * cfg.background[ch];
    }
  }
  return out;
}

MeshGradient rasterize_soft_adjoint(const TriMesh& mesh, const CameraPose& pose,
                                    const RasterConfig& cfg,
                                    const Image* up_sil, const Image* up_color) {
  MeshGradient grad;
  grad.resize(mesh.positions.size());
  if (mesh.faces.empty()) return grad;

  if (up_sil && (up_sil->width != cfg.width || up_sil->height != cfg.height ||
                 up_sil->channels != 1))
    throw ContractError("silhouette cotangent has wrong shape");
  if (up_color && (up_color->width != cfg.width ||
                   up_color->height != cfg.height || up_color->channels != 3))
    throw ContractError("color cotangent has wrong shape");

  const Projector proj(pose, cfg.width, cfg.height);
  const Screen s = project_mesh(mesh, proj);
  std::vector<double> prod;
  std::vector<PixelPick> picks;
  sweep(s, cfg, prod, picks);

  const std::size_t npix = prod.size();
  // dL/d(sil) per pixel, folding in the color compositing term.
  std::vector<double> gsil(npix, 0.0);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const std::size_t pi = static_cast<std::size_t>(y) * cfg.width + x;
      double g = up_sil ? up_sil->at(y, x) : 0.0;
      const PixelPick& pick = picks[pi];
      const int tri = pick.tri >= 0 ? pick.tri : pick.alpha_tri;
      if (up_color && tri >= 0) {
        const auto& bary = pick.tri >= 0 ? pick.bary : pick.alpha_bary;
        const auto& face = mesh.faces[tri];
        Vec3 c(0, 0, 0);
        for (int k = 0; k < 3; ++k) c += bary[k] * mesh.colors[face[k]];
        for (int ch = 0; ch < 3; ++ch)
          g += up_color->at(y, x, ch) * (c[ch] - cfg.background[ch]);
      }
      gsil[pi] = g;
    }
  }

  // Color and barycentric-position paths of the picked triangle.
  if (up_color) {
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const std::size_t pi = static_cast<std::size_t>(y) * cfg.width + x;
        const PixelPick& pick = picks[pi];
        const int tri = pick.tri >= 0 ? pick.tri : pick.alpha_tri;
        if (tri < 0) continue;
        const double sil = 1.0 - prod[pi];
        if (sil == 0.0) continue;
        const auto& face = mesh.faces[tri];
        const auto& bary = pick.tri >= 0 ? pick.bary : pick.alpha_bary;
        Vec3 gc;  // dL/d(picked color)
        for (int ch = 0; ch < 3; ++ch) gc[ch] = sil * up_color->at(y, x, ch);
        for (int k = 0; k < 3; ++k) grad.color[face[k]] += bary[k] * gc;

        // Interior picks also move color through the barycentrics.
        if (pick.interior && s.valid[tri]) {
          const auto& tv = s.tri2d[tri];
          const Vec2 q(static_cast<double>(x), static_cast<double>(y));
          const double w = cross2(tv[1] - tv[0], tv[2] - tv[0]);
          const Vec3 cols[3] = {mesh.colors[face[0]], mesh.colors[face[1]],
                                mesh.colors[face[2]]};
          // A_k = cross2(v_{k+1} - v_{k+2}, ...) resolved per vertex below.
          // dL/dA_k and dL/dw first:
          const double A[3] = {bary[0] * w, bary[1] * w, bary[2] * w};
          double gA[3];
          double gw = 0.0;
          for (int k = 0; k < 3; ++k) {
            const double gbk = gc.dot(cols[k]);
            gA[k] = gbk / w;
            gw -= gbk * A[k] / (w * w);
          }
          // A_0 = cross2(v2 - v1, q - v1), A_1 = cross2(v0 - v2, q - v2),
          // A_2 = cross2(v1 - v0, q - v0); w = cross2(v1 - v0, v2 - v0).
          Vec2 g2d[3] = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
          auto add_cross_grad = [&](int r, int sidx, const Vec2& qq, double coef,
                                    Vec2* out_r, Vec2* out_s) {
            // T = cross2(v_s - v_r, qq - v_r)
            const Vec2& vr = tv[r];
            const Vec2& vs = tv[sidx];
            if (out_r)
              *out_r += coef * Vec2(vs.y() - qq.y(), qq.x() - vs.x());
            if (out_s)
              *out_s += coef * Vec2(qq.y() - vr.y(), vr.x() - qq.x());
          };
          add_cross_grad(1, 2, q, gA[0], &g2d[1], &g2d[2]);
          add_cross_grad(2, 0, q, gA[1], &g2d[2], &g2d[0]);
          add_cross_grad(0, 1, q, gA[2], &g2d[0], &g2d[1]);
          // w as cross2(v1 - v0, v2 - v0) with all three vertices involved.
          g2d[0] += gw * Vec2(tv[1].y() - tv[2].y(), tv[2].x() - tv[1].x());
          g2d[1] += gw * Vec2(tv[2].y() - tv[0].y(), tv[0].x() - tv[2].x());
          g2d[2] += gw * Vec2(tv[0].y() - tv[1].y(), tv[1].x() - tv[0].x());
          for (int k = 0; k < 3; ++k) {
            Vec3 dpx, dpy;
            proj.projection_jacobian(mesh.positions[face[k]], dpx, dpy);
            grad.position[face[k]] += g2d[k].x() * dpx + g2d[k].y() * dpy;
          }
        }
      }
    }
  }

  // Coverage path: every triangle within its band at each pixel.
  const double band = cfg.cutoff / cfg.sharpness + 0.5;
  for (std::size_t f = 0; f < s.tri2d.size(); ++f) {
    if (!s.valid[f]) continue;
    const auto& tv = s.tri2d[f];
    const int x0 = std::max(
        0, static_cast<int>(std::floor(
               std::min({tv[0].x(), tv[1].x(), tv[2].x()}) - band)));
    const int x1 = std::min(
        cfg.width - 1, static_cast<int>(std::ceil(
                           std::max({tv[0].x(), tv[1].x(), tv[2].x()}) + band)));
    const int y0 = std::max(
        0, static_cast<int>(std::floor(
               std::min({tv[0].y(), tv[1].y(), tv[2].y()}) - band)));
    const int y1 = std::min(
        cfg.height - 1, static_cast<int>(std::ceil(
                            std::max({tv[0].y(), tv[1].y(), tv[2].y()}) + band)));
    const auto& face = mesh.faces[f];

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t pi = static_cast<std::size_t>(y) * cfg.width + x;
        if (gsil[pi] == 0.0) continue;
        const Vec2 q(static_cast<double>(x), static_cast<double>(y));
        const DistanceResult dr = signed_distance(q, tv);
        const double z = cfg.sharpness * dr.d;
        if (z < -cfg.cutoff) continue;
        const double alpha = std::min(sigmoid(z), kAlphaCap);
        // sil = 1 - prod; d(sil)/d(alpha_f) = prod / (1 - alpha_f).
        const double dsil_dalpha = prod[pi] / (1.0 - alpha);
        const double galpha = gsil[pi] * dsil_dalpha;
        const double gd = galpha * alpha * (1.0 - alpha) * cfg.sharpness;
        if (gd == 0.0) continue;

        Vec2 g0, g1;
        distance_gradient(q, tv, dr, g0, g1);
        const int verts[2] = {face[dr.i0], dr.i1 >= 0 ? face[dr.i1] : -1};
        const Vec2 gs[2] = {gd * g0, gd * g1};
        for (int e = 0; e < 2; ++e) {
          if (verts[e] < 0) continue;
          Vec3 dpx, dpy;
          proj.projection_jacobian(mesh.positions[verts[e]], dpx, dpy);
          grad.position[verts[e]] += gs[e].x() * dpx + gs[e].y() * dpy;
        }
      }
    }
  }
  return grad;
}

}  // namespace ov
