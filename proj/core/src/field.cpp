#include "ov/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <utility>

#include "ov/errors.hpp"
#include "ov/rng.hpp"
#include "binio.hpp"

namespace ov {

namespace {
constexpr double kCubeMin = -0.5;
constexpr double kCubeMax = 0.5;

inline Vec3 clamp_to_cube(const Vec3& p) {
  return Vec3(std::clamp(p.x(), kCubeMin, kCubeMax),
              std::clamp(p.y(), kCubeMin, kCubeMax),
              std::clamp(p.z(), kCubeMin, kCubeMax));
}
}  // namespace

VoxelField::VoxelField(int resolution, double beta)
    : n_(resolution), h_(1.0 / (resolution - 1)), beta_(beta) {
  if (resolution < 2) throw ConfigError("field resolution must be >= 2");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  const std::size_t n3 = static_cast<std::size_t>(n_) * n_ * n_;
  sdf_.assign(n3, 0.0);
  color_.assign(3 * n3, 0.5);
}

VoxelField VoxelField::default_init(int resolution, double beta,
                                    std::uint64_t seed) {
  VoxelField f(resolution, beta);
  Rng rng(seed);
  const double noise_amp = 0.01 * f.h_;
  for (int iz = 0; iz < resolution; ++iz)
    for (int iy = 0; iy < resolution; ++iy)
      for (int ix = 0; ix < resolution; ++ix) {
        const Vec3 p = f.node_position(ix, iy, iz);
        f.sdf_[f.node_index(ix, iy, iz)] =
            p.norm() - 0.35 - noise_amp * rng.uniform();
      }
  f.revision_++;
  return f;
}

void VoxelField::set_beta(double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  beta_ = beta;
  revision_++;
}

void VoxelField::set_sdf_node(std::size_t i, double v) {
  sdf_[i] = v;
  revision_++;
}

void VoxelField::set_color_node(std::size_t i, const Vec3& c) {
  color_[3 * i] = c.x();
  color_[3 * i + 1] = c.y();
  color_[3 * i + 2] = c.z();
  revision_++;
}

void VoxelField::apply_update(const std::vector<double>& sdf_delta,
                              const std::vector<double>& color_delta) {
  if (sdf_delta.size() != sdf_.size() || color_delta.size() != color_.size())
    throw ContractError("update size mismatch");
  for (std::size_t i = 0; i < sdf_.size(); ++i) sdf_[i] += sdf_delta[i];
  for (std::size_t i = 0; i < color_.size(); ++i) color_[i] += color_delta[i];
  revision_++;
}

void VoxelField::assign(std::vector<double> sdf, std::vector<double> color) {
  if (sdf.size() != sdf_.size() || color.size() != color_.size())
    throw ContractError("assign size mismatch");
  sdf_ = std::move(sdf);
  color_ = std::move(color);
  revision_++;
}

CellQuery VoxelField::cell_query(const Vec3& p) const {
  const Vec3 q = clamp_to_cube(p);
  CellQuery out;
  out.inv_h = 1.0 / h_;
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (q[a] - kCubeMin) / h_;
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 0, n_ - 2);
    base[a] = i;
    frac[a] = u - i;
  }
  out.wx[1] = frac[0];
  out.wx[0] = 1.0 - frac[0];
  out.wy[1] = frac[1];
  out.wy[0] = 1.0 - frac[1];
  out.wz[1] = frac[2];
  out.wz[0] = 1.0 - frac[2];
  for (int k = 0; k < 8; ++k) {
    out.idx[k] = node_index(base[0] + (k & 1), base[1] + ((k >> 1) & 1),
                            base[2] + ((k >> 2) & 1));
  }
  return out;
}

double VoxelField::sdf_value(const CellQuery& q) const {
  double s = 0.0;
  for (int k = 0; k < 8; ++k) s += q.corner_weight(k) * sdf_[q.idx[k]];
  return s;
}

Vec3 VoxelField::sdf_grad(const CellQuery& q) const {
  double gx = 0.0, gy = 0.0, gz = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double v = sdf_[q.idx[k]];
    const double sx = (k & 1) ? 1.0 : -1.0;
    const double sy = (k & 2) ? 1.0 : -1.0;
    const double sz = (k & 4) ? 1.0 : -1.0;
    gx += sx * q.wy[(k >> 1) & 1] * q.wz[(k >> 2) & 1] * v;
    gy += sy * q.wx[k & 1] * q.wz[(k >> 2) & 1] * v;
    gz += sz * q.wx[k & 1] * q.wy[(k >> 1) & 1] * v;
  }
  return Vec3(gx, gy, gz) * q.inv_h;
}

Vec3 VoxelField::color_raw(const CellQuery& q) const {
  Vec3 c(0, 0, 0);
  for (int k = 0; k < 8; ++k) {
    const double w = q.corner_weight(k);
    const std::size_t i = q.idx[k];
    c.x() += w * color_[3 * i];
    c.y() += w * color_[3 * i + 1];
    c.z() += w * color_[3 * i + 2];
  }
  return c;
}

FieldSample VoxelField::query(const Vec3& p) const {
  const Vec3 q = clamp_to_cube(p);
  const CellQuery cq = cell_query(q);
  FieldSample out;
  out.sdf = sdf_value(cq) + (p - q).norm();
  const Vec3 c = color_raw(cq);
  out.color = Vec3(std::clamp(c.x(), 0.0, 1.0), std::clamp(c.y(), 0.0, 1.0),
                   std::clamp(c.z(), 0.0, 1.0));
  return out;
}

double VoxelField::query_sdf(const Vec3& p) const {
  const Vec3 q = clamp_to_cube(p);
  return sdf_value(cell_query(q)) + (p - q).norm();
}

NodeWeights VoxelField::param_weights(const Vec3& p) const {
  const CellQuery cq = cell_query(p);
  NodeWeights nw;
  nw.idx = cq.idx;
  for (int k = 0; k < 8; ++k) nw.w[k] = cq.corner_weight(k);
  return nw;
}

Vec3 VoxelField::spatial_gradient(const Vec3& p) const {
  const Vec3 q = clamp_to_cube(p);
  const CellQuery cq = cell_query(q);
  Vec3 g = sdf_grad(cq);
  if ((p - q).squaredNorm() > 0.0) {
    const Vec3 d = p - q;
    const double len = d.norm();
    // Extension term plus the boundary interpolant along unclamped axes.
    Vec3 ext = d / len;
    for (int a = 0; a < 3; ++a)
      if (p[a] < kCubeMin || p[a] > kCubeMax) g[a] = 0.0;
    g += ext;
  }
  return g;
}

void VoxelField::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os.write("OVF1", 4);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(n_));
  binio::write<float>(os, static_cast<float>(beta_));
  for (double v : sdf_) binio::write<float>(os, static_cast<float>(v));
  for (double v : color_) binio::write<float>(os, static_cast<float>(v));
  if (!os) throw IoError("checkpoint write failed: " + path);
}

VoxelField VoxelField::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "OVF1")
    throw IoError("bad checkpoint magic in " + path);
  const auto n = binio::read<std::uint32_t>(is);
  if (n < 2 || n > 4096) throw IoError("implausible checkpoint resolution");
  const float beta = binio::read<float>(is);
  VoxelField f(static_cast<int>(n), static_cast<double>(beta));
  for (double& v : f.sdf_) v = binio::read<float>(is);
  for (double& v : f.color_) v = binio::read<float>(is);
  f.revision_++;
  return f;
}

// ---------------------------------------------------------------------------
// AnalyticSdf

AnalyticSdf AnalyticSdf::sphere(const Vec3& center, double radius) {
  AnalyticSdf s;
  s.kind_ = Kind::Sphere;
  s.center_ = center;
  s.radius_ = radius;
  return s;
}

AnalyticSdf AnalyticSdf::box(const Vec3& center, const Vec3& half_extents) {
  AnalyticSdf s;
  s.kind_ = Kind::Box;
  s.center_ = center;
  s.half_ = half_extents;
  return s;
}

AnalyticSdf AnalyticSdf::union_of(std::vector<AnalyticSdf> parts) {
  if (parts.empty()) throw ConfigError("union of zero shapes");
  AnalyticSdf s;
  s.kind_ = Kind::Union;
  s.children_ = std::move(parts);
  return s;
}

AnalyticSdf AnalyticSdf::translated(const Vec3& offset) const {
  AnalyticSdf s = *this;
  if (s.kind_ == Kind::Union) {
    for (auto& c : s.children_) c = c.translated(offset);
  } else {
    s.center_ += offset;
  }
  if (color_) {
    ColorFn inner = color_;
    Vec3 off = offset;
    s.color_ = [inner, off](const Vec3& p) { return inner(p - off); };
  }
  return s;
}

AnalyticSdf AnalyticSdf::with_color(const Vec3& rgb) const {
  AnalyticSdf s = *this;
  Vec3 c = rgb;
  s.color_ = [c](const Vec3&) { return c; };
  return s;
}

AnalyticSdf AnalyticSdf::with_color(ColorFn fn) const {
  AnalyticSdf s = *this;
  s.color_ = std::move(fn);
  return s;
}

double AnalyticSdf::sdf(const Vec3& p) const {
  switch (kind_) {
    case Kind::Sphere:
      return (p - center_).norm() - radius_;
    case Kind::Box: {
      const Vec3 q = (p - center_).cwiseAbs() - half_;
      const Vec3 outside = q.cwiseMax(0.0);
      const double inside = std::min(q.maxCoeff(), 0.0);
      return outside.norm() + inside;
    }
    case Kind::Union: {
      double best = children_[0].sdf(p);
      for (std::size_t i = 1; i < children_.size(); ++i)
        best = std::min(best, children_[i].sdf(p));
      return best;
    }
  }
  return 0.0;
}

FieldSample AnalyticSdf::query(const Vec3& p) const {
  FieldSample out;
  if (kind_ == Kind::Union) {
    std::size_t best = 0;
    double best_sdf = children_[0].sdf(p);
    for (std::size_t i = 1; i < children_.size(); ++i) {
      const double s = children_[i].sdf(p);
      if (s < best_sdf) {
        best_sdf = s;
        best = i;
      }
    }
    out = children_[best].query(p);
    out.sdf = best_sdf;
    if (color_) out.color = color_(p);
    return out;
  }
  out.sdf = sdf(p);
  out.color = color_ ? color_(p) : Vec3(0.5, 0.5, 0.5);
  return out;
}

VoxelField bake_field(const AnalyticSdf& target, int resolution, double beta) {
  VoxelField f(resolution, beta);
  std::vector<double> sdf(f.node_count());
  std::vector<double> color(3 * f.node_count());
  for (int iz = 0; iz < resolution; ++iz)
    for (int iy = 0; iy < resolution; ++iy)
      for (int ix = 0; ix < resolution; ++ix) {
        const std::size_t i = f.node_index(ix, iy, iz);
        const FieldSample s = target.query(f.node_position(ix, iy, iz));
        sdf[i] = s.sdf;
        color[3 * i] = s.color.x();
        color[3 * i + 1] = s.color.y();
        color[3 * i + 2] = s.color.z();
      }
  f.assign(std::move(sdf), std::move(color));
  return f;
}

}  // namespace ov
