#include "ov/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ov/errors.hpp"
#include "ov/rng.hpp"

namespace ov {

double occupancy_iou(const SdfFn& a, const SdfFn& b, int grid_resolution) {
  if (grid_resolution < 2) throw ConfigError("iou grid too small");
  long inter = 0, uni = 0;
  const double h = 1.0 / grid_resolution;
  for (int k = 0; k < grid_resolution; ++k)
    for (int j = 0; j < grid_resolution; ++j)
      for (int i = 0; i < grid_resolution; ++i) {
        const Vec3 p(-0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h,
                     -0.5 + (k + 0.5) * h);
        const bool in_a = a(p) < 0.0;
        const bool in_b = b(p) < 0.0;
        inter += in_a && in_b;
        uni += in_a || in_b;
      }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<Vec3> sample_mesh_surface(const TriMesh& mesh, int count,
                                      std::uint64_t seed) {
  std::vector<Vec3> out;
  if (mesh.faces.empty() || count <= 0) return out;
  out.reserve(count);

  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    const Vec3& a = mesh.positions[face[0]];
    const Vec3& b = mesh.positions[face[1]];
    const Vec3& c = mesh.positions[face[2]];
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative[f] = total;
  }
  if (total <= 0.0) return out;

  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const double r = rng.uniform() * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
    const std::size_t f = std::min(
        static_cast<std::size_t>(it - cumulative.begin()), mesh.faces.size() - 1);
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const auto& face = mesh.faces[f];
    out.push_back(mesh.positions[face[0]] * (1.0 - u - v) +
                  mesh.positions[face[1]] * u + mesh.positions[face[2]] * v);
  }
  return out;
}

namespace {

double mean_nn_distance(const std::vector<Vec3>& from,
                        const std::vector<Vec3>& to) {
  double total = 0.0;
  for (const Vec3& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : to) best = std::min(best, (p - q).squaredNorm());
    total += std::sqrt(best);
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty())
    throw ConfigError("chamfer needs non-empty sample sets");
  return 0.5 * (mean_nn_distance(a, b) + mean_nn_distance(b, a));
}

double normalized_cross_correlation(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ConfigError("ncc: shapes differ");
  const std::size_t n = a.data.size();
  if (n == 0) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.data[i];
    mb += b.data[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.data[i] - ma;
    const double db = b.data[i] - mb;
    num += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return num / std::sqrt(va * vb);
}

SurfaceDefects measure_surface_defects(const TriMesh& mesh) {
  SurfaceDefects d;
  const MeshTopology topo = analyze_topology(mesh);
  d.boundary_edges = topo.boundary_edges;
  d.extra_components = std::max(0, topo.components - 1);
  for (long chi : component_euler_characteristics(mesh))
    d.euler_deficit += std::labs(2 - chi);
  return d;
}

}  // namespace ov
