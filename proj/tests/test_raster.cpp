#include <doctest.h>

#include <cmath>

#include "ov/camera.hpp"
#include "ov/errors.hpp"
#include "ov/field.hpp"
#include "ov/rasterize.hpp"
#include "ov/rng.hpp"
#include "ov/targets.hpp"
#include "ov/tetgrid.hpp"

using namespace ov;

namespace {

CameraPose front_camera(int size, double azimuth = 0.0, double elevation = 0.0) {
  CameraPose pose;
  pose.azimuth_deg = azimuth;
  pose.elevation_deg = elevation;
  pose.radius = 1.8;
  pose.width = size;
  pose.height = size;
  return pose;
}

TriMesh sphere_mesh(double radius, int resolution) {
  TetGrid grid = make_bcc_grid(resolution);
  for (auto& v : grid.verts) {
    v.sdf = v.rest.norm() - radius;
    v.color = Vec3(0.8, 0.3, 0.2);
  }
  return marching_tets(grid);
}

}  // namespace

TEST_CASE("empty mesh rasterizes to background") {
  TriMesh empty;
  RasterConfig cfg;
  cfg.width = cfg.height = 16;
  cfg.background = Vec3(0.2, 0.4, 0.6);
  const RasterOutput out = rasterize_soft(empty, front_camera(16), cfg);
  for (double v : out.silhouette.data) CHECK(v == 0.0);
  for (int y = 0; y < 16; ++y) {
    CHECK(out.color.at(y, 3, 0) == 0.2);
    CHECK(out.color.at(y, 3, 1) == 0.4);
    CHECK(out.color.at(y, 3, 2) == 0.6);
  }
}

TEST_CASE("interior pixels saturate at sharpness 50 per pixel") {
  const TriMesh mesh = sphere_mesh(0.25, 12);
  RasterConfig cfg;
  cfg.width = cfg.height = 64;
  cfg.sharpness = 50.0;
  const RasterOutput out = rasterize_soft(mesh, front_camera(64), cfg);
  // Pixels exactly on shared triangle edges dip (each side contributes a
  // half-covered sigmoid), so assert saturation over the central block and a
  // floor on the seam dips.
  int saturated = 0;
  double min_central = 1.0;
  for (int y = 28; y <= 36; ++y)
    for (int x = 28; x <= 36; ++x) {
      const double v = out.silhouette.at(y, x);
      saturated += v > 0.99;
      min_central = std::min(min_central, v);
    }
  CHECK(saturated >= 40);  // of 81
  CHECK(min_central > 0.75);
  // Object color shows at the center, background far off-center.
  CHECK(out.color.at(32, 32, 0) == doctest::Approx(0.8).epsilon(0.05));
  CHECK(out.color.at(2, 2, 0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sphere silhouette area matches the analytic projection within 3%") {
  const TriMesh mesh = sphere_mesh(0.25, 24);
  RasterConfig cfg;
  cfg.width = cfg.height = 128;
  const CameraPose pose = front_camera(128);
  const RasterOutput out = rasterize_soft(mesh, pose, cfg);

  double area = 0.0;
  for (double v : out.silhouette.data) area += v;

  // Pinhole projection of a sphere seen from distance d: the silhouette cone
  // has half-angle asin(r/d); on the image plane that is a disc of radius
  // tan(asin(r/d)) focal lengths.
  const double half_angle = std::asin(0.25 / 1.8);
  const double focal_px =
      (128.0 / 2.0) / std::tan(0.5 * pose.fov_y_deg * M_PI / 180.0);
  const double disc_radius_px = std::tan(half_angle) * focal_px;
  const double expected = M_PI * disc_radius_px * disc_radius_px;
  CHECK(std::abs(area - expected) / expected < 0.03);
}

TEST_CASE("nearest triangle wins the color") {
  // Two parallel quads facing the +x camera; the near one is red, far blue.
  TriMesh mesh;
  auto add_quad = [&](double x, const Vec3& color) {
    const int base = static_cast<int>(mesh.positions.size());
    mesh.positions.push_back(Vec3(x, -0.3, -0.3));
    mesh.positions.push_back(Vec3(x, 0.3, -0.3));
    mesh.positions.push_back(Vec3(x, 0.3, 0.3));
    mesh.positions.push_back(Vec3(x, -0.3, 0.3));
    for (int k = 0; k < 4; ++k) mesh.colors.push_back(color);
    mesh.faces.push_back({base, base + 1, base + 2});
    mesh.faces.push_back({base, base + 2, base + 3});
  };
  add_quad(0.2, Vec3(1, 0, 0));   // near (camera at +1.8 on x)
  add_quad(-0.2, Vec3(0, 0, 1));  // far
  RasterConfig cfg;
  cfg.width = cfg.height = 32;
  const RasterOutput out = rasterize_soft(mesh, front_camera(32), cfg);
  CHECK(out.color.at(16, 16, 0) > 0.98);
  CHECK(out.color.at(16, 16, 2) < 0.02);
  CHECK(out.silhouette.at(16, 16) > 0.99);
}

TEST_CASE("rasterizer adjoint matches finite differences") {
  const TriMesh mesh = sphere_mesh(0.22, 8);
  REQUIRE(mesh.face_count() > 50);
  RasterConfig cfg;
  cfg.width = cfg.height = 48;
  cfg.sharpness = 20.0;  // gentler edge keeps difference quotients clean
  const CameraPose pose = front_camera(48, 30.0, 20.0);

  Rng rng(71);
  Image up_sil(48, 48, 1);
  Image up_col(48, 48, 3);
  for (double& v : up_sil.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : up_col.data) v = rng.uniform(-1.0, 1.0);

  const MeshGradient grad =
      rasterize_soft_adjoint(mesh, pose, cfg, &up_sil, &up_col);

  auto loss = [&](const TriMesh& m) {
    const RasterOutput out = rasterize_soft(m, pose, cfg);
    return image_dot(up_sil, out.silhouette) + image_dot(up_col, out.color);
  };

  SUBCASE("vertex positions") {
    TriMesh probe = mesh;
    int checked = 0;
    const double h = 1e-5;
    for (std::size_t v = 0; v < mesh.positions.size() && checked < 5; v += 7) {
      const int axis = static_cast<int>(v) % 3;
      if (std::abs(grad.position[v][axis]) < 1e-6) continue;
      const double saved = probe.positions[v][axis];
      probe.positions[v][axis] = saved + h;
      const double up_val = loss(probe);
      probe.positions[v][axis] = saved - h;
      const double down_val = loss(probe);
      probe.positions[v][axis] = saved;
      const double fd = (up_val - down_val) / (2.0 * h);
      const double rel =
          std::abs(grad.position[v][axis] - fd) / std::max(std::abs(fd), 1e-12);
      CHECK(rel < 2e-2);
      ++checked;
    }
    CHECK(checked == 5);
  }

  SUBCASE("vertex colors") {
    TriMesh probe = mesh;
    int checked = 0;
    const double h = 1e-4;
    for (std::size_t v = 0; v < mesh.positions.size() && checked < 5; v += 11) {
      const int ch = static_cast<int>(v) % 3;
      if (std::abs(grad.color[v][ch]) < 1e-6) continue;
      const double saved = probe.colors[v][ch];
      probe.colors[v][ch] = saved + h;
      const double up_val = loss(probe);
      probe.colors[v][ch] = saved - h;
      const double down_val = loss(probe);
      probe.colors[v][ch] = saved;
      const double fd = (up_val - down_val) / (2.0 * h);
      const double rel =
          std::abs(grad.color[v][ch] - fd) / std::max(std::abs(fd), 1e-12);
      CHECK(rel < 2e-2);
      ++checked;
    }
    CHECK(checked == 5);
  }
}

TEST_CASE("adjoint rejects mis-shaped cotangents") {
  const TriMesh mesh = sphere_mesh(0.25, 6);
  RasterConfig cfg;
  cfg.width = cfg.height = 16;
  Image wrong(8, 8, 1, 0.0);
  CHECK_THROWS_AS(
      rasterize_soft_adjoint(mesh, front_camera(16), cfg, &wrong, nullptr),
      ContractError);
}

TEST_CASE("silhouette gradient pushes the boundary outward consistently") {
  // Increasing the silhouette target at boundary pixels should pull nearby
  // vertices outward: check the directional derivative of total opacity with
  // respect to a radial inflation is positive.
  const TriMesh mesh = sphere_mesh(0.2, 8);
  RasterConfig cfg;
  cfg.width = cfg.height = 48;
  const CameraPose pose = front_camera(48);
  Image ones(48, 48, 1, 1.0);
  const MeshGradient grad =
      rasterize_soft_adjoint(mesh, pose, cfg, &ones, nullptr);

  double radial = 0.0;
  for (std::size_t v = 0; v < mesh.positions.size(); ++v)
    radial += grad.position[v].dot(mesh.positions[v].normalized());
  CHECK(radial > 0.0);
}
