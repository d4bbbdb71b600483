#include <doctest.h>

#include <cmath>

#include "ov/camera.hpp"
#include "ov/errors.hpp"
#include "ov/field.hpp"
#include "ov/render.hpp"
#include "ov/rng.hpp"
#include "test_oracles.hpp"

using namespace ov;

namespace {

CameraPose sphere_camera(int size) {
  CameraPose pose;
  pose.azimuth_deg = 0.0;
  pose.elevation_deg = 0.0;
  pose.radius = 1.8;
  pose.width = size;
  pose.height = size;
  return pose;
}

// Gentle random field: a plane with low-amplitude node noise, so every ray
// sees a single smooth crossing. Used by the gradient checks.
VoxelField random_smooth_field(int n, double beta, std::uint64_t seed) {
  VoxelField f(n, beta);
  Rng rng(seed);
  std::vector<double> sdf(f.node_count());
  std::vector<double> col(3 * f.node_count());
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const Vec3 p = f.node_position(ix, iy, iz);
        sdf[f.node_index(ix, iy, iz)] =
            p.x() + 0.08 * std::sin(7.0 * p.y()) * std::cos(5.0 * p.z()) +
            0.02 * (rng.uniform() - 0.5);
      }
  for (double& c : col) c = rng.uniform(0.2, 0.8);
  f.assign(std::move(sdf), std::move(col));
  return f;
}

}  // namespace

TEST_CASE("empty scene renders pure background with zero weight") {
  VoxelField f(16, 0.002);
  std::vector<double> sdf(f.node_count(), 0.3);
  std::vector<double> col(3 * f.node_count(), 0.1);
  f.assign(std::move(sdf), std::move(col));

  RenderConfig cfg;
  cfg.background = Vec3(1.0, 0.5, 0.25);
  const RenderOutput out = render(f, pose_to_rays(sphere_camera(8)), cfg);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      CHECK(out.color.at(y, x, 0) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(out.color.at(y, x, 1) == doctest::Approx(0.5).epsilon(1e-9));
      CHECK(out.color.at(y, x, 2) == doctest::Approx(0.25).epsilon(1e-9));
      CHECK(out.weight_sum.at(y, x) < 1e-9);
    }
}

TEST_CASE("ray missing the cube gives background and zero opacity") {
  const VoxelField f = bake_field(AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25), 32,
                                  0.005);
  RayBundle rays;
  rays.width = 1;
  rays.height = 1;
  rays.rays.push_back({Vec3(1.8, 0, 0), Vec3(0, 1, 0)});
  RenderConfig cfg;
  const RenderOutput out = render(f, rays, cfg);
  CHECK(out.weight_sum.at(0, 0) == 0.0);
  CHECK(out.color.at(0, 0, 0) == cfg.background.x());
}

TEST_CASE("sphere scene depth and opacity match the dense reference") {
  const AnalyticSdf sphere = AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25);
  const VoxelField f = bake_field(sphere, 96, 0.005);
  RenderConfig cfg;
  cfg.samples_per_ray = 96;

  const int size = 9;
  const RayBundle rays = pose_to_rays(sphere_camera(size));
  const RenderOutput out = render(f, rays, cfg);
  const int c = size / 2;

  // Independent dense quadrature along the center ray, 1e4 samples.
  const Ray& center = rays.at(c, c);
  const auto ref =
      ovtest::dense_ray_reference(f, center, 1.3 - 0.05, 2.3 + 0.05, 10000);
  CHECK(std::abs(ref.depth - 1.55) < 0.005);  // geometric hit at 1.8 - 0.25
  CHECK(ref.weight_sum >= 0.98);

  CHECK(std::abs(out.depth.at(c, c) - 1.55) < 0.02);
  CHECK(std::abs(out.depth.at(c, c) - ref.depth) < 0.02);
  CHECK(out.weight_sum.at(c, c) >= 0.98);
}

TEST_CASE("per-ray weight peaks at the first outside-to-inside crossing") {
  RenderConfig cfg;
  cfg.samples_per_ray = 96;
  const AnalyticSdf targets[2] = {
      AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25),
      AnalyticSdf::box(Vec3(0, 0, 0), Vec3(0.22, 0.18, 0.2))};

  for (const AnalyticSdf& target : targets) {
    const VoxelField f = bake_field(target, 96, 0.005);
    const RayBundle rays = pose_to_rays(sphere_camera(24));
    int checked = 0;
    for (const Ray& ray : rays.rays) {
      const RayProfile prof = render_ray_profile(f, ray, cfg);
      if (!prof.hit || prof.weight_sum < 0.5) continue;
      int first_crossing = -1;
      for (std::size_t i = 1; i < prof.sdf.size(); ++i) {
        if (prof.sdf[i - 1] >= 0.0 && prof.sdf[i] < 0.0) {
          first_crossing = static_cast<int>(i);
          break;
        }
      }
      if (first_crossing < 0) continue;
      int argmax = 0;
      for (std::size_t i = 1; i < prof.weight.size(); ++i)
        if (prof.weight[i] > prof.weight[argmax]) argmax = static_cast<int>(i);
      CHECK(std::abs(argmax - first_crossing) <= 2);
      ++checked;
    }
    CHECK(checked > 20);
  }
}

TEST_CASE("quadrature converges: doubling samples barely moves the depth") {
  const VoxelField f = bake_field(AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25), 96,
                                  0.005);
  const int size = 5;
  const RayBundle rays = pose_to_rays(sphere_camera(size));
  RenderConfig a, b;
  a.samples_per_ray = 192;
  b.samples_per_ray = 384;
  const double da = render(f, rays, a).depth.at(size / 2, size / 2);
  const double db = render(f, rays, b).depth.at(size / 2, size / 2);
  CHECK(std::abs(da - db) < 1e-3);
}

TEST_CASE("weight sums stay within [0, 1] on random fields") {
  for (int trial = 0; trial < 5; ++trial) {
    const VoxelField f = random_smooth_field(12, 0.01, 100 + trial);
    const RenderOutput out =
        render(f, pose_to_rays(sphere_camera(12)), RenderConfig{});
    for (double w : out.weight_sum.data) {
      CHECK(w >= 0.0);
      CHECK(w <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("adjoint: zero upstream gives zero gradient") {
  const VoxelField f = random_smooth_field(10, 0.02, 5);
  const RayBundle rays = pose_to_rays(sphere_camera(4));
  RenderConfig cfg;
  cfg.samples_per_ray = 32;
  const RenderOutput out = render(f, rays, cfg);
  const Image zeros(4, 4, 3, 0.0);
  FieldGradient grad;
  render_adjoint(f, rays, cfg, out.cache, &zeros, nullptr, grad);
  CHECK(grad.norm() == 0.0);
}

TEST_CASE("adjoint: stale cache raises a contract error") {
  VoxelField f = random_smooth_field(10, 0.02, 6);
  const RayBundle rays = pose_to_rays(sphere_camera(4));
  RenderConfig cfg;
  cfg.samples_per_ray = 16;
  const RenderOutput out = render(f, rays, cfg);
  f.set_sdf_node(0, f.sdf_node(0) + 0.1);  // mutate -> revision bump
  const Image up(4, 4, 3, 1.0);
  FieldGradient grad;
  CHECK_THROWS_AS(render_adjoint(f, rays, cfg, out.cache, &up, nullptr, grad),
                  ContractError);
}

TEST_CASE("adjoint matches per-node finite differences on a single ray") {
  VoxelField f = random_smooth_field(8, 0.02, 77);
  RayBundle rays;
  rays.width = 1;
  rays.height = 1;
  Rng rng(13);
  const Vec3 target(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                    rng.uniform(-0.2, 0.2));
  const Vec3 origin(1.7, rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
  rays.rays.push_back({origin, (target - origin).normalized()});

  RenderConfig cfg;
  cfg.samples_per_ray = 48;

  Image upstream(1, 1, 3);
  upstream.at(0, 0, 0) = 0.7;
  upstream.at(0, 0, 1) = -0.3;
  upstream.at(0, 0, 2) = 0.45;

  const RenderOutput out = render(f, rays, cfg);
  FieldGradient grad;
  render_adjoint(f, rays, cfg, out.cache, &upstream, nullptr, grad);

  auto loss = [&]() {
    const RenderOutput o = render(f, rays, cfg);
    return upstream.at(0, 0, 0) * o.color.at(0, 0, 0) +
           upstream.at(0, 0, 1) * o.color.at(0, 0, 1) +
           upstream.at(0, 0, 2) * o.color.at(0, 0, 2);
  };

  const double h = 1e-3;
  int checked_sdf = 0, checked_col = 0;
  for (std::size_t n = 0; n < f.node_count(); ++n) {
    if (grad.sdf[n] != 0.0) {
      const double fd = ovtest::fd_sdf_node(f, n, h, loss);
      const double err = std::abs(grad.sdf[n] - fd);
      const bool ok = err < 1e-6 || err / std::max(std::abs(fd), 1e-12) < 1e-2;
      CHECK(ok);
      ++checked_sdf;
    }
    for (int ch = 0; ch < 3; ++ch) {
      if (grad.color[3 * n + ch] != 0.0 && checked_col < 60) {
        const double fd = ovtest::fd_color_node(f, n, ch, h, loss);
        const double err = std::abs(grad.color[3 * n + ch] - fd);
        const bool ok =
            err < 1e-6 || err / std::max(std::abs(fd), 1e-12) < 1e-2;
        CHECK(ok);
        ++checked_col;
      }
    }
  }
  CHECK(checked_sdf > 20);
  CHECK(checked_col > 20);

  SUBCASE("gradient support is confined to cells along the ray") {
    const double h_cell = f.cell_size();
    for (int iz = 0; iz < f.resolution(); ++iz)
      for (int iy = 0; iy < f.resolution(); ++iy)
        for (int ix = 0; ix < f.resolution(); ++ix) {
          const std::size_t n = f.node_index(ix, iy, iz);
          if (grad.sdf[n] == 0.0) continue;
          const Vec3 node = f.node_position(ix, iy, iz);
          const Vec3& o = rays.rays[0].origin;
          const Vec3& d = rays.rays[0].dir;
          const double t = std::clamp((node - o).dot(d), 0.0, 4.0);
          const double dist = (node - (o + t * d)).norm();
          CHECK(dist <= 2.0 * std::sqrt(3.0) * h_cell);
        }
  }
}

TEST_CASE("adjoint directional derivatives match on random triples") {
  Rng rng(2718);
  RenderConfig cfg;
  cfg.samples_per_ray = 32;
  int agreements = 0;
  for (int trial = 0; trial < 20; ++trial) {
    VoxelField f = random_smooth_field(8, 0.02, 500 + trial);
    CameraPose pose = sphere_camera(3);
    pose.azimuth_deg = rng.uniform(0.0, 360.0);
    pose.elevation_deg = rng.uniform(0.0, 45.0);
    const RayBundle rays = pose_to_rays(pose);

    Image upstream(3, 3, 3);
    for (double& v : upstream.data) v = rng.uniform(-1.0, 1.0);

    const RenderOutput out = render(f, rays, cfg);
    FieldGradient grad;
    render_adjoint(f, rays, cfg, out.cache, &upstream, nullptr, grad);

    std::vector<double> dir_sdf(f.node_count());
    std::vector<double> dir_col(3 * f.node_count());
    double norm_sq = 0.0;
    for (double& v : dir_sdf) {
      v = rng.uniform(-1.0, 1.0);
      norm_sq += v * v;
    }
    for (double& v : dir_col) {
      v = rng.uniform(-1.0, 1.0);
      norm_sq += v * v;
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    for (double& v : dir_sdf) v *= inv_norm;
    for (double& v : dir_col) v *= inv_norm;

    double analytic = 0.0;
    for (std::size_t i = 0; i < dir_sdf.size(); ++i)
      analytic += grad.sdf[i] * dir_sdf[i];
    for (std::size_t i = 0; i < dir_col.size(); ++i)
      analytic += grad.color[i] * dir_col[i];

    auto loss = [&]() {
      const RenderOutput o = render(f, rays, cfg);
      return image_dot(upstream, o.color);
    };
    const double h = 1e-4;
    std::vector<double> step_sdf(dir_sdf), step_col(dir_col);
    for (double& v : step_sdf) v *= h;
    for (double& v : step_col) v *= h;
    f.apply_update(step_sdf, step_col);
    const double up = loss();
    for (double& v : step_sdf) v *= -2.0;
    for (double& v : step_col) v *= -2.0;
    f.apply_update(step_sdf, step_col);
    const double down = loss();
    const double fd = (up - down) / (2.0 * h);

    const double err = std::abs(analytic - fd);
    if (err < 1e-8 || err / std::max(std::abs(fd), 1e-12) < 1e-2) ++agreements;
  }
  CHECK(agreements == 20);
}

TEST_CASE("silhouette behavior on the sphere scene") {
  const VoxelField f = bake_field(AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25), 96,
                                  0.005);
  RenderConfig cfg;
  cfg.samples_per_ray = 96;

  SUBCASE("center ray is essentially opaque") {
    const int size = 9;
    const Image sil =
        render_silhouette(f, pose_to_rays(sphere_camera(size)), cfg);
    CHECK(sil.at(size / 2, size / 2) >= 0.98);
  }

  SUBCASE("opacity decreases monotonically past the silhouette radius") {
    RayBundle rays;
    const int count = 8;
    rays.width = count;
    rays.height = 1;
    for (int i = 0; i < count; ++i) {
      const double b = 0.26 + 0.03 * i;
      rays.rays.push_back({Vec3(1.8, b, 0), Vec3(-1, 0, 0)});
    }
    const Image sil = render_silhouette(f, rays, cfg);
    for (int i = 1; i < count; ++i)
      CHECK(sil.at(0, i) <= sil.at(0, i - 1) + 1e-12);
  }
}

TEST_CASE("silhouette adjoint flows through the opacity channel") {
  VoxelField f = random_smooth_field(8, 0.02, 321);
  const RayBundle rays = pose_to_rays(sphere_camera(3));
  RenderConfig cfg;
  cfg.samples_per_ray = 32;
  const RenderOutput out = render(f, rays, cfg);

  Image upstream(3, 3, 1);
  Rng rng(17);
  for (double& v : upstream.data) v = rng.uniform(-1.0, 1.0);

  FieldGradient grad;
  render_adjoint(f, rays, cfg, out.cache, nullptr, &upstream, grad);
  CHECK(grad.norm() > 0.0);

  auto loss = [&]() {
    const RenderOutput o = render(f, rays, cfg);
    return image_dot(upstream, o.weight_sum);
  };
  int checked = 0;
  for (std::size_t n = 0; n < f.node_count() && checked < 5; ++n) {
    if (std::abs(grad.sdf[n]) < 1e-6) continue;
    const double fd = ovtest::fd_sdf_node(f, n, 1e-3, loss);
    const double err = std::abs(grad.sdf[n] - fd);
    CHECK((err < 1e-6 || err / std::max(std::abs(fd), 1e-12) < 1e-2));
    ++checked;
  }
  CHECK(checked == 5);
}
