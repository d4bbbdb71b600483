#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "ov/field.hpp"
#include "ov/rng.hpp"

using namespace ov;

TEST_CASE("constant field queries the constant everywhere") {
  VoxelField f(16, 0.01);
  std::vector<double> sdf(f.node_count(), 0.3);
  std::vector<double> col(3 * f.node_count(), 0.5);
  f.assign(std::move(sdf), std::move(col));

  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                 rng.uniform(-0.5, 0.5));
    CHECK(f.query(p).sdf == doctest::Approx(0.3).epsilon(1e-12));
  }
}

TEST_CASE("baked sphere center query is close to the analytic value") {
  const AnalyticSdf sphere = AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25);
  const VoxelField f = bake_field(sphere, 64, 0.01);
  const double cell_diag = std::sqrt(3.0) * f.cell_size();
  CHECK(std::abs(f.query(Vec3(0, 0, 0)).sdf - (-0.25)) < cell_diag);
}

TEST_CASE("query on a grid node returns the stored value bit-exactly") {
  const AnalyticSdf sphere = AnalyticSdf::sphere(Vec3(0.05, -0.1, 0.2), 0.3);
  const VoxelField f = bake_field(sphere, 17, 0.01);
  for (int ix : {0, 3, 16})
    for (int iy : {0, 7, 16})
      for (int iz : {1, 8, 15}) {
        const Vec3 p = f.node_position(ix, iy, iz);
        CHECK(f.query(p).sdf == f.sdf_node(f.node_index(ix, iy, iz)));
      }
}

TEST_CASE("trilinear parameter weights") {
  VoxelField f(8, 0.01);

  SUBCASE("cell center gives eight equal weights") {
    const double h = f.cell_size();
    const Vec3 center(-0.5 + 2.5 * h, -0.5 + 3.5 * h, -0.5 + 4.5 * h);
    const NodeWeights nw = f.param_weights(center);
    for (double w : nw.w) CHECK(w == doctest::Approx(0.125).epsilon(1e-12));
  }

  SUBCASE("node point gives a one-hot weight") {
    const NodeWeights nw = f.param_weights(f.node_position(3, 4, 5));
    double max_w = 0.0;
    double sum = 0.0;
    for (double w : nw.w) {
      max_w = std::max(max_w, w);
      sum += w;
    }
    CHECK(max_w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("partition of unity over random points") {
    Rng rng(99);
    for (int i = 0; i < 100000; ++i) {
      const Vec3 p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                   rng.uniform(-0.5, 0.5));
      const NodeWeights nw = f.param_weights(p);
      double sum = 0.0;
      for (double w : nw.w) sum += w;
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("analytic sdf primitives") {
  const AnalyticSdf sphere = AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25);
  CHECK(sphere.sdf(Vec3(0.25, 0, 0)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(sphere.sdf(Vec3(1.8, 0, 0)) == doctest::Approx(1.55).epsilon(1e-15));

  const AnalyticSdf two = AnalyticSdf::union_of(
      {AnalyticSdf::sphere(Vec3(-0.2, 0, 0), 0.1),
       AnalyticSdf::sphere(Vec3(0.25, 0, 0), 0.12)});
  const Vec3 inside_first(-0.2, 0.02, 0);
  CHECK(two.sdf(inside_first) ==
        doctest::Approx(AnalyticSdf::sphere(Vec3(-0.2, 0, 0), 0.1).sdf(inside_first)));
  CHECK(two.sdf(inside_first) < 0.0);

  SUBCASE("box sdf is exact outside a corner") {
    const AnalyticSdf box = AnalyticSdf::box(Vec3(0, 0, 0), Vec3(0.2, 0.2, 0.2));
    const Vec3 p(0.3, 0.3, 0.3);
    CHECK(box.sdf(p) == doctest::Approx(std::sqrt(3.0) * 0.1).epsilon(1e-12));
    CHECK(box.sdf(Vec3(0, 0, 0)) == doctest::Approx(-0.2).epsilon(1e-12));
  }

  SUBCASE("translation shifts the field") {
    const AnalyticSdf moved = sphere.translated(Vec3(0.1, 0, 0));
    CHECK(moved.sdf(Vec3(0.35, 0, 0)) == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("bake reproduces node values exactly and bounds off-node error") {
  const AnalyticSdf sphere = AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25);
  const VoxelField f = bake_field(sphere, 64, 0.01);

  double max_node_err = 0.0;
  for (int iz = 0; iz < 64; iz += 7)
    for (int iy = 0; iy < 64; iy += 7)
      for (int ix = 0; ix < 64; ix += 7) {
        const Vec3 p = f.node_position(ix, iy, iz);
        max_node_err = std::max(
            max_node_err,
            std::abs(f.sdf_node(f.node_index(ix, iy, iz)) - sphere.sdf(p)));
      }
  CHECK(max_node_err == 0.0);

  // Off-node: curvature-limited interpolation error. The sphere SDF is only
  // C^2 away from its medial axis (the center point), so the curvature bound
  // applies outside a small ball there; at the kink itself the error is
  // first-order in the cell size instead.
  Rng rng(7);
  const double cell_diag = std::sqrt(3.0) * f.cell_size();
  double max_err_smooth = 0.0;
  double max_err_global = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Vec3 p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                 rng.uniform(-0.5, 0.5));
    const double err = std::abs(f.query(p).sdf - sphere.sdf(p));
    max_err_global = std::max(max_err_global, err);
    if (p.norm() > 2.0 * cell_diag) max_err_smooth = std::max(max_err_smooth, err);
  }
  CHECK(max_err_smooth <= 2.0 * cell_diag * cell_diag);
  CHECK(max_err_global <= f.cell_size());
}

TEST_CASE("trilinear interpolation reproduces affine fields exactly") {
  // f(p) = p_z on a 2-node grid: interpolation must be exact everywhere.
  VoxelField plane(2, 0.01);
  std::vector<double> sdf(plane.node_count());
  std::vector<double> col(3 * plane.node_count(), 0.5);
  for (int iz = 0; iz < 2; ++iz)
    for (int iy = 0; iy < 2; ++iy)
      for (int ix = 0; ix < 2; ++ix)
        sdf[plane.node_index(ix, iy, iz)] = plane.node_position(ix, iy, iz).z();
  plane.assign(std::move(sdf), std::move(col));

  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                 rng.uniform(-0.5, 0.5));
    CHECK(std::abs(plane.query(p).sdf - p.z()) < 1e-15);
  }

  // General affine f on a denser grid, 1e-10 tolerance.
  const Vec3 g(0.3, -0.7, 0.2);
  const double c0 = 0.05;
  VoxelField affine(9, 0.01);
  std::vector<double> sdf2(affine.node_count());
  std::vector<double> col2(3 * affine.node_count(), 0.5);
  for (int iz = 0; iz < 9; ++iz)
    for (int iy = 0; iy < 9; ++iy)
      for (int ix = 0; ix < 9; ++ix)
        sdf2[affine.node_index(ix, iy, iz)] =
            c0 + g.dot(affine.node_position(ix, iy, iz));
  affine.assign(std::move(sdf2), std::move(col2));
  for (int i = 0; i < 10000; ++i) {
    const Vec3 p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                 rng.uniform(-0.5, 0.5));
    CHECK(std::abs(affine.query(p).sdf - (c0 + g.dot(p))) < 1e-10);
  }
}

TEST_CASE("out-of-cube queries extend by distance to the cube") {
  const AnalyticSdf sphere = AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25);
  const VoxelField f = bake_field(sphere, 32, 0.01);
  const Vec3 outside(1.5, 0, 0);
  const double boundary = f.query(Vec3(0.5, 0, 0)).sdf;
  CHECK(f.query(outside).sdf == doctest::Approx(boundary + 1.0).epsilon(1e-12));
  CHECK(f.query(outside).sdf > 0.0);

  // Adjoint weights for an outside point sit on the clamped cell and still
  // sum to one.
  const NodeWeights nw = f.param_weights(outside);
  double sum = 0.0;
  for (double w : nw.w) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("color queries clamp to [0,1]") {
  VoxelField f(4, 0.01);
  std::vector<double> sdf(f.node_count(), 0.1);
  std::vector<double> col(3 * f.node_count(), 1.7);
  f.assign(std::move(sdf), std::move(col));
  const FieldSample s = f.query(Vec3(0.1, 0.1, 0.1));
  CHECK(s.color.x() == 1.0);
  CHECK(s.color.y() == 1.0);
  CHECK(s.color.z() == 1.0);
}

TEST_CASE("OVF1 checkpoint round-trips bit-exactly") {
  const VoxelField f = VoxelField::default_init(12, 0.037, 2024);
  const std::string path_a = "test_field_a.ovf";
  const std::string path_b = "test_field_b.ovf";
  f.save(path_a);
  const VoxelField g = VoxelField::load(path_a);
  g.save(path_b);

  std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(fa)),
                            std::istreambuf_iterator<char>());
  const std::string bytes_b((std::istreambuf_iterator<char>(fb)),
                            std::istreambuf_iterator<char>());
  CHECK(bytes_a == bytes_b);
  CHECK(bytes_a.size() == 4 + 4 + 4 + 4u * (12 * 12 * 12) * 4);
  CHECK(bytes_a.substr(0, 4) == "OVF1");
  CHECK(g.resolution() == 12);

  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

TEST_CASE("default init is a noisy centered blob") {
  const VoxelField f = VoxelField::default_init(24, 0.05, 7);
  CHECK(f.query(Vec3(0, 0, 0)).sdf < 0.0);
  CHECK(f.query(Vec3(0.48, 0.48, 0.48)).sdf > 0.0);
  // Noise breaks symmetry between mirrored nodes.
  const double a = f.sdf_node(f.node_index(2, 12, 12));
  const double b = f.sdf_node(f.node_index(21, 12, 12));
  CHECK(a != b);
}
