#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ov/field.hpp"
#include "ov/metrics.hpp"
#include "ov/targets.hpp"
#include "ov/tetgrid.hpp"
#include "ov/trimesh.hpp"
#include "test_oracles.hpp"

using namespace ov;

namespace {

TetGrid grid_from_analytic(const AnalyticSdf& target, int resolution) {
  TetGrid grid = make_bcc_grid(resolution);
  for (auto& v : grid.verts) {
    const FieldSample s = target.query(v.rest);
    v.sdf = s.sdf;
    v.color = s.color;
  }
  return grid;
}

// Symmetric Hausdorff between a mesh and the analytic sphere of radius r:
// mesh-to-surface via the exact sphere distance at vertices and centroids,
// surface-to-mesh via Fibonacci samples and exact point-triangle distance.
double sphere_hausdorff(const TriMesh& mesh, double radius) {
  double mesh_to_surface = 0.0;
  for (const Vec3& p : mesh.positions)
    mesh_to_surface = std::max(mesh_to_surface, std::abs(p.norm() - radius));
  for (const auto& f : mesh.faces) {
    const Vec3 c = (mesh.positions[f[0]] + mesh.positions[f[1]] +
                    mesh.positions[f[2]]) /
                   3.0;
    mesh_to_surface = std::max(mesh_to_surface, std::abs(c.norm() - radius));
  }

  double surface_to_mesh = 0.0;
  const int n = 1500;
  const double golden = 2.399963229728653;
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double rho = std::sqrt(1.0 - z * z);
    const double phi = golden * i;
    const Vec3 p =
        radius * Vec3(rho * std::cos(phi), rho * std::sin(phi), z);
    double best = 1e9;
    for (const auto& f : mesh.faces) {
      best = std::min(best, ovtest::point_triangle_distance(
                                p, mesh.positions[f[0]], mesh.positions[f[1]],
                                mesh.positions[f[2]]));
      if (best < 1e-12) break;
    }
    surface_to_mesh = std::max(surface_to_mesh, best);
  }
  return std::max(mesh_to_surface, surface_to_mesh);
}

}  // namespace

TEST_CASE("BCC grid construction") {
  for (int res : {1, 2, 4, 7}) {
    const TetGrid grid = make_bcc_grid(res);
    const std::size_t np = static_cast<std::size_t>(res + 1);
    CHECK(grid.verts.size() == np * np * np + static_cast<std::size_t>(res) * res * res);
    CHECK(grid.tets.size() == static_cast<std::size_t>(12) * res * res * res);
    CHECK(grid.inverted_count() == 0);
    CHECK(grid.mean_edge_length > 0.0);
    CHECK(grid.mean_edge_length < 1.5 / res);
  }
}

TEST_CASE("marching tets over an all-positive field is empty") {
  TetGrid grid = make_bcc_grid(6);
  for (auto& v : grid.verts) v.sdf = 0.4;
  const TriMesh mesh = marching_tets(grid);
  CHECK(mesh.faces.empty());
  CHECK(mesh.positions.empty());
}

TEST_CASE("marching tets on a plane field keeps vertices on the plane") {
  // Plane offset so it passes through no lattice point (an exact-zero vertex
  // would trigger the documented perturb-and-snap rule instead).
  const double plane_z = 0.013;
  TetGrid grid = make_bcc_grid(8);
  for (auto& v : grid.verts) v.sdf = v.rest.z() - plane_z;
  const TriMesh mesh = marching_tets(grid);
  REQUIRE(!mesh.faces.empty());
  for (const Vec3& p : mesh.positions) CHECK(std::abs(p.z() - plane_z) < 1e-9);
}

TEST_CASE("marching tets sphere: closed, genus 0, on-surface, outward") {
  const double radius = 0.25;
  const TetGrid grid =
      grid_from_analytic(AnalyticSdf::sphere(Vec3(0, 0, 0), radius), 32);
  const TriMesh mesh = marching_tets(grid);
  REQUIRE(mesh.face_count() > 100);

  const MeshTopology topo = analyze_topology(mesh);
  CHECK(topo.closed());
  CHECK(topo.components == 1);
  CHECK(topo.euler_characteristic == 2);

  const double max_edge = 1.5 * grid.mean_edge_length;
  for (const Vec3& p : mesh.positions)
    CHECK(std::abs(p.norm() - radius) < max_edge);

  // Outward orientation: positive enclosed volume, close to the ball volume.
  const double vol = signed_volume(mesh);
  const double ball = 4.0 / 3.0 * 3.14159265358979 * radius * radius * radius;
  CHECK(vol > 0.9 * ball);
  CHECK(vol < 1.1 * ball);
}

TEST_CASE("marching tets welds shared crossings (count check)") {
  const TetGrid grid =
      grid_from_analytic(AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25), 16);
  const TriMesh mesh = marching_tets(grid);
  // Closed triangle mesh: E = 3F/2, V = F/2 + 2 for genus 0.
  const MeshTopology topo = analyze_topology(mesh);
  CHECK(topo.edges == 3 * topo.faces / 2);
  CHECK(topo.vertices == topo.faces / 2 + 2);
}

TEST_CASE("extraction error shrinks at least first-order when doubling") {
  const double h16 = sphere_hausdorff(
      marching_tets(grid_from_analytic(AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25), 16)),
      0.25);
  const double h32 = sphere_hausdorff(
      marching_tets(grid_from_analytic(AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25), 32)),
      0.25);
  MESSAGE("sphere Hausdorff: res16 ", h16, " res32 ", h32, " ratio ",
          h16 / h32);
  CHECK(h32 <= h16 / 1.6);
}

TEST_CASE("init from field matches queries and agrees with the zero set") {
  const AnalyticSdf target = target_two_spheres();
  const VoxelField field = bake_field(target, 64, 0.01);
  const TetGrid grid = init_tetgrid_from_field(field, 24);

  CHECK(grid.tets.size() == 12u * 24 * 24 * 24);
  for (std::size_t i = 0; i < grid.verts.size(); i += 97) {
    const FieldSample s = field.query(grid.verts[i].rest);
    CHECK(grid.verts[i].sdf == s.sdf);
    CHECK(grid.verts[i].color == s.color);
  }

  // The extracted mesh must lie within a cell of the interpolated zero set
  // and vice versa (bisection-based zero-crossing cloud as the oracle).
  std::vector<CrossingRef> provenance;
  const TriMesh mesh = marching_tets(grid, &provenance);
  REQUIRE(!mesh.faces.empty());
  const double cell = 1.0 / 24.0;

  // Mesh-to-zero-set: the field value at mesh vertices is small.
  double worst_value = 0.0;
  for (const Vec3& p : mesh.positions)
    worst_value = std::max(worst_value, std::abs(field.query_sdf(p)));
  // |f| bounds the distance for a unit-gradient field.
  CHECK(worst_value < cell);

  // Zero-set-to-mesh: every bisection crossing is near some triangle.
  const auto cloud = ovtest::zero_crossing_cloud(field, 24);
  REQUIRE(cloud.size() > 100);
  double worst_dist = 0.0;
  for (const Vec3& p : cloud) {
    double best = 1e9;
    for (const auto& f : mesh.faces) {
      best = std::min(best, ovtest::point_triangle_distance(
                                p, mesh.positions[f[0]], mesh.positions[f[1]],
                                mesh.positions[f[2]]));
      if (best < 1e-6) break;
    }
    worst_dist = std::max(worst_dist, best);
  }
  CHECK(worst_dist < std::sqrt(3.0) * cell);
}

TEST_CASE("watertight extraction from the default blob init") {
  const VoxelField field = VoxelField::default_init(24, 0.01, 5);
  const TetGrid grid = init_tetgrid_from_field(field, 20);
  const TriMesh mesh = marching_tets(grid);
  REQUIRE(!mesh.faces.empty());
  const MeshTopology topo = analyze_topology(mesh);
  CHECK(topo.closed());
}

TEST_CASE("deformation clamp and inversion counting") {
  TetGrid grid = make_bcc_grid(4);
  const double limit = grid.offset_limit();
  grid.verts[10].offset = Vec3(1.0, 0.0, 0.0);
  grid.clamp_offsets();
  CHECK(grid.verts[10].offset.norm() <= limit);
  CHECK(grid.inverted_count() == 0);

  // Collapse one vertex far through its neighbors: inversion shows up.
  grid.verts[10].offset = Vec3(0.9, 0.9, 0.9);  // bypass clamp on purpose
  CHECK(grid.inverted_count() > 0);
}

TEST_CASE("mesh export and import") {
  SUBCASE("unit tetrahedron OBJ has 4 vertex and 4 face lines") {
    TriMesh tet;
    tet.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    tet.colors = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(1, 1, 1)};
    tet.faces = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
    export_mesh(tet, "tet_test.obj", MeshFormat::kObj);
    std::ifstream is("tet_test.obj");
    int v_lines = 0, f_lines = 0;
    std::string line;
    while (std::getline(is, line)) {
      if (line.rfind("v ", 0) == 0) ++v_lines;
      if (line.rfind("f ", 0) == 0) ++f_lines;
    }
    CHECK(v_lines == 4);
    CHECK(f_lines == 4);
    std::remove("tet_test.obj");
  }

  SUBCASE("binary PLY round-trips the arrays bit-exactly") {
    const TetGrid grid =
        grid_from_analytic(target_two_spheres(), 12);
    const TriMesh mesh = marching_tets(grid);
    REQUIRE(!mesh.faces.empty());
    export_mesh(mesh, "roundtrip_test.ply", MeshFormat::kPlyBinary);
    const TriMesh back = import_ply("roundtrip_test.ply");
    REQUIRE(back.positions.size() == mesh.positions.size());
    REQUIRE(back.faces.size() == mesh.faces.size());
    for (std::size_t i = 0; i < mesh.positions.size(); ++i) {
      CHECK(back.positions[i] == mesh.positions[i]);
      CHECK(back.colors[i] == mesh.colors[i]);
    }
    CHECK(back.faces == mesh.faces);
    std::remove("roundtrip_test.ply");
  }

  SUBCASE("empty mesh exports valid files") {
    TriMesh empty;
    export_mesh(empty, "empty_test.ply", MeshFormat::kPlyBinary);
    const TriMesh back = import_ply("empty_test.ply");
    CHECK(back.positions.empty());
    CHECK(back.faces.empty());
    export_mesh(empty, "empty_test.obj", MeshFormat::kObj);
    std::remove("empty_test.ply");
    std::remove("empty_test.obj");
  }
}

TEST_CASE("surface defect metrics distinguish clean and broken meshes") {
  const TetGrid grid =
      grid_from_analytic(AnalyticSdf::sphere(Vec3(0, 0, 0), 0.25), 16);
  const TriMesh sphere_mesh = marching_tets(grid);
  const SurfaceDefects clean = measure_surface_defects(sphere_mesh);
  CHECK(!clean.any());

  const TetGrid two = grid_from_analytic(target_two_spheres(), 20);
  const SurfaceDefects split = measure_surface_defects(marching_tets(two));
  CHECK(split.extra_components == 1);
  CHECK(split.euler_deficit == 0);  // two clean genus-0 parts
  CHECK(split.any());

  TriMesh open_tri;
  open_tri.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  open_tri.colors = open_tri.positions;
  open_tri.faces = {{0, 1, 2}};
  const SurfaceDefects open_defects = measure_surface_defects(open_tri);
  CHECK(open_defects.boundary_edges == 3);
  CHECK(open_defects.any());
}
