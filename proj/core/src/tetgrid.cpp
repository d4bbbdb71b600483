#include "ov/tetgrid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ov/errors.hpp"

namespace ov {

namespace {

inline double tet_orientation(const Vec3& a, const Vec3& b, const Vec3& c,
                              const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a);
}

}  // namespace

void TetGrid::clamp_offsets() {
  const double limit = offset_limit() * (1.0 - 1e-9);
  for (auto& v : verts) {
    const double n = v.offset.norm();
    if (n > limit) v.offset *= limit / n;
  }
}

int TetGrid::inverted_count() const {
  int count = 0;
  for (const auto& t : tets) {
    if (tet_orientation(deformed(t[0]), deformed(t[1]), deformed(t[2]),
                        deformed(t[3])) <= 0.0)
      count++;
  }
  return count;
}

TetGrid make_bcc_grid(int resolution) {
  if (resolution < 1) throw ConfigError("tet grid resolution must be >= 1");
  const int n = resolution;
  const double h = 1.0 / n;

  TetGrid grid;
  grid.resolution = n;

  const int np = n + 1;  // lattice nodes per axis
  auto node_id = [&](int i, int j, int k) { return i + np * (j + np * k); };
  auto center_id = [&](int i, int j, int k) {
    return np * np * np + i + n * (j + n * k);
  };

  grid.verts.resize(static_cast<std::size_t>(np) * np * np +
                    static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i)
        grid.verts[node_id(i, j, k)].rest =
            Vec3(-0.5 + i * h, -0.5 + j * h, -0.5 + k * h);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        grid.verts[center_id(i, j, k)].rest =
            Vec3(-0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h,
                 -0.5 + (k + 0.5) * h);

  grid.tets.reserve(static_cast<std::size_t>(12) * n * n * n);

  // The four lattice corners of the face perpendicular to `axis` at plane
  // coordinate m with in-plane cell coords (u, v), in cyclic order.
  auto face_corners = [&](int axis, int m, int u, int v) {
    std::array<int, 4> c;
    auto at = [&](int du, int dv) {
      int ijk[3];
      ijk[axis] = m;
      ijk[(axis + 1) % 3] = u + du;
      ijk[(axis + 2) % 3] = v + dv;
      return node_id(ijk[0], ijk[1], ijk[2]);
    };
    c[0] = at(0, 0);
    c[1] = at(1, 0);
    c[2] = at(1, 1);
    c[3] = at(0, 1);
    return c;
  };
  auto cell_of = [&](int axis, int m, int u, int v) {
    int ijk[3];
    ijk[axis] = m;
    ijk[(axis + 1) % 3] = u;
    ijk[(axis + 2) % 3] = v;
    return center_id(ijk[0], ijk[1], ijk[2]);
  };

  for (int axis = 0; axis < 3; ++axis) {
    for (int m = 0; m <= n; ++m) {
      for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
          const auto q = face_corners(axis, m, u, v);
          if (m > 0 && m < n) {
            const int ca = cell_of(axis, m - 1, u, v);
            const int cb = cell_of(axis, m, u, v);
            for (int e = 0; e < 4; ++e)
              grid.tets.push_back({ca, cb, q[e], q[(e + 1) % 4]});
          } else {
            const int c = cell_of(axis, m == 0 ? 0 : n - 1, u, v);
            grid.tets.push_back({c, q[0], q[1], q[2]});
            grid.tets.push_back({c, q[0], q[2], q[3]});
          }
        }
      }
    }
  }

  // Positive orientation at rest.
  for (auto& t : grid.tets) {
    if (tet_orientation(grid.verts[t[0]].rest, grid.verts[t[1]].rest,
                        grid.verts[t[2]].rest, grid.verts[t[3]].rest) < 0.0)
      std::swap(t[2], t[3]);
  }

  // Mean rest edge length over unique edges.
  std::set<std::pair<int, int>> edges;
  for (const auto& t : grid.tets)
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        edges.insert({std::min(t[a], t[b]), std::max(t[a], t[b])});
  double total = 0.0;
  for (const auto& [a, b] : edges)
    total += (grid.verts[a].rest - grid.verts[b].rest).norm();
  grid.mean_edge_length = total / static_cast<double>(edges.size());

  return grid;
}

TetGrid init_tetgrid_from_field(const VoxelField& field, int resolution) {
  TetGrid grid = make_bcc_grid(resolution);
  for (auto& v : grid.verts) {
    const FieldSample s = field.query(v.rest);
    v.sdf = s.sdf;
    v.color = s.color;
  }
  return grid;
}

TriMesh marching_tets(const TetGrid& grid, std::vector<CrossingRef>* provenance) {
  TriMesh mesh;
  if (provenance) provenance->clear();

  // Crossings cache by grid edge; crossings that land essentially on a grid
  // vertex (the SDF passes through a node) snap to that node and weld across
  // all of its edges, which keeps the mesh closed instead of spawning sliver
  // triangles around the node.
  std::map<std::pair<int, int>, int> edge_index;
  std::map<int, int> node_index;
  constexpr double kSnap = 1e-4;

  auto perturbed = [&](int vi) {
    const double f = grid.verts[vi].sdf;
    return f == 0.0 ? 1e-8 : f;
  };

  auto node_vertex = [&](int i) {
    auto it = node_index.find(i);
    if (it != node_index.end()) return it->second;
    const int idx = static_cast<int>(mesh.positions.size());
    mesh.positions.push_back(grid.deformed(i));
    mesh.colors.push_back(grid.verts[i].color);
    if (provenance) provenance->push_back({i, i, 0.0});
    node_index.emplace(i, idx);
    return idx;
  };

  auto crossing = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    const int i = key.first, j = key.second;
    const double fi = perturbed(i), fj = perturbed(j);
    const double tau = fi / (fi - fj);
    if (tau <= kSnap) return node_vertex(i);
    if (tau >= 1.0 - kSnap) return node_vertex(j);
    auto it = edge_index.find(key);
    if (it != edge_index.end()) return it->second;
    const Vec3 pos = (1.0 - tau) * grid.deformed(i) + tau * grid.deformed(j);
    const Vec3 col = (1.0 - tau) * grid.verts[i].color + tau * grid.verts[j].color;
    const int idx = static_cast<int>(mesh.positions.size());
    mesh.positions.push_back(pos);
    mesh.colors.push_back(col);
    if (provenance) provenance->push_back({i, j, tau});
    edge_index.emplace(key, idx);
    return idx;
  };

  auto emit = [&](int v0, int v1, int v2, const Vec3& out_dir) {
    const Vec3& a = mesh.positions[v0];
    const Vec3& b = mesh.positions[v1];
    const Vec3& c = mesh.positions[v2];
    const Vec3 normal = (b - a).cross(c - a);
    if (normal.norm() < 1e-12) return;  // degenerate sliver, drop
    if (normal.dot(out_dir) >= 0.0)
      mesh.faces.push_back({v0, v1, v2});
    else
      mesh.faces.push_back({v0, v2, v1});
  };

  for (const auto& t : grid.tets) {
    int inside[4], outside[4];
    int n_in = 0, n_out = 0;
    for (int k = 0; k < 4; ++k) {
      if (perturbed(t[k]) < 0.0)
        inside[n_in++] = t[k];
      else
        outside[n_out++] = t[k];
    }
    if (n_in == 0 || n_in == 4) continue;

    Vec3 in_centroid(0, 0, 0), out_centroid(0, 0, 0);
    for (int k = 0; k < n_in; ++k) in_centroid += grid.deformed(inside[k]);
    for (int k = 0; k < n_out; ++k) out_centroid += grid.deformed(outside[k]);
    const Vec3 out_dir = out_centroid / n_out - in_centroid / n_in;

    if (n_in == 1) {
      emit(crossing(inside[0], outside[0]), crossing(inside[0], outside[1]),
           crossing(inside[0], outside[2]), out_dir);
    } else if (n_in == 3) {
      emit(crossing(outside[0], inside[0]), crossing(outside[0], inside[1]),
           crossing(outside[0], inside[2]), out_dir);
    } else {
      // Two in, two out: the crossings form a planar quad; walk it so that
      // consecutive corners share a tet face.
      const int ac = crossing(inside[0], outside[0]);
      const int ad = crossing(inside[0], outside[1]);
      const int bd = crossing(inside[1], outside[1]);
      const int bc = crossing(inside[1], outside[0]);
      emit(ac, ad, bd, out_dir);
      emit(ac, bd, bc, out_dir);
    }
  }
  return mesh;
}

}  // namespace ov
