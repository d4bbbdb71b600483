#include "ov/trimesh.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "ov/errors.hpp"
#include "binio.hpp"

namespace ov {

namespace {

struct EdgeKey {
  int a, b;
  bool operator<(const EdgeKey& o) const {
    return a != o.a ? a < o.a : b < o.b;
  }
};

EdgeKey edge_key(int u, int v) { return {std::min(u, v), std::max(u, v)}; }

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

MeshTopology analyze_topology(const TriMesh& mesh) {
  MeshTopology topo;
  topo.vertices = mesh.positions.size();
  topo.faces = mesh.faces.size();

  std::map<EdgeKey, int> edge_faces;
  UnionFind uf(mesh.positions.size());
  for (const auto& f : mesh.faces) {
    edge_faces[edge_key(f[0], f[1])]++;
    edge_faces[edge_key(f[1], f[2])]++;
    edge_faces[edge_key(f[2], f[0])]++;
    uf.unite(f[0], f[1]);
    uf.unite(f[1], f[2]);
  }
  topo.edges = edge_faces.size();
  for (const auto& [k, count] : edge_faces) {
    if (count == 1) topo.boundary_edges++;
    if (count > 2) topo.nonmanifold_edges++;
  }
  topo.euler_characteristic = static_cast<long>(topo.vertices) -
                              static_cast<long>(topo.edges) +
                              static_cast<long>(topo.faces);

  // Components over vertices that participate in faces; isolated vertices
  // don't count.
  std::vector<bool> used(mesh.positions.size(), false);
  for (const auto& f : mesh.faces)
    for (int v : f) used[v] = true;
  std::vector<int> roots;
  for (std::size_t v = 0; v < mesh.positions.size(); ++v) {
    if (!used[v]) continue;
    const int r = uf.find(static_cast<int>(v));
    if (std::find(roots.begin(), roots.end(), r) == roots.end())
      roots.push_back(r);
  }
  topo.components = static_cast<int>(roots.size());
  return topo;
}

std::vector<long> component_euler_characteristics(const TriMesh& mesh) {
  UnionFind uf(mesh.positions.size());
  for (const auto& f : mesh.faces) {
    uf.unite(f[0], f[1]);
    uf.unite(f[1], f[2]);
  }
  std::map<int, long> v_count, f_count;
  std::map<int, std::map<EdgeKey, int>> edges;
  std::vector<bool> used(mesh.positions.size(), false);
  for (const auto& f : mesh.faces) {
    const int root = uf.find(f[0]);
    f_count[root]++;
    edges[root][edge_key(f[0], f[1])] = 1;
    edges[root][edge_key(f[1], f[2])] = 1;
    edges[root][edge_key(f[2], f[0])] = 1;
    for (int v : f) used[v] = true;
  }
  for (std::size_t v = 0; v < mesh.positions.size(); ++v)
    if (used[v]) v_count[uf.find(static_cast<int>(v))]++;

  std::vector<long> out;
  for (const auto& [root, nv] : v_count) {
    const long ne = static_cast<long>(edges[root].size());
    const long nf = f_count[root];
    out.push_back(nv - ne + nf);
  }
  return out;
}

double mesh_area(const TriMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.positions[f[0]];
    const Vec3& b = mesh.positions[f[1]];
    const Vec3& c = mesh.positions[f[2]];
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

double signed_volume(const TriMesh& mesh) {
  double vol = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.positions[f[0]];
    const Vec3& b = mesh.positions[f[1]];
    const Vec3& c = mesh.positions[f[2]];
    vol += a.dot(b.cross(c)) / 6.0;
  }
  return vol;
}

namespace {

void write_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.precision(17);
  for (std::size_t i = 0; i < mesh.positions.size(); ++i) {
    const Vec3& p = mesh.positions[i];
    const Vec3 c = i < mesh.colors.size() ? mesh.colors[i] : Vec3(0.5, 0.5, 0.5);
    os << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << c.x() << ' '
       << c.y() << ' ' << c.z() << '\n';
  }
  for (const auto& f : mesh.faces)
    os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!os) throw IoError("write failed: " + path);
}

void write_ply(const TriMesh& mesh, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << mesh.positions.size() << "\n"
         << "property double x\nproperty double y\nproperty double z\n"
         << "property double red\nproperty double green\nproperty double blue\n"
         << "element face " << mesh.faces.size() << "\n"
         << "property list uchar int vertex_indices\nend_header\n";
  os << header.str();
  for (std::size_t i = 0; i < mesh.positions.size(); ++i) {
    const Vec3& p = mesh.positions[i];
    const Vec3 c = i < mesh.colors.size() ? mesh.colors[i] : Vec3(0.5, 0.5, 0.5);
    for (double v : {p.x(), p.y(), p.z(), c.x(), c.y(), c.z()})
      binio::write<double>(os, v);
  }
  for (const auto& f : mesh.faces) {
    binio::write<std::uint8_t>(os, 3);
    for (int idx : f) binio::write<std::int32_t>(os, idx);
  }
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace

void export_mesh(const TriMesh& mesh, const std::string& path,
                 MeshFormat format) {
  switch (format) {
    case MeshFormat::kObj:
      write_obj(mesh, path);
      break;
    case MeshFormat::kPlyBinary:
      write_ply(mesh, path);
      break;
  }
}

TriMesh import_ply(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);

  std::string line;
  std::size_t n_vertices = 0, n_faces = 0;
  std::vector<std::string> vertex_props;
  bool in_vertex_element = false;
  if (!std::getline(is, line) || line != "ply")
    throw IoError("not a PLY file: " + path);
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "end_header") break;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "binary_little_endian")
        throw IoError("unsupported PLY format: " + fmt);
    } else if (tok == "element") {
      std::string name;
      std::size_t count;
      ls >> name >> count;
      in_vertex_element = name == "vertex";
      if (name == "vertex") n_vertices = count;
      if (name == "face") n_faces = count;
    } else if (tok == "property" && in_vertex_element) {
      std::string type, name;
      ls >> type >> name;
      if (type != "double")
        throw IoError("expected double vertex properties, got " + type);
      vertex_props.push_back(name);
    }
  }
  if (vertex_props.size() != 6)
    throw IoError("expected 6 vertex properties (xyz + rgb)");

  TriMesh mesh;
  mesh.positions.resize(n_vertices);
  mesh.colors.resize(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    double vals[6];
    for (double& v : vals) v = binio::read<double>(is);
    mesh.positions[i] = Vec3(vals[0], vals[1], vals[2]);
    mesh.colors[i] = Vec3(vals[3], vals[4], vals[5]);
  }
  mesh.faces.resize(n_faces);
  for (std::size_t i = 0; i < n_faces; ++i) {
    const auto count = binio::read<std::uint8_t>(is);
    if (count != 3) throw IoError("non-triangle face in PLY");
    for (int k = 0; k < 3; ++k)
      mesh.faces[i][k] = binio::read<std::int32_t>(is);
  }
  return mesh;
}

}  // namespace ov
