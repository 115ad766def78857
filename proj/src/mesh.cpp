#include "xg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace xg {

double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

int MeshComplex::n_boundary_faces() const {
  int n = 0;
  for (const Face& f : faces) n += f.boundary ? 1 : 0;
  return n;
}

int MeshComplex::n_interior_faces() const {
  return n_faces() - n_boundary_faces();
}

double MeshComplex::cell_area(int t) const {
  Vec2 a = vertices[cells[t][0]], b = vertices[cells[t][1]],
       c = vertices[cells[t][2]];
  return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double MeshComplex::cell_diameter(int t) const {
  Vec2 a = vertices[cells[t][0]], b = vertices[cells[t][1]],
       c = vertices[cells[t][2]];
  return std::max({norm(b - a), norm(c - a), norm(c - b)});
}

Vec2 MeshComplex::cell_centroid(int t) const {
  Vec2 a = vertices[cells[t][0]], b = vertices[cells[t][1]],
       c = vertices[cells[t][2]];
  return (1.0 / 3.0) * (a + b + c);
}

double MeshComplex::h_max() const {
  double h = 0;
  for (int t = 0; t < n_cells(); ++t) h = std::max(h, cell_diameter(t));
  return h;
}

double MeshComplex::shape_ratio() const {
  double worst = 0;
  for (int t = 0; t < n_cells(); ++t) {
    Vec2 a = vertices[cells[t][0]], b = vertices[cells[t][1]],
         c = vertices[cells[t][2]];
    double per = norm(b - a) + norm(c - a) + norm(c - b);
    double inradius = 2.0 * cell_area(t) / per;
    worst = std::max(worst, cell_diameter(t) / inradius);
  }
  return worst;
}

MeshComplex make_mesh(std::vector<Vec2> vertices,
                      std::vector<std::array<int, 3>> cells) {
  MeshComplex m;
  m.vertices = std::move(vertices);
  m.cells = std::move(cells);
  for (auto& c : m.cells) std::sort(c.begin(), c.end());

  // gather unique edges and their adjacent cells
  std::map<std::array<int, 2>, std::vector<int>> edge_cells;
  for (int t = 0; t < m.n_cells(); ++t) {
    const auto& c = m.cells[t];
    for (auto [i, j] : {std::pair{c[0], c[1]}, {c[0], c[2]}, {c[1], c[2]}}) {
      edge_cells[{i, j}].push_back(t);
    }
  }

  std::map<std::array<int, 2>, int> edge_id;
  for (const auto& [key, adj] : edge_cells) {
    Face f;
    f.vertices = key;
    f.oriented = key;
    if (adj.size() > 2) throw std::runtime_error("non-manifold edge");
    f.boundary = adj.size() == 1;

    Vec2 a = m.vertices[key[0]], b = m.vertices[key[1]];
    f.length = norm(b - a);
    f.tangent = (1.0 / f.length) * (b - a);
    f.normal = {f.tangent.y, -f.tangent.x};
    Vec2 mid = 0.5 * (a + b);

    if (f.boundary) {
      f.cells = {adj[0], -1};
      // flip the orientation if the normal points into the cell, so that
      // boundary normals are always outward (and the incidence sign +1)
      if (dot(f.normal, mid - m.cell_centroid(adj[0])) < 0.0) {
        std::swap(f.oriented[0], f.oriented[1]);
        f.tangent = -1.0 * f.tangent;
        f.normal = -1.0 * f.normal;
      }
    } else {
      // the first cell is the one the (ascending-orientation) normal exits
      int t0 = adj[0], t1 = adj[1];
      if (dot(f.normal, mid - m.cell_centroid(t0)) > 0.0) {
        f.cells = {t0, t1};
      } else {
        f.cells = {t1, t0};
      }
    }
    edge_id[key] = m.n_faces();
    m.faces.push_back(f);
  }

  m.cell_faces.resize(m.n_cells());
  for (int t = 0; t < m.n_cells(); ++t) {
    const auto& c = m.cells[t];
    int slot = 0;
    for (auto [i, j] : {std::pair{c[0], c[1]}, {c[0], c[2]}, {c[1], c[2]}}) {
      int e = edge_id.at({i, j});
      int sign = (m.faces[e].cells[0] == t) ? 1 : -1;
      m.cell_faces[t][slot++] = {e, sign};
    }
  }
  return m;
}

MeshComplex build_structured_mesh(int divisions) {
  if (divisions < 1) throw std::invalid_argument("divisions must be >= 1");
  const int n = divisions;
  std::vector<Vec2> verts;
  verts.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> cells;
  cells.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // split along the bottom-left -> top-right diagonal
      cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return make_mesh(std::move(verts), std::move(cells));
}

MeshComplex uniform_refine(const MeshComplex& mesh) {
  std::vector<Vec2> verts = mesh.vertices;
  std::map<std::array<int, 2>, int> midpoint;
  for (const Face& f : mesh.faces) {
    Vec2 a = mesh.vertices[f.vertices[0]], b = mesh.vertices[f.vertices[1]];
    midpoint[f.vertices] = static_cast<int>(verts.size());
    verts.push_back(0.5 * (a + b));
  }
  std::vector<std::array<int, 3>> cells;
  cells.reserve(4 * mesh.n_cells());
  for (const auto& c : mesh.cells) {
    int m01 = midpoint.at({c[0], c[1]});
    int m02 = midpoint.at({c[0], c[2]});
    int m12 = midpoint.at({c[1], c[2]});
    cells.push_back({c[0], m01, m02});
    cells.push_back({c[1], m01, m12});
    cells.push_back({c[2], m02, m12});
    cells.push_back({m01, m02, m12});
  }
  return make_mesh(std::move(verts), std::move(cells));
}

void write_mesh(const MeshComplex& mesh, std::ostream& out) {
  out.precision(17);
  out << "vertices " << mesh.n_vertices() << "\n";
  for (const Vec2& v : mesh.vertices) out << v.x << " " << v.y << "\n";
  out << "cells " << mesh.n_cells() << "\n";
  for (const auto& c : mesh.cells)
    out << c[0] << " " << c[1] << " " << c[2] << "\n";
}

MeshComplex read_mesh(std::istream& in) {
  std::string tag;
  int nv = 0, nc = 0;
  if (!(in >> tag >> nv) || tag != "vertices" || nv < 3)
    throw std::runtime_error("bad mesh header: expected 'vertices N'");
  std::vector<Vec2> verts(nv);
  for (Vec2& v : verts) {
    if (!(in >> v.x >> v.y)) throw std::runtime_error("bad vertex line");
  }
  if (!(in >> tag >> nc) || tag != "cells" || nc < 1)
    throw std::runtime_error("bad mesh header: expected 'cells M'");
  std::vector<std::array<int, 3>> cells(nc);
  for (auto& c : cells) {
    if (!(in >> c[0] >> c[1] >> c[2])) throw std::runtime_error("bad cell line");
    for (int v : c) {
      if (v < 0 || v >= nv) throw std::runtime_error("cell vertex out of range");
    }
  }
  return make_mesh(std::move(verts), std::move(cells));
}

}  // namespace xg
