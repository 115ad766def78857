#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "xg/mesh.hpp"

using namespace xg;

namespace {

// Entity counts for the structured meshes, checked against Euler's formula
// V - E + C = 1 for a triangulated disk and against direct enumeration
// (divisions d: (d+1)^2 vertices, 2d^2 cells, d(d+1) horizontal + d(d+1)
// vertical + d^2 diagonal edges, 4d boundary edges).
struct Counts {
  int divisions, vertices, cells, faces, boundary;
};
constexpr Counts kCounts[] = {
    {1, 4, 2, 5, 4},
    {2, 9, 8, 16, 8},
    {4, 25, 32, 56, 16},
    {8, 81, 128, 208, 32},
};

bool on_unit_square_boundary(Vec2 p) {
  auto edge = [](double v) { return v == 0.0 || v == 1.0; };
  return edge(p.x) || edge(p.y);
}

}  // namespace

TEST_CASE("structured mesh entity counts") {
  for (const auto& c : kCounts) {
    CAPTURE(c.divisions);
    MeshComplex m = build_structured_mesh(c.divisions);
    CHECK(m.n_vertices() == c.vertices);
    CHECK(m.n_cells() == c.cells);
    CHECK(m.n_faces() == c.faces);
    CHECK(m.n_boundary_faces() == c.boundary);
    CHECK(m.n_interior_faces() == c.faces - c.boundary);
    // Euler characteristic of a disk
    CHECK(m.n_vertices() - m.n_faces() + m.n_cells() == 1);
  }
}

TEST_CASE("structured mesh geometry") {
  for (int d : {1, 2, 3, 4}) {
    CAPTURE(d);
    MeshComplex m = build_structured_mesh(d);
    double total = 0.0;
    for (int t = 0; t < m.n_cells(); ++t) {
      CHECK(m.cell_area(t) == doctest::Approx(0.5 / (d * d)).epsilon(1e-14));
      total += m.cell_area(t);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.h_max() == doctest::Approx(std::sqrt(2.0) / d).epsilon(1e-15));
  }
}

TEST_CASE("face orientation invariants") {
  for (int d : {1, 2, 3, 4}) {
    CAPTURE(d);
    MeshComplex m = build_structured_mesh(d);

    for (int e = 0; e < m.n_faces(); ++e) {
      const Face& f = m.faces[e];
      CHECK(f.vertices[0] < f.vertices[1]);
      // oriented pair is the same edge
      std::array<int, 2> o = f.oriented;
      std::sort(o.begin(), o.end());
      CHECK(o == f.vertices);

      Vec2 a = m.vertices[f.oriented[0]], b = m.vertices[f.oriented[1]];
      CHECK(f.length == doctest::Approx(norm(b - a)).epsilon(1e-15));
      CHECK(norm(f.tangent) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(f.tangent.x == doctest::Approx((b.x - a.x) / f.length).epsilon(1e-14));
      CHECK(f.tangent.y == doctest::Approx((b.y - a.y) / f.length).epsilon(1e-14));
      // normal is the clockwise rotation of the tangent
      CHECK(f.normal.x == doctest::Approx(f.tangent.y).epsilon(1e-15));
      CHECK(f.normal.y == doctest::Approx(-f.tangent.x).epsilon(1e-15));

      Vec2 mid = 0.5 * (a + b);
      if (f.boundary) {
        CHECK(f.cells[1] == -1);
        // normal points out of the single adjacent cell
        CHECK(dot(f.normal, mid - m.cell_centroid(f.cells[0])) > 0.0);
        // interior edges keep the ascending orientation
      } else {
        CHECK(f.cells[1] >= 0);
        CHECK(f.oriented == f.vertices);
        CHECK(dot(f.normal, mid - m.cell_centroid(f.cells[0])) > 0.0);
        CHECK(dot(f.normal, mid - m.cell_centroid(f.cells[1])) < 0.0);
      }
    }

    // faces are sorted and unique
    for (int e = 0; e + 1 < m.n_faces(); ++e) {
      CHECK(m.faces[e].vertices < m.faces[e + 1].vertices);
    }

    // incidence signs: +1 on the first cell, opposite signs across interior
    // edges, +1 on boundary edges
    std::vector<int> sign_sum(m.n_faces(), 0), touch(m.n_faces(), 0);
    for (int t = 0; t < m.n_cells(); ++t) {
      for (const CellFace& cf : m.cell_faces[t]) {
        CHECK((cf.sign == 1 || cf.sign == -1));
        const Face& f = m.faces[cf.face];
        if (f.cells[0] == t) CHECK(cf.sign == 1);
        if (f.cells[1] == t) CHECK(cf.sign == -1);
        sign_sum[cf.face] += cf.sign;
        touch[cf.face] += 1;
      }
    }
    for (int e = 0; e < m.n_faces(); ++e) {
      if (m.faces[e].boundary) {
        CHECK(touch[e] == 1);
        CHECK(sign_sum[e] == 1);
      } else {
        CHECK(touch[e] == 2);
        CHECK(sign_sum[e] == 0);
      }
    }
  }
}

TEST_CASE("uniform refinement") {
  for (int d : {1, 2, 4}) {
    CAPTURE(d);
    MeshComplex m = build_structured_mesh(d);
    MeshComplex r = uniform_refine(m);
    MeshComplex s = build_structured_mesh(2 * d);
    CHECK(r.n_vertices() == s.n_vertices());
    CHECK(r.n_cells() == 4 * m.n_cells());
    CHECK(r.n_faces() == s.n_faces());
    CHECK(r.n_boundary_faces() == s.n_boundary_faces());
    // exact halving: all coordinates are dyadic rationals
    CHECK(r.h_max() == 0.5 * m.h_max());
    CHECK(r.shape_ratio() == m.shape_ratio());
    // children of boundary edges stay on the boundary and vice versa
    for (const Face& f : r.faces) {
      Vec2 mid = 0.5 * (r.vertices[f.vertices[0]] + r.vertices[f.vertices[1]]);
      bool geom = on_unit_square_boundary(r.vertices[f.vertices[0]]) &&
                  on_unit_square_boundary(r.vertices[f.vertices[1]]) &&
                  on_unit_square_boundary(mid);
      CHECK(f.boundary == geom);
    }
  }
}

TEST_CASE("refinement keeps triangle shapes") {
  // an unstructured mesh with a skewed interior vertex
  std::vector<Vec2> v = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.62, 0.41}};
  std::vector<std::array<int, 3>> c = {
      {0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {0, 3, 4}};
  MeshComplex m = make_mesh(v, c);
  CHECK(m.n_faces() == 8);
  CHECK(m.n_boundary_faces() == 4);
  MeshComplex r = uniform_refine(m);
  CHECK(r.n_cells() == 16);
  // coordinates here are not dyadic, so midpoint arithmetic rounds
  CHECK(r.shape_ratio() == doctest::Approx(m.shape_ratio()).epsilon(1e-14));
  CHECK(r.h_max() == doctest::Approx(0.5 * m.h_max()).epsilon(1e-14));
}

TEST_CASE("mesh text round trip") {
  MeshComplex m = build_structured_mesh(3);
  std::stringstream ss;
  write_mesh(m, ss);
  MeshComplex r = read_mesh(ss);
  REQUIRE(r.n_vertices() == m.n_vertices());
  REQUIRE(r.n_cells() == m.n_cells());
  for (int i = 0; i < m.n_vertices(); ++i) {
    CHECK(r.vertices[i].x == m.vertices[i].x);
    CHECK(r.vertices[i].y == m.vertices[i].y);
  }
  for (int t = 0; t < m.n_cells(); ++t) CHECK(r.cells[t] == m.cells[t]);
  REQUIRE(r.n_faces() == m.n_faces());
  for (int e = 0; e < m.n_faces(); ++e) {
    CHECK(r.faces[e].vertices == m.faces[e].vertices);
    CHECK(r.faces[e].oriented == m.faces[e].oriented);
    CHECK(r.faces[e].cells == m.faces[e].cells);
    CHECK(r.faces[e].boundary == m.faces[e].boundary);
  }
}
