#pragma once

#include <array>
#include <iosfwd>
#include <vector>

namespace xg {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a);

// An edge of the triangulation.
//
// `vertices` is stored ascending and identifies the edge. The oriented
// tangent runs from `oriented[0]` to `oriented[1]`; on interior edges this is
// the ascending direction, on boundary edges it is flipped when needed so
// that `normal` (the clockwise rotation of `tangent`) points out of the
// domain. All trace/quadrature parameterizations use the oriented direction,
// so the two sides of a shared edge see the same parameterization.
struct Face {
  std::array<int, 2> vertices{-1, -1};
  std::array<int, 2> oriented{-1, -1};
  // Adjacent cells; cells[1] = -1 on boundary edges. cells[0] is the cell the
  // normal points out of (sign +1).
  std::array<int, 2> cells{-1, -1};
  Vec2 tangent;  // unit vector along oriented[0] -> oriented[1]
  Vec2 normal;   // unit vector, = (tangent.y, -tangent.x)
  double length = 0.0;
  bool boundary = false;
};

// Incidence of one edge with one cell: sign = +1 iff the edge normal points
// out of the cell.
struct CellFace {
  int face = -1;
  int sign = 0;
};

struct MeshComplex {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;  // vertex ids, ascending
  std::vector<Face> faces;                // sorted by (vertices[0], vertices[1])
  std::vector<std::array<CellFace, 3>> cell_faces;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  int n_boundary_faces() const;
  int n_interior_faces() const;

  double cell_area(int t) const;
  double cell_diameter(int t) const;
  Vec2 cell_centroid(int t) const;
  double h_max() const;
  // max over cells of diameter / inradius (shape regularity measure)
  double shape_ratio() const;
  // endpoints of the oriented tangent of face f
  std::array<Vec2, 2> face_endpoints(int f) const {
    return {vertices[faces[f].oriented[0]], vertices[faces[f].oriented[1]]};
  }
};

// Uniform triangulation of the unit square: divisions x divisions squares,
// each split along its bottom-left to top-right diagonal.
MeshComplex build_structured_mesh(int divisions);

// Splits every triangle into four congruent children via edge midpoints.
MeshComplex uniform_refine(const MeshComplex& mesh);

// Builds faces and incidence from vertices + cells (cells may be given in any
// vertex order; they are sorted). Used by the builders and the reader.
MeshComplex make_mesh(std::vector<Vec2> vertices,
                      std::vector<std::array<int, 3>> cells);

// Plain text format:
//   vertices N
//   x y            (N lines)
//   cells M
//   i j k          (M lines, 0-based ascending vertex ids)
void write_mesh(const MeshComplex& mesh, std::ostream& out);
MeshComplex read_mesh(std::istream& in);

}  // namespace xg
