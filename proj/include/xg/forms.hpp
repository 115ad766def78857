#pragma once

#include <vector>

#include "xg/mesh.hpp"
#include "xg/polynomial.hpp"

namespace xg {

// Local coordinate chart: X = (x - origin.x)/scale, Y = (y - origin.y)/scale.
// Per-cell charts keep coefficient magnitudes O(1) on fine meshes.
struct Chart {
  Vec2 origin{0.0, 0.0};
  double scale = 1.0;
};

// Polynomial differential form on the plane, degree k in {-1,0,1,2,3}.
// Components are polynomials in chart coordinates; the form basis is global:
//   k=0: comp[0]
//   k=1: comp[0] dx + comp[1] dy
//   k=2: comp[0] dx^dy
// k = -1 and k = 3 are the (identically zero) out-of-range degrees produced
// by the coderivative of a 0-form and the derivative of a 2-form.
struct PolyForm {
  int k = 0;
  Chart chart;
  std::vector<Poly2> comp;

  int degree() const;  // max component total degree, -1 if zero
  double eval(int component, Vec2 p) const;
};

int form_components(int k);
PolyForm zero_form(int k, Chart chart = {});
PolyForm form_add(const PolyForm& a, const PolyForm& b);  // same chart only
PolyForm form_scale(double s, const PolyForm& a);

// Exterior derivative d: k -> k+1.
PolyForm exterior_derivative(const PolyForm& w);
// Hodge star for the Euclidean metric: *1 = dx^dy, *dx = dy, *dy = -dx,
// *(dx^dy) = 1.
PolyForm hodge_star(const PolyForm& w);
// Coderivative delta = (-1)^k *d* on k-forms in two dimensions (so -*d* for
// k in {1,2}); returns the zero (-1)-form for k=0.
PolyForm coderivative(const PolyForm& w);
// Koszul contraction with the position field anchored at the chart origin.
PolyForm koszul(const PolyForm& w);

// L2 inner product over the triangle (a,b,c); exact for polynomial data.
double inner_product(const PolyForm& w, const PolyForm& v, Vec2 a, Vec2 b,
                     Vec2 c);

// Polynomial form on an edge, parameterized by t in [0,1] along the edge's
// oriented tangent: deg 0 means p(t), deg 1 means p(t) dt. deg = -1 marks the
// identically absent trace (e.g. the pullback of a 2-form to an edge).
struct FaceForm {
  int deg = -1;
  Poly1 p;
  double length = 1.0;

  static FaceForm absent() { return {}; }
};

// Pullback of w onto the segment q0 -> q1 (use the face's oriented endpoints).
FaceForm trace_to_face(const PolyForm& w, Vec2 q0, Vec2 q1);

FaceForm face_add(const FaceForm& a, const FaceForm& b);
FaceForm face_scale(double s, const FaceForm& a);
// Face Hodge star: 0-form p -> (p L) dt, 1-form q dt -> q / L. Involution
// with sign +1; isometry for the face inner product.
FaceForm face_star(const FaceForm& a);
// Tangential derivative along the edge: 0-form -> 1-form.
FaceForm face_derivative(const FaceForm& a);
// L2(E) inner product (forms of equal degree; absent forms pair to zero).
double face_inner(const FaceForm& a, const FaceForm& b);
// integral over E of a ^ b (degrees must sum to 1)
double face_wedge(const FaceForm& a, const FaceForm& b);

}  // namespace xg
