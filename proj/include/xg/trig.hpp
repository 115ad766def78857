#pragma once

#include <vector>

#include "xg/forms.hpp"
#include "xg/mesh.hpp"

namespace xg {

// One separable term c * Tx(ax * x) * Ty(by * y), where Tx/Ty is 1, sin, or
// cos. Closed under partial differentiation, so fields built from these terms
// admit exact exterior derivative, Hodge star, and coderivative.
struct TrigTerm {
  double c = 0.0;
  int fx = 0;  // 0: 1, 1: sin, 2: cos
  double ax = 0.0;
  int fy = 0;
  double by = 0.0;
};

struct TrigScalar {
  std::vector<TrigTerm> terms;
  double eval(Vec2 p) const;
  bool empty() const { return terms.empty(); }
};

TrigScalar trig_dx(const TrigScalar& s);
TrigScalar trig_dy(const TrigScalar& s);
TrigScalar trig_sum(const TrigScalar& a, const TrigScalar& b);
TrigScalar trig_scaled(double c, const TrigScalar& a);

// A k-form with trigonometric components; same component conventions as
// PolyForm (k=1 components against the global dx, dy frame). Degenerate form
// degrees hold no components and represent the zero form.
struct TrigField {
  int k = 0;
  std::vector<TrigScalar> comp;
  double eval(int c, Vec2 p) const;
};

TrigField trig_zero(int k);
TrigField trig_add(const TrigField& a, const TrigField& b);
TrigField trig_scale(double s, const TrigField& a);
TrigField trig_d(const TrigField& w);
TrigField trig_star(const TrigField& w);
TrigField trig_delta(const TrigField& w);  // -star d star; zero for k <= 0

// Reference problem with a smooth exact solution of the Hodge-Laplace
// equation (d delta + delta d) u = f on the unit square, chosen so that the
// boundary data imposed weakly by the methods (star traces of u and of du,
// normal fluxes) vanish identically.
struct ManufacturedSolution {
  int k = 0;
  TrigField u;
  TrigField sigma;  // -delta u
  TrigField xi;     // -d u
  TrigField f;      //  d delta u + delta d u
};

ManufacturedSolution manufactured_solution(int k);

// max over boundary sample points of the weakly imposed boundary data
// |tr * u| and |tr * du|; ~0 for the shipped cases
double boundary_compatibility(const ManufacturedSolution& ms,
                              const MeshComplex& mesh, int samples_per_face = 7);

}  // namespace xg
