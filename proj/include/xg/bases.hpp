#pragma once

#include <vector>

#include "xg/forms.hpp"

namespace xg {

// Polynomial form space P_r Lambda^k (complete) or P-_r Lambda^k (trimmed)
// on a triangle. Trimmed spaces require r >= 1. Degenerate degrees (k outside
// [0,2] or r < 0) denote absent spaces of dimension zero.
//
// `rotated` selects the Hodge-star image of the family. Complete spaces and
// scalar-proxy spaces are star-closed, so the flag is meaningful only for
// trimmed 1-forms, where it yields the normal-continuity-flavoured family
// star(P-_r Lambda^1) (the 2D Raviart-Thomas orientation) instead of the
// tangential one.
struct FormSpaceSpec {
  int k = 0;
  int degree = 0;
  bool trimmed = false;
  bool rotated = false;
};

// Dimension on a triangle:
//   complete: C(r+2, r) * C(2, k)
//   trimmed:  C(r+2, r+k) * C(r+k-1, k)
int local_dim(const FormSpaceSpec& s);

// Basis in the given chart. Complete spaces use monomial components; trimmed
// spaces append the homogeneous Koszul complement kappa(X^a Y^b dX^dY),
// a+b = r-1, to the complete degree r-1 basis.
std::vector<PolyForm> local_basis(const FormSpaceSpec& s, Chart chart);

long binomial(int n, int k);

}  // namespace xg
