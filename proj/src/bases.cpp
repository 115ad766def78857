#include "xg/bases.hpp"

#include <stdexcept>

namespace xg {

long binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

int local_dim(const FormSpaceSpec& s) {
  if (s.k < 0 || s.k > 2 || s.degree < 0) return 0;
  if (!s.trimmed) {
    return static_cast<int>(binomial(s.degree + 2, s.degree) * binomial(2, s.k));
  }
  return static_cast<int>(binomial(s.degree + 2, s.degree + s.k) *
                          binomial(s.degree + s.k - 1, s.k));
}

std::vector<PolyForm> local_basis(const FormSpaceSpec& s, Chart chart) {
  std::vector<PolyForm> basis;
  if (local_dim(s) == 0) return basis;

  if (s.rotated) {
    if (s.k != 1)
      throw std::runtime_error("rotated spaces are defined for 1-forms only");
    FormSpaceSpec plain = s;
    plain.rotated = false;
    basis = local_basis(plain, chart);
    for (PolyForm& w : basis) w = hodge_star(w);
    return basis;
  }

  auto push_monomials = [&](int k, int max_deg) {
    for (int c = 0; c < form_components(k); ++c) {
      for (int d = 0; d <= max_deg; ++d) {
        for (int i = d; i >= 0; --i) {
          PolyForm w = zero_form(k, chart);
          w.comp[c] = Poly2::monomial(i, d - i);
          basis.push_back(w);
        }
      }
    }
  };

  if (!s.trimmed || s.k == 0) {
    push_monomials(s.k, s.degree);
    return basis;
  }
  if (s.k == 2) {
    // trimmed top forms coincide with complete forms one degree lower
    push_monomials(2, s.degree - 1);
    return basis;
  }
  // trimmed 1-forms: complete degree r-1 plus the homogeneous Koszul block
  push_monomials(1, s.degree - 1);
  for (int a = 0; a <= s.degree - 1; ++a) {
    PolyForm w = zero_form(2, chart);
    w.comp[0] = Poly2::monomial(a, s.degree - 1 - a);
    basis.push_back(koszul(w));
  }
  if (static_cast<int>(basis.size()) != local_dim(s))
    throw std::logic_error("trimmed basis size mismatch");
  return basis;
}

}  // namespace xg
