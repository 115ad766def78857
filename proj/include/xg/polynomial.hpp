#pragma once

#include <map>
#include <utility>
#include <vector>

namespace xg {

// Dense univariate polynomial sum_i c[i] t^i.
struct Poly1 {
  std::vector<double> c;

  int degree() const;  // -1 for the zero polynomial
  double eval(double t) const;
  void trim();  // drop trailing exact zeros
};

Poly1 operator+(const Poly1& a, const Poly1& b);
Poly1 operator*(const Poly1& a, const Poly1& b);
Poly1 operator*(double s, const Poly1& a);
Poly1 derivative(const Poly1& a);
// integral over [0,1], exact coefficient arithmetic
double integrate01(const Poly1& a);

// Sparse bivariate polynomial sum c_{ij} X^i Y^j.
struct Poly2 {
  std::map<std::pair<int, int>, double> c;

  static Poly2 constant(double v);
  static Poly2 monomial(int i, int j, double v = 1.0);
  int degree() const;  // total degree, -1 for zero
  bool is_zero() const;
  double eval(double X, double Y) const;
  void trim();
};

Poly2 operator+(const Poly2& a, const Poly2& b);
Poly2 operator-(const Poly2& a, const Poly2& b);
Poly2 operator*(const Poly2& a, const Poly2& b);
Poly2 operator*(double s, const Poly2& a);
Poly2 derivative_x(const Poly2& a);
Poly2 derivative_y(const Poly2& a);
// substitute X = x0 + xt t, Y = y0 + yt t
Poly1 compose_linear(const Poly2& a, double x0, double xt, double y0, double yt);

}  // namespace xg
