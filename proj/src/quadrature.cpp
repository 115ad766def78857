#include "xg/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace xg {

std::vector<std::pair<double, double>> gauss_legendre_01(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_01: n >= 1");
  std::vector<std::pair<double, double>> rule(n);
  // Newton iteration on the Legendre polynomial P_n over [-1,1]
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule[i] = {0.5 * (x + 1.0), 0.5 * w};
  }
  return rule;
}

std::vector<QuadPoint> triangle_rule(Vec2 a, Vec2 b, Vec2 c, int degree) {
  if (degree < 0) degree = 0;
  // The Duffy map x = u(1-v), y = uv sends the unit square to the reference
  // triangle with Jacobian u, raising the u-degree of a degree-d integrand
  // to d+1; m Gauss points are exact through degree 2m-1.
  int m = (degree + 3) / 2;
  auto gl = gauss_legendre_01(m);
  double jac = std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  std::vector<QuadPoint> rule;
  rule.reserve(m * m);
  for (auto [u, wu] : gl) {
    for (auto [v, wv] : gl) {
      double X = u * (1.0 - v), Y = u * v;
      QuadPoint q;
      q.p = {a.x + X * (b.x - a.x) + Y * (c.x - a.x),
             a.y + X * (b.y - a.y) + Y * (c.y - a.y)};
      q.w = wu * wv * u * jac;
      rule.push_back(q);
    }
  }
  return rule;
}

}  // namespace xg
