#pragma once

#include <utility>
#include <vector>

#include "xg/mesh.hpp"

namespace xg {

// Gauss-Legendre nodes/weights on [0,1]; exact for degree <= 2n-1.
std::vector<std::pair<double, double>> gauss_legendre_01(int n);

struct QuadPoint {
  Vec2 p;
  double w = 0.0;
};

// Quadrature on the triangle (a,b,c), exact for bivariate polynomials of
// total degree <= degree (tensor Gauss-Legendre through the Duffy map).
std::vector<QuadPoint> triangle_rule(Vec2 a, Vec2 b, Vec2 c, int degree);

}  // namespace xg
