#include "xg/polynomial.hpp"

#include <cmath>

namespace xg {

int Poly1::degree() const {
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) {
    if (c[i] != 0.0) return i;
  }
  return -1;
}

double Poly1::eval(double t) const {
  double v = 0;
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) v = v * t + c[i];
  return v;
}

void Poly1::trim() {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
}

Poly1 operator+(const Poly1& a, const Poly1& b) {
  Poly1 r;
  r.c.resize(std::max(a.c.size(), b.c.size()), 0.0);
  for (size_t i = 0; i < a.c.size(); ++i) r.c[i] += a.c[i];
  for (size_t i = 0; i < b.c.size(); ++i) r.c[i] += b.c[i];
  return r;
}

Poly1 operator*(const Poly1& a, const Poly1& b) {
  Poly1 r;
  if (a.c.empty() || b.c.empty()) return r;
  r.c.resize(a.c.size() + b.c.size() - 1, 0.0);
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

Poly1 operator*(double s, const Poly1& a) {
  Poly1 r = a;
  for (double& v : r.c) v *= s;
  return r;
}

Poly1 derivative(const Poly1& a) {
  Poly1 r;
  if (a.c.size() <= 1) return r;
  r.c.resize(a.c.size() - 1);
  for (size_t i = 1; i < a.c.size(); ++i) r.c[i - 1] = a.c[i] * i;
  return r;
}

double integrate01(const Poly1& a) {
  double s = 0;
  for (size_t i = 0; i < a.c.size(); ++i) s += a.c[i] / (i + 1);
  return s;
}

Poly2 Poly2::constant(double v) {
  Poly2 p;
  if (v != 0.0) p.c[{0, 0}] = v;
  return p;
}

Poly2 Poly2::monomial(int i, int j, double v) {
  Poly2 p;
  if (v != 0.0) p.c[{i, j}] = v;
  return p;
}

int Poly2::degree() const {
  int d = -1;
  for (const auto& [ij, v] : c) {
    if (v != 0.0) d = std::max(d, ij.first + ij.second);
  }
  return d;
}

bool Poly2::is_zero() const {
  for (const auto& [ij, v] : c) {
    if (v != 0.0) return false;
  }
  return true;
}

double Poly2::eval(double X, double Y) const {
  double s = 0;
  for (const auto& [ij, v] : c)
    s += v * std::pow(X, ij.first) * std::pow(Y, ij.second);
  return s;
}

void Poly2::trim() {
  for (auto it = c.begin(); it != c.end();) {
    it = (it->second == 0.0) ? c.erase(it) : std::next(it);
  }
}

Poly2 operator+(const Poly2& a, const Poly2& b) {
  Poly2 r = a;
  for (const auto& [ij, v] : b.c) r.c[ij] += v;
  return r;
}

Poly2 operator-(const Poly2& a, const Poly2& b) {
  Poly2 r = a;
  for (const auto& [ij, v] : b.c) r.c[ij] -= v;
  return r;
}

Poly2 operator*(const Poly2& a, const Poly2& b) {
  Poly2 r;
  for (const auto& [ij, v] : a.c)
    for (const auto& [kl, w] : b.c)
      r.c[{ij.first + kl.first, ij.second + kl.second}] += v * w;
  return r;
}

Poly2 operator*(double s, const Poly2& a) {
  Poly2 r = a;
  for (auto& [ij, v] : r.c) v *= s;
  return r;
}

Poly2 derivative_x(const Poly2& a) {
  Poly2 r;
  for (const auto& [ij, v] : a.c) {
    if (ij.first > 0) r.c[{ij.first - 1, ij.second}] += v * ij.first;
  }
  return r;
}

Poly2 derivative_y(const Poly2& a) {
  Poly2 r;
  for (const auto& [ij, v] : a.c) {
    if (ij.second > 0) r.c[{ij.first, ij.second - 1}] += v * ij.second;
  }
  return r;
}

Poly1 compose_linear(const Poly2& a, double x0, double xt, double y0,
                     double yt) {
  Poly1 result;
  Poly1 pxt{{x0, xt}}, pyt{{y0, yt}};
  for (const auto& [ij, v] : a.c) {
    Poly1 term{{v}};
    for (int i = 0; i < ij.first; ++i) term = term * pxt;
    for (int j = 0; j < ij.second; ++j) term = term * pyt;
    result = result + term;
  }
  result.trim();
  return result;
}

}  // namespace xg
