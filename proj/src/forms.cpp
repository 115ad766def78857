#include "xg/forms.hpp"

#include <cmath>
#include <stdexcept>

#include "xg/quadrature.hpp"

namespace xg {

int form_components(int k) {
  switch (k) {
    case 0:
    case 2:
      return 1;
    case 1:
      return 2;
    default:
      return 0;  // out-of-range degrees carry no components
  }
}

int PolyForm::degree() const {
  int d = -1;
  for (const auto& c : comp) d = std::max(d, c.degree());
  return d;
}

double PolyForm::eval(int component, Vec2 p) const {
  double X = (p.x - chart.origin.x) / chart.scale;
  double Y = (p.y - chart.origin.y) / chart.scale;
  return comp[component].eval(X, Y);
}

PolyForm zero_form(int k, Chart chart) {
  PolyForm w;
  w.k = k;
  w.chart = chart;
  w.comp.assign(form_components(k), Poly2{});
  return w;
}

PolyForm form_add(const PolyForm& a, const PolyForm& b) {
  if (a.k != b.k) throw std::invalid_argument("form_add: degree mismatch");
  if (a.comp.empty()) return a;
  if (a.chart.origin.x != b.chart.origin.x ||
      a.chart.origin.y != b.chart.origin.y || a.chart.scale != b.chart.scale)
    throw std::invalid_argument("form_add: chart mismatch");
  PolyForm r = a;
  for (size_t i = 0; i < r.comp.size(); ++i) r.comp[i] = r.comp[i] + b.comp[i];
  return r;
}

PolyForm form_scale(double s, const PolyForm& a) {
  PolyForm r = a;
  for (auto& c : r.comp) c = s * c;
  return r;
}

PolyForm exterior_derivative(const PolyForm& w) {
  const double inv_s = 1.0 / w.chart.scale;
  PolyForm r = zero_form(std::min(w.k + 1, 3), w.chart);
  switch (w.k) {
    case 0:
      r.comp[0] = inv_s * derivative_x(w.comp[0]);
      r.comp[1] = inv_s * derivative_y(w.comp[0]);
      break;
    case 1:
      r.comp[0] =
          inv_s * (derivative_x(w.comp[1]) - derivative_y(w.comp[0]));
      break;
    default:
      break;  // k in {-1, 2, 3}: result is the zero form
  }
  return r;
}

PolyForm hodge_star(const PolyForm& w) {
  PolyForm r;
  switch (w.k) {
    case 0:
      r = zero_form(2, w.chart);
      r.comp[0] = w.comp[0];
      break;
    case 1:
      r = zero_form(1, w.chart);
      r.comp[0] = -1.0 * w.comp[1];
      r.comp[1] = w.comp[0];
      break;
    case 2:
      r = zero_form(0, w.chart);
      r.comp[0] = w.comp[0];
      break;
    default:
      throw std::invalid_argument("hodge_star: degree out of range");
  }
  return r;
}

PolyForm coderivative(const PolyForm& w) {
  if (w.k <= 0) return zero_form(-1, w.chart);
  // delta = (-1)^k *d* on k-forms in R^2; both k=1 and k=2 give -*d*
  return form_scale(-1.0, hodge_star(exterior_derivative(hodge_star(w))));
}

PolyForm koszul(const PolyForm& w) {
  const double s = w.chart.scale;
  PolyForm r = zero_form(std::max(w.k - 1, -1), w.chart);
  Poly2 X = Poly2::monomial(1, 0), Y = Poly2::monomial(0, 1);
  switch (w.k) {
    case 1:
      // contraction of a dx + b dy with s(X,Y)
      r.comp[0] = s * (X * w.comp[0] + Y * w.comp[1]);
      break;
    case 2:
      // contraction of c dx^dy: c s (X dy - Y dx)
      r.comp[0] = -s * (Y * w.comp[0]);
      r.comp[1] = s * (X * w.comp[0]);
      break;
    default:
      break;  // 0-forms (and degenerate degrees) contract to zero
  }
  return r;
}

double inner_product(const PolyForm& w, const PolyForm& v, Vec2 a, Vec2 b,
                     Vec2 c) {
  if (w.k != v.k) throw std::invalid_argument("inner_product: degree mismatch");
  if (w.comp.empty()) return 0.0;
  int deg = std::max(w.degree(), 0) + std::max(v.degree(), 0);
  auto rule = triangle_rule(a, b, c, deg);
  double s = 0;
  for (const auto& q : rule) {
    double dotc = 0;
    for (int i = 0; i < form_components(w.k); ++i)
      dotc += w.eval(i, q.p) * v.eval(i, q.p);
    s += q.w * dotc;
  }
  return s;
}

FaceForm trace_to_face(const PolyForm& w, Vec2 q0, Vec2 q1) {
  Vec2 e = q1 - q0;
  FaceForm r;
  r.length = norm(e);
  const Chart& ch = w.chart;
  double x0 = (q0.x - ch.origin.x) / ch.scale, xt = e.x / ch.scale;
  double y0 = (q0.y - ch.origin.y) / ch.scale, yt = e.y / ch.scale;
  switch (w.k) {
    case 0:
      r.deg = 0;
      r.p = compose_linear(w.comp[0], x0, xt, y0, yt);
      break;
    case 1: {
      r.deg = 1;
      Poly1 px = compose_linear(w.comp[0], x0, xt, y0, yt);
      Poly1 py = compose_linear(w.comp[1], x0, xt, y0, yt);
      r.p = e.x * px + e.y * py;
      break;
    }
    default:
      r.deg = -1;  // pullback of a 2-form (or degenerate degree) to an edge
      break;
  }
  return r;
}

FaceForm face_add(const FaceForm& a, const FaceForm& b) {
  if (a.deg == -1) return b;
  if (b.deg == -1) return a;
  if (a.deg != b.deg || a.length != b.length)
    throw std::invalid_argument("face_add: incompatible face forms");
  FaceForm r = a;
  r.p = a.p + b.p;
  return r;
}

FaceForm face_scale(double s, const FaceForm& a) {
  FaceForm r = a;
  r.p = s * r.p;
  return r;
}

FaceForm face_star(const FaceForm& a) {
  FaceForm r = a;
  if (a.deg == 0) {
    r.deg = 1;
    r.p = a.length * a.p;
  } else if (a.deg == 1) {
    r.deg = 0;
    r.p = (1.0 / a.length) * a.p;
  }
  return r;  // absent stays absent
}

FaceForm face_derivative(const FaceForm& a) {
  if (a.deg != 0)
    throw std::invalid_argument("face_derivative: needs a 0-form");
  FaceForm r = a;
  r.deg = 1;
  r.p = derivative(a.p);
  return r;
}

double face_inner(const FaceForm& a, const FaceForm& b) {
  if (a.deg == -1 || b.deg == -1) return 0.0;
  if (a.deg != b.deg)
    throw std::invalid_argument("face_inner: degree mismatch");
  double moment = integrate01(a.p * b.p);
  return (a.deg == 0) ? a.length * moment : moment / a.length;
}

double face_wedge(const FaceForm& a, const FaceForm& b) {
  if (a.deg == -1 || b.deg == -1) return 0.0;
  if (a.deg + b.deg != 1)
    throw std::invalid_argument("face_wedge: degrees must sum to 1");
  return integrate01(a.p * b.p);
}

}  // namespace xg
