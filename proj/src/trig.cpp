#include "xg/trig.hpp"

#include <cmath>
#include <stdexcept>

namespace xg {

namespace {

double eval_factor(int f, double freq, double t) {
  switch (f) {
    case 0:
      return 1.0;
    case 1:
      return std::sin(freq * t);
    case 2:
      return std::cos(freq * t);
    default:
      throw std::logic_error("bad trig factor");
  }
}

// d/dt of T(freq * t) as (factor kind, coefficient multiplier)
void diff_factor(int f, double freq, int& fd, double& mult) {
  switch (f) {
    case 0:
      fd = 0;
      mult = 0.0;
      return;
    case 1:  // sin' = freq cos
      fd = 2;
      mult = freq;
      return;
    case 2:  // cos' = -freq sin
      fd = 1;
      mult = -freq;
      return;
    default:
      throw std::logic_error("bad trig factor");
  }
}

}  // namespace

double TrigScalar::eval(Vec2 p) const {
  double acc = 0;
  for (const TrigTerm& t : terms)
    acc += t.c * eval_factor(t.fx, t.ax, p.x) * eval_factor(t.fy, t.by, p.y);
  return acc;
}

TrigScalar trig_dx(const TrigScalar& s) {
  TrigScalar out;
  for (const TrigTerm& t : s.terms) {
    int fd;
    double mult;
    diff_factor(t.fx, t.ax, fd, mult);
    if (mult != 0.0) out.terms.push_back({t.c * mult, fd, t.ax, t.fy, t.by});
  }
  return out;
}

TrigScalar trig_dy(const TrigScalar& s) {
  TrigScalar out;
  for (const TrigTerm& t : s.terms) {
    int fd;
    double mult;
    diff_factor(t.fy, t.by, fd, mult);
    if (mult != 0.0) out.terms.push_back({t.c * mult, t.fx, t.ax, fd, t.by});
  }
  return out;
}

TrigScalar trig_sum(const TrigScalar& a, const TrigScalar& b) {
  TrigScalar out = a;
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  return out;
}

TrigScalar trig_scaled(double c, const TrigScalar& a) {
  TrigScalar out = a;
  for (TrigTerm& t : out.terms) t.c *= c;
  return out;
}

double TrigField::eval(int c, Vec2 p) const {
  if (c < 0 || c >= static_cast<int>(comp.size())) return 0.0;
  return comp[c].eval(p);
}

TrigField trig_zero(int k) {
  TrigField w;
  w.k = k;
  if (k >= 0 && k <= 2) w.comp.resize(form_components(k));
  return w;
}

TrigField trig_add(const TrigField& a, const TrigField& b) {
  if (a.k != b.k) throw std::logic_error("trig_add: degree mismatch");
  if (a.comp.empty()) return b;
  if (b.comp.empty()) return a;
  TrigField out = a;
  for (size_t i = 0; i < out.comp.size(); ++i)
    out.comp[i] = trig_sum(out.comp[i], b.comp[i]);
  return out;
}

TrigField trig_scale(double s, const TrigField& a) {
  TrigField out = a;
  for (TrigScalar& c : out.comp) c = trig_scaled(s, c);
  return out;
}

TrigField trig_d(const TrigField& w) {
  if (w.k >= 2 || w.k < 0) return trig_zero(std::min(w.k + 1, 3));
  TrigField out = trig_zero(w.k + 1);
  if (w.k == 0) {
    out.comp[0] = trig_dx(w.comp[0]);
    out.comp[1] = trig_dy(w.comp[0]);
  } else {  // d(A dx + B dy) = (B_x - A_y) dxdy
    out.comp[0] = trig_sum(trig_dx(w.comp[1]), trig_scaled(-1.0, trig_dy(w.comp[0])));
  }
  return out;
}

TrigField trig_star(const TrigField& w) {
  if (w.k < 0 || w.k > 2) return trig_zero(2 - w.k);  // identically zero
  TrigField out = trig_zero(2 - w.k);
  if (w.k == 0 || w.k == 2) {
    out.comp[0] = w.comp[0];
  } else {  // *(A dx + B dy) = -B dx + A dy
    out.comp[0] = trig_scaled(-1.0, w.comp[1]);
    out.comp[1] = w.comp[0];
  }
  return out;
}

TrigField trig_delta(const TrigField& w) {
  if (w.k <= 0 || w.k > 2) return trig_zero(w.k - 1);
  return trig_scale(-1.0, trig_star(trig_d(trig_star(w))));
}

ManufacturedSolution manufactured_solution(int k) {
  const double pi = M_PI;
  ManufacturedSolution ms;
  ms.k = k;
  ms.u = trig_zero(k);
  if (k == 0) {
    // u = cos(pi x) cos(pi y): Neumann-compatible, mean zero
    ms.u.comp[0].terms = {{1.0, 2, pi, 2, pi}};
  } else if (k == 1) {
    // u = sin(pi x) cos(pi y) dx: u.n = 0 and *du = 0 on the boundary
    ms.u.comp[0].terms = {{1.0, 1, pi, 2, pi}};
  } else if (k == 2) {
    // u = sin(pi x) sin(pi y) dxdy: *u = 0 on the boundary
    ms.u.comp[0].terms = {{1.0, 1, pi, 1, pi}};
  } else {
    throw std::logic_error("manufactured_solution: k must be 0, 1, or 2");
  }
  ms.sigma = trig_scale(-1.0, trig_delta(ms.u));
  ms.xi = trig_scale(-1.0, trig_d(ms.u));
  // f = d delta u + delta d u = -d sigma - delta xi
  ms.f = trig_add(trig_scale(-1.0, trig_d(ms.sigma)),
                  trig_scale(-1.0, trig_delta(ms.xi)));
  return ms;
}

double boundary_compatibility(const ManufacturedSolution& ms,
                              const MeshComplex& mesh, int samples_per_face) {
  TrigField su = trig_star(ms.u);
  TrigField sdu = trig_star(trig_d(ms.u));
  double worst = 0;
  for (int f = 0; f < mesh.n_faces(); ++f) {
    if (!mesh.faces[f].boundary) continue;
    auto ends = mesh.face_endpoints(f);
    Vec2 tang = mesh.faces[f].tangent;
    for (int s = 0; s < samples_per_face; ++s) {
      double t = (s + 0.5) / samples_per_face;
      Vec2 p = ends[0] + t * (ends[1] - ends[0]);
      // trace of a 0-form is its value; of a 1-form, its tangential part
      auto trace_mag = [&](const TrigField& w) {
        if (w.k == 0) return std::abs(w.eval(0, p));
        if (w.k == 1)
          return std::abs(w.eval(0, p) * tang.x + w.eval(1, p) * tang.y);
        return 0.0;  // 2-forms have no trace on edges
      };
      worst = std::max(worst, trace_mag(su));
      worst = std::max(worst, trace_mag(sdu));
    }
  }
  return worst;
}

}  // namespace xg
