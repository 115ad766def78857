#include "xg/assembly.hpp"

#include <stdexcept>

#include "xg/quadrature.hpp"

namespace xg {

Penalty penalty_coefficients(Regime regime, double rho, double h_edge) {
  double rh = rho * h_edge;
  Penalty p;
  switch (regime) {
    case Regime::one:
      p = {-rh, 1.0 / rh, rh, -1.0 / rh};
      break;
    case Regime::two:
      p = {-1.0 / rh, rh, 1.0 / rh, -rh};
      break;
    case Regime::hybrid1:
      p = {-rh, 1.0 / rh, 0.0, 0.0};
      p.c = 1.0 / (4.0 * p.b);
      p.d = 1.0 / (4.0 * p.a);
      break;
    case Regime::hybrid2:
      p = {-1.0 / rh, rh, 0.0, 0.0};
      p.c = 1.0 / (4.0 * p.b);
      p.d = 1.0 / (4.0 * p.a);
      break;
  }
  return p;
}

void FieldLayout::add(const std::string& name, int size) {
  if (size <= 0) return;
  names.push_back(name);
  sizes.push_back(size);
  offsets.push_back(total);
  total += size;
}

int FieldLayout::block(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

int FieldLayout::offset_of(const std::string& name) const {
  int b = block(name);
  if (b < 0) throw std::runtime_error("layout has no block " + name);
  return offsets[b];
}

int FieldLayout::size_of(const std::string& name) const {
  int b = block(name);
  if (b < 0) throw std::runtime_error("layout has no block " + name);
  return sizes[b];
}

Eigen::VectorXd FieldLayout::segment(const std::string& name,
                                     const Eigen::VectorXd& x) const {
  int b = block(name);
  if (b < 0) return Eigen::VectorXd();
  return x.segment(offsets[b], sizes[b]);
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

enum class Op { id, d, delta };

PolyForm apply_op(Op op, const PolyForm& w) {
  switch (op) {
    case Op::id:
      return w;
    case Op::d:
      return exterior_derivative(w);
    case Op::delta:
      return coderivative(w);
  }
  return w;
}

// (op_row basis_row_i, op_col basis_col_j) over all cells
void add_volume_term(Triplets& trip, const GlobalSpace& rowS, Op rowOp,
                     int rowOff, const GlobalSpace& colS, Op colOp, int colOff,
                     double factor) {
  if (rowS.absent() || colS.absent()) return;
  const MeshComplex& mesh = *rowS.mesh;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    auto co = cell_coords(mesh, t);
    std::vector<PolyForm> rb(rowS.cell_basis[t].size());
    for (size_t i = 0; i < rb.size(); ++i)
      rb[i] = apply_op(rowOp, rowS.cell_basis[t][i]);
    std::vector<PolyForm> cb(colS.cell_basis[t].size());
    for (size_t j = 0; j < cb.size(); ++j)
      cb[j] = apply_op(colOp, colS.cell_basis[t][j]);
    if (!rb.empty() && !cb.empty() && rb[0].k != cb[0].k) {
      if (rb[0].k > 2 || cb[0].k > 2 || rb[0].k < 0 || cb[0].k < 0) continue;
      throw std::logic_error("volume term: form degree mismatch");
    }
    for (size_t i = 0; i < rb.size(); ++i)
      for (size_t j = 0; j < cb.size(); ++j) {
        double v = factor * inner_product(rb[i], cb[j], co[0], co[1], co[2]);
        if (v != 0.0)
          trip.emplace_back(rowOff + rowS.cell_dofs[t][i],
                            colOff + colS.cell_dofs[t][j], v);
      }
  }
}

// weighted sum of basis traces on one face: sum_i coef_i tr(phi_i)
struct Combo {
  std::vector<std::pair<int, FaceForm>> parts;  // (global row/col id, form)
};

Combo starbar(Combo c) {
  for (auto& pr : c.parts) pr.second = face_star(pr.second);
  return c;
}

// trace combos of a broken space on a face, with the DG conventions baked in
struct FaceTraces {
  Combo jump_tr, avg_tr, jump_trs, avg_trs;
};

FaceTraces face_traces(const GlobalSpace& S, int offset, int face) {
  FaceTraces out;
  if (S.absent()) return out;
  const MeshComplex& mesh = *S.mesh;
  const Face& f = mesh.faces[face];
  auto side = [&](int cell, auto&& fn) {
    for (size_t i = 0; i < S.cell_dofs[cell].size(); ++i) {
      const PolyForm& b = S.cell_basis[cell][i];
      int id = offset + S.cell_dofs[cell][i];
      fn(id, trace_on_face(mesh, face, b),
         trace_on_face(mesh, face, hodge_star(b)));
    }
  };
  if (f.boundary) {
    side(f.cells[0], [&](int id, FaceForm tr, FaceForm trs) {
      if (tr.deg >= 0) out.avg_tr.parts.push_back({id, tr});
      if (trs.deg >= 0) out.jump_trs.parts.push_back({id, trs});
    });
    return out;  // [tr w] = 0 and avg(tr *w) = 0 on the boundary
  }
  double sign = 1.0;
  for (int cell : f.cells) {
    side(cell, [&](int id, FaceForm tr, FaceForm trs) {
      if (tr.deg >= 0) {
        out.jump_tr.parts.push_back({id, face_scale(sign, tr)});
        out.avg_tr.parts.push_back({id, face_scale(0.5, tr)});
      }
      if (trs.deg >= 0) {
        out.jump_trs.parts.push_back({id, face_scale(sign, trs)});
        out.avg_trs.parts.push_back({id, face_scale(0.5, trs)});
      }
    });
    sign = -1.0;
  }
  return out;
}

Combo check_combo(const FaceSpace& fs, int offset, int face) {
  Combo out;
  if (fs.absent() || fs.face_offset[face] < 0) return out;
  for (int i = 0; i < fs.per_face; ++i)
    out.parts.push_back({offset + fs.face_offset[face] + i, fs.basis(face, i)});
  return out;
}

void add_face_term(Triplets& trip, const Combo& row, const Combo& col,
                   double factor) {
  if (factor == 0.0) return;
  for (const auto& [ri, rf] : row.parts)
    for (const auto& [ci, cf] : col.parts) {
      if (rf.deg < 0 || cf.deg < 0) continue;
      double v = factor * face_inner(rf, cf);
      if (v != 0.0) trip.emplace_back(ri, ci, v);
    }
}

// squared L2 norm of a check-space block on each face, scaled
void add_check_mass(Triplets& trip, const FaceSpace& fs, int offset, int face,
                    double factor) {
  Combo c = check_combo(fs, offset, face);
  add_face_term(trip, c, c, factor);
}

// mean-value coupling for the 0-form proxy of u (k = 0 problems): the column
// <v, 1> and its transpose tie u to zero mean
void add_mean_rows(Triplets& trip, const GlobalSpace& S, int uOff, int meanRow,
                   bool starred) {
  const MeshComplex& mesh = *S.mesh;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    auto co = cell_coords(mesh, t);
    PolyForm one = zero_form(starred ? 2 : 0, cell_chart(mesh, t));
    one.comp[0] = Poly2::constant(1.0);
    for (size_t i = 0; i < S.cell_dofs[t].size(); ++i) {
      double v =
          inner_product(S.cell_basis[t][i], one, co[0], co[1], co[2]);
      if (v != 0.0) {
        trip.emplace_back(uOff + S.cell_dofs[t][i], meanRow, v);
        trip.emplace_back(meanRow, uOff + S.cell_dofs[t][i], v);
      }
    }
  }
}

void add_rhs(Eigen::VectorXd& rhs, const GlobalSpace& S, int offset,
             const TrigField& f, double factor, int quad_degree) {
  if (S.absent()) return;
  const MeshComplex& mesh = *S.mesh;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    auto co = cell_coords(mesh, t);
    for (size_t i = 0; i < S.cell_dofs[t].size(); ++i)
      rhs[offset + S.cell_dofs[t][i]] +=
          factor * trig_poly_inner_cell(f, S.cell_basis[t][i], co, quad_degree);
  }
}

int max_space_degree(const XgSpaces& sp) {
  int d = 0;
  for (const GlobalSpace* s : {&sp.Vm, &sp.V, &sp.Vp})
    if (!s->absent()) d = std::max(d, s->spec.degree);
  return d;
}

int rhs_quad_degree(int poly_degree) { return data_quadrature_degree(poly_degree); }

}  // namespace

int data_quadrature_degree(int max_poly_degree) {
  return std::max(2 * max_poly_degree + 6, 14);
}

double trig_poly_inner_cell(const TrigField& f, const PolyForm& v,
                            const std::array<Vec2, 3>& co, int quad_degree) {
  if (f.comp.empty() || v.k < 0 || v.k > 2) return 0.0;
  if (f.k != v.k) throw std::logic_error("rhs term: form degree mismatch");
  double acc = 0;
  for (const auto& qp : triangle_rule(co[0], co[1], co[2], quad_degree)) {
    double s = 0;
    for (int c = 0; c < form_components(v.k); ++c)
      s += f.eval(c, qp.p) * v.eval(c, qp.p);
    acc += qp.w * s;
  }
  return acc;
}

FaceForm polyfield_jump(const MeshComplex& mesh,
                        const std::vector<PolyForm>& field, int face,
                        bool star) {
  const Face& f = mesh.faces[face];
  auto tr = [&](int cell) {
    PolyForm w = field[cell];
    if (star) w = hodge_star(w);
    return trace_on_face(mesh, face, w);
  };
  if (f.boundary) {
    if (!star) return FaceForm{};
    return tr(f.cells[0]);
  }
  return face_add(tr(f.cells[0]), face_scale(-1.0, tr(f.cells[1])));
}

FaceForm polyfield_average(const MeshComplex& mesh,
                           const std::vector<PolyForm>& field, int face,
                           bool star) {
  const Face& f = mesh.faces[face];
  auto tr = [&](int cell) {
    PolyForm w = field[cell];
    if (star) w = hodge_star(w);
    return trace_on_face(mesh, face, w);
  };
  if (f.boundary) {
    if (star) return FaceForm{};
    return tr(f.cells[0]);
  }
  return face_scale(0.5, face_add(tr(f.cells[0]), tr(f.cells[1])));
}

namespace {

// ---------------------------------------------------------------------------
// broken-space formulations

enum class XgKind { seven, fourA, fourB, three };

AssembledSystem assemble_xg(XgKind kind, Method method, const MeshComplex& mesh,
                            const ProblemConfig& cfg, const TrigField& f) {
  AssembledSystem sys;
  sys.method = method;
  sys.config = cfg;
  sys.mesh = &mesh;
  // Regimes whose vanishing penalties drive star traces continuous need the
  // coderivative-oriented schedule; the others need the derivative-oriented
  // one. Mixing them loses the discrete stability that makes the penalty
  // limit converge.
  const bool dual_schedule =
      cfg.regime == Regime::two || cfg.regime == Regime::hybrid2;
  sys.spaces =
      make_xg_spaces(mesh, cfg.k, cfg.degree, cfg.trimmed, dual_schedule);
  const XgSpaces& sp = sys.spaces;

  FieldLayout& L = sys.layout;
  L.add("sigma", sp.Vm.dim);
  L.add("xi", sp.Vp.dim);
  L.add("u", sp.V.dim);
  if (kind == XgKind::seven || kind == XgKind::fourB)
    L.add("sigma_check", sp.cVm.dim);
  if (kind == XgKind::seven) L.add("u_check", sp.cV.dim);
  if (kind == XgKind::seven || kind == XgKind::fourA)
    L.add("xi_star_check", sp.cVps.dim);
  if (kind == XgKind::seven) L.add("u_star_check", sp.cVs.dim);
  if (cfg.k == 0) L.add("mean", 1);

  auto off = [&](const char* n) { return L.has(n) ? L.offset_of(n) : -1; };
  int oS = off("sigma"), oX = off("xi"), oU = off("u");
  int oSc = off("sigma_check"), oUc = off("u_check");
  int oXs = off("xi_star_check"), oUs = off("u_star_check");

  Triplets trip;
  bool primal_volume = (kind != XgKind::fourB);

  // volume terms
  if (oS >= 0) add_volume_term(trip, sp.Vm, Op::id, oS, sp.Vm, Op::id, oS, 1.0);
  if (oX >= 0) add_volume_term(trip, sp.Vp, Op::id, oX, sp.Vp, Op::id, oX, 1.0);
  if (primal_volume) {
    // (d tau, u) and (d sigma, v); (eta, du) and (xi, dv)
    if (oS >= 0) {
      add_volume_term(trip, sp.Vm, Op::d, oS, sp.V, Op::id, oU, 1.0);
      add_volume_term(trip, sp.V, Op::id, oU, sp.Vm, Op::d, oS, 1.0);
    }
    if (oX >= 0) {
      add_volume_term(trip, sp.Vp, Op::id, oX, sp.V, Op::d, oU, 1.0);
      add_volume_term(trip, sp.V, Op::d, oU, sp.Vp, Op::id, oX, 1.0);
    }
  } else {
    // (delta u, tau) and (sigma, delta v); (delta eta, u) and (delta xi, v)
    if (oS >= 0) {
      add_volume_term(trip, sp.Vm, Op::id, oS, sp.V, Op::delta, oU, 1.0);
      add_volume_term(trip, sp.V, Op::delta, oU, sp.Vm, Op::id, oS, 1.0);
    }
    if (oX >= 0) {
      add_volume_term(trip, sp.Vp, Op::delta, oX, sp.V, Op::id, oU, 1.0);
      add_volume_term(trip, sp.V, Op::id, oU, sp.Vp, Op::delta, oX, 1.0);
    }
  }

  // interface terms
  for (int fc = 0; fc < mesh.n_faces(); ++fc) {
    Penalty pen =
        penalty_coefficients(cfg.regime, cfg.rho, mesh.faces[fc].length);
    if (cfg.wrong_sign_penalty) pen.a = -pen.a;
    FaceTraces S = face_traces(sp.Vm, oS, fc);
    FaceTraces X = face_traces(sp.Vp, oX, fc);
    FaceTraces U = face_traces(sp.V, oU, fc);
    Combo cSc = oSc >= 0 ? check_combo(sp.cVm, oSc, fc) : Combo{};
    Combo cUc = oUc >= 0 ? check_combo(sp.cV, oUc, fc) : Combo{};
    Combo cXs = oXs >= 0 ? check_combo(sp.cVps, oXs, fc) : Combo{};
    Combo cUs = oUs >= 0 ? check_combo(sp.cVs, oUs, fc) : Combo{};

    if (kind == XgKind::seven) {
      // row tau
      add_face_term(trip, starbar(S.jump_tr), U.avg_trs, -1.0);
      add_face_term(trip, starbar(S.jump_tr), cUs, -1.0);
      // row eta
      add_face_term(trip, X.jump_trs, starbar(cUc), 1.0);
      add_face_term(trip, X.avg_trs, starbar(U.jump_tr), -1.0);
      // row v
      add_face_term(trip, U.jump_trs, starbar(cSc), 1.0);
      add_face_term(trip, U.avg_trs, starbar(S.jump_tr), -1.0);
      add_face_term(trip, starbar(U.jump_tr), X.avg_trs, -1.0);
      add_face_term(trip, starbar(U.jump_tr), cXs, -1.0);
      // scaled check rows
      add_face_term(trip, starbar(cSc), starbar(cSc), -1.0 / pen.a);
      add_face_term(trip, starbar(cSc), U.jump_trs, 1.0);
      add_face_term(trip, cXs, cXs, 1.0 / pen.b);
      add_face_term(trip, cXs, starbar(U.jump_tr), -1.0);
      add_face_term(trip, starbar(cUc), starbar(cUc), -1.0 / pen.c);
      add_face_term(trip, starbar(cUc), X.jump_trs, 1.0);
      add_face_term(trip, cUs, cUs, 1.0 / pen.d);
      add_face_term(trip, cUs, starbar(S.jump_tr), -1.0);
    } else if (kind == XgKind::fourA) {
      add_face_term(trip, starbar(S.jump_tr), U.avg_trs, -1.0);
      add_face_term(trip, S.jump_tr, S.jump_tr, -pen.d);
      add_face_term(trip, X.jump_trs, X.jump_trs, pen.c);
      add_face_term(trip, X.avg_trs, starbar(U.jump_tr), -1.0);
      add_face_term(trip, U.jump_trs, U.jump_trs, pen.a);
      add_face_term(trip, U.avg_trs, starbar(S.jump_tr), -1.0);
      add_face_term(trip, starbar(U.jump_tr), X.avg_trs, -1.0);
      add_face_term(trip, starbar(U.jump_tr), cXs, -1.0);
      add_face_term(trip, cXs, cXs, 1.0 / pen.b);
      add_face_term(trip, cXs, starbar(U.jump_tr), -1.0);
    } else if (kind == XgKind::fourB) {
      add_face_term(trip, starbar(S.avg_tr), U.jump_trs, 1.0);
      add_face_term(trip, S.jump_tr, S.jump_tr, -pen.d);
      add_face_term(trip, X.jump_trs, starbar(U.avg_tr), 1.0);
      add_face_term(trip, X.jump_trs, X.jump_trs, pen.c);
      add_face_term(trip, U.jump_trs, starbar(S.avg_tr), 1.0);
      add_face_term(trip, U.jump_trs, starbar(cSc), 1.0);
      add_face_term(trip, U.jump_tr, U.jump_tr, -pen.b);
      add_face_term(trip, starbar(U.avg_tr), X.jump_trs, 1.0);
      add_face_term(trip, starbar(cSc), starbar(cSc), -1.0 / pen.a);
      add_face_term(trip, starbar(cSc), U.jump_trs, 1.0);
    } else {  // three
      add_face_term(trip, starbar(S.jump_tr), U.avg_trs, -1.0);
      add_face_term(trip, S.jump_tr, S.jump_tr, -pen.d);
      add_face_term(trip, X.jump_trs, X.jump_trs, pen.c);
      add_face_term(trip, X.avg_trs, starbar(U.jump_tr), -1.0);
      add_face_term(trip, U.jump_trs, U.jump_trs, pen.a);
      add_face_term(trip, U.avg_trs, starbar(S.jump_tr), -1.0);
      add_face_term(trip, starbar(U.jump_tr), X.avg_trs, -1.0);
      add_face_term(trip, U.jump_tr, U.jump_tr, -pen.b);
    }
  }

  if (cfg.k == 0)
    add_mean_rows(trip, sp.V, oU, L.offset_of("mean"), /*starred=*/false);

  sys.rhs = Eigen::VectorXd::Zero(L.total);
  add_rhs(sys.rhs, sp.V, oU, f, -1.0, rhs_quad_degree(max_space_degree(sp)));

  sys.K.resize(L.total, L.total);
  sys.K.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

// ---------------------------------------------------------------------------
// conforming mixed method

AssembledSystem assemble_afw(const MeshComplex& mesh, const ProblemConfig& cfg,
                             const TrigField& f) {
  AssembledSystem sys;
  sys.method = Method::afw;
  sys.config = cfg;
  sys.mesh = &mesh;
  int k = cfg.k, r = cfg.degree;

  FormSpaceSpec sspec{-1, -1, false}, uspec{-1, -1, false};
  if (k == 0) {
    uspec = {0, r + 1, false};
  } else if (k == 1) {
    sspec = {0, r + 1, false};
    uspec = cfg.trimmed ? FormSpaceSpec{1, r + 1, true}
                        : FormSpaceSpec{1, r, false};
  } else {
    sspec = {1, r + 1, cfg.trimmed};
    uspec = {2, r, false};
  }
  if (!sspec.trimmed && sspec.k == 1 && sspec.degree < 1)
    throw std::runtime_error("no conforming complete 1-form space at this degree");
  if (!uspec.trimmed && uspec.k == 1 && uspec.degree < 1)
    throw std::runtime_error("no conforming complete 1-form space at this degree");

  if (sspec.k >= 0) sys.conf_sigma = make_conforming_space(mesh, sspec);
  sys.conf_u = make_conforming_space(mesh, uspec);

  FieldLayout& L = sys.layout;
  L.add("sigma", sys.conf_sigma.dim);
  L.add("u", sys.conf_u.dim);
  if (k == 0) L.add("mean", 1);
  int oS = L.has("sigma") ? L.offset_of("sigma") : -1;
  int oU = L.offset_of("u");

  Triplets trip;
  if (oS >= 0) {
    add_volume_term(trip, sys.conf_sigma, Op::id, oS, sys.conf_sigma, Op::id,
                    oS, 1.0);
    add_volume_term(trip, sys.conf_sigma, Op::d, oS, sys.conf_u, Op::id, oU,
                    1.0);
    add_volume_term(trip, sys.conf_u, Op::id, oU, sys.conf_sigma, Op::d, oS,
                    1.0);
  }
  // -(du, dv); vanishes identically for top forms
  add_volume_term(trip, sys.conf_u, Op::d, oU, sys.conf_u, Op::d, oU, -1.0);
  if (k == 0)
    add_mean_rows(trip, sys.conf_u, oU, L.offset_of("mean"), false);

  sys.rhs = Eigen::VectorXd::Zero(L.total);
  add_rhs(sys.rhs, sys.conf_u, oU, f, -1.0, rhs_quad_degree(uspec.degree + 1));

  sys.K.resize(L.total, L.total);
  sys.K.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

// ---------------------------------------------------------------------------
// conforming mixed method on the dual complex: xi = *phi, u = *psi with
// essential boundary conditions on the proxies

AssembledSystem assemble_afw_dual(const MeshComplex& mesh,
                                  const ProblemConfig& cfg,
                                  const TrigField& f) {
  AssembledSystem sys;
  sys.method = Method::afw_dual;
  sys.config = cfg;
  sys.mesh = &mesh;
  int k = cfg.k, r = cfg.degree;

  // mirrored pair on form degrees (n-k-1, n-k), zero-trace
  FormSpaceSpec pspec{-1, -1, false}, qspec{-1, -1, false};
  int jp = 2 - k - 1, jq = 2 - k;
  if (jp >= 0) {
    if (jp == 0)
      pspec = {0, r + 1, false};
    else
      pspec = {1, r + 1, cfg.trimmed};
  }
  if (jq == 0)
    qspec = {0, r + 1, false};
  else if (jq == 1)
    qspec = cfg.trimmed ? FormSpaceSpec{1, r + 1, true}
                        : FormSpaceSpec{1, r, false};
  else
    qspec = {2, r, false};
  if (!qspec.trimmed && qspec.k == 1 && qspec.degree < 1)
    throw std::runtime_error("no conforming complete 1-form space at this degree");

  if (pspec.k >= 0)
    sys.conf_phi = make_conforming_space(mesh, pspec, /*zero_trace=*/true);
  sys.conf_psi = make_conforming_space(mesh, qspec, /*zero_trace=*/jq < 2);

  FieldLayout& L = sys.layout;
  L.add("phi", sys.conf_phi.dim);
  L.add("psi", sys.conf_psi.dim);
  if (k == 0) L.add("mean", 1);
  int oP = L.has("phi") ? L.offset_of("phi") : -1;
  int oQ = L.offset_of("psi");

  // delta(*phi) = -(star-star sign on jp-forms) * (d phi), so the mixed
  // coupling (delta eta, u) becomes bsign * (d phi_eta, psi_u)
  double sp_sign = (jp == 1) ? -1.0 : 1.0;
  double bsign = -sp_sign;

  Triplets trip;
  if (oP >= 0) {
    add_volume_term(trip, sys.conf_phi, Op::id, oP, sys.conf_phi, Op::id, oP,
                    1.0);
    add_volume_term(trip, sys.conf_phi, Op::d, oP, sys.conf_psi, Op::id, oQ,
                    bsign);
    add_volume_term(trip, sys.conf_psi, Op::id, oQ, sys.conf_phi, Op::d, oP,
                    bsign);
  }
  // -(delta u, delta v) = -(d psi_u, d psi_v); vanishes for jq = 2
  add_volume_term(trip, sys.conf_psi, Op::d, oQ, sys.conf_psi, Op::d, oQ, -1.0);
  if (k == 0)
    add_mean_rows(trip, sys.conf_psi, oQ, L.offset_of("mean"), true);

  // rhs row v: -(f, *psi_v)
  sys.rhs = Eigen::VectorXd::Zero(L.total);
  {
    const GlobalSpace& S = sys.conf_psi;
    int qd = rhs_quad_degree(qspec.degree + 1);
    for (int t = 0; t < mesh.n_cells(); ++t) {
      auto co = cell_coords(mesh, t);
      for (size_t i = 0; i < S.cell_dofs[t].size(); ++i)
        sys.rhs[oQ + S.cell_dofs[t][i]] -= trig_poly_inner_cell(
            f, hodge_star(S.cell_basis[t][i]), co, qd);
    }
  }

  sys.K.resize(L.total, L.total);
  sys.K.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

}  // namespace

AssembledSystem assemble(Method method, const MeshComplex& mesh,
                         const ProblemConfig& cfg, const TrigField& f) {
  switch (method) {
    case Method::xg7:
      return assemble_xg(XgKind::seven, method, mesh, cfg, f);
    case Method::xg4a:
      return assemble_xg(XgKind::fourA, method, mesh, cfg, f);
    case Method::xg4b:
      return assemble_xg(XgKind::fourB, method, mesh, cfg, f);
    case Method::xg3:
      return assemble_xg(XgKind::three, method, mesh, cfg, f);
    case Method::afw:
      return assemble_afw(mesh, cfg, f);
    case Method::afw_dual:
      return assemble_afw_dual(mesh, cfg, f);
    case Method::hdg:
      throw std::runtime_error(
          "hybridized systems are assembled by the hybridization unit");
  }
  throw std::runtime_error("unknown method");
}

FieldExtract extract_fields(const AssembledSystem& sys,
                            const Eigen::VectorXd& x) {
  const MeshComplex& mesh = *sys.mesh;
  int k = sys.config.k;
  FieldExtract out;
  out.k = k;
  int n = mesh.n_cells();
  out.sigma.reserve(n);
  out.u.reserve(n);
  out.xi.reserve(n);

  auto zero_at = [&](int deg, int t) {
    return zero_form(deg, cell_chart(mesh, t));
  };

  if (sys.method == Method::afw) {
    Eigen::VectorXd cs = sys.layout.segment("sigma", x);
    Eigen::VectorXd cu = sys.layout.segment("u", x);
    for (int t = 0; t < n; ++t) {
      out.sigma.push_back(sys.conf_sigma.absent()
                              ? zero_at(k - 1, t)
                              : cell_field(sys.conf_sigma, cs, t));
      PolyForm u = cell_field(sys.conf_u, cu, t);
      out.u.push_back(u);
      out.xi.push_back(k < 2 ? form_scale(-1.0, exterior_derivative(u))
                             : zero_at(3, t));
    }
    return out;
  }
  if (sys.method == Method::afw_dual) {
    Eigen::VectorXd cp = sys.layout.segment("phi", x);
    Eigen::VectorXd cq = sys.layout.segment("psi", x);
    int m = 2 - k;  // proxy degree of u
    double star_sq = (m == 1) ? -1.0 : 1.0;
    for (int t = 0; t < n; ++t) {
      PolyForm psi = cell_field(sys.conf_psi, cq, t);
      PolyForm u = hodge_star(psi);
      out.u.push_back(u);
      // sigma = -delta u = (star star on m) * star d psi
      out.sigma.push_back(
          k >= 1 ? form_scale(star_sq, hodge_star(exterior_derivative(psi)))
                 : zero_at(-1, t));
      out.xi.push_back(sys.conf_phi.absent()
                           ? zero_at(k + 1, t)
                           : hodge_star(cell_field(sys.conf_phi, cp, t)));
    }
    return out;
  }

  Eigen::VectorXd cs = sys.layout.segment("sigma", x);
  Eigen::VectorXd cx = sys.layout.segment("xi", x);
  Eigen::VectorXd cu = sys.layout.segment("u", x);
  for (int t = 0; t < n; ++t) {
    out.sigma.push_back(sys.spaces.Vm.absent()
                            ? zero_at(k - 1, t)
                            : cell_field(sys.spaces.Vm, cs, t));
    out.xi.push_back(sys.spaces.Vp.absent() ? zero_at(k + 1, t)
                                            : cell_field(sys.spaces.Vp, cx, t));
    out.u.push_back(cell_field(sys.spaces.V, cu, t));
  }
  return out;
}

Eigen::SparseMatrix<double> norm_matrix(const AssembledSystem& sys) {
  const MeshComplex& mesh = *sys.mesh;
  const FieldLayout& L = sys.layout;
  Triplets trip;
  Regime reg = sys.config.regime;
  bool starred = (reg == Regime::two || reg == Regime::hybrid2);
  double rho = sys.config.rho;

  auto add_graph_block = [&](const GlobalSpace& S, const char* name,
                             bool with_derivative, bool with_jumps) {
    if (!L.has(name) || S.absent()) return;
    int o = L.offset_of(name);
    add_volume_term(trip, S, Op::id, o, S, Op::id, o, 1.0);
    if (with_derivative)
      add_volume_term(trip, S, starred ? Op::delta : Op::d, o, S,
                      starred ? Op::delta : Op::d, o, 1.0);
    if (with_jumps)
      for (int fc = 0; fc < mesh.n_faces(); ++fc) {
        const Face& face = mesh.faces[fc];
        if (!starred && face.boundary) continue;  // [tr w] = 0 there anyway
        FaceTraces T = face_traces(S, o, fc);
        const Combo& j = starred ? T.jump_trs : T.jump_tr;
        add_face_term(trip, j, j, 1.0 / (rho * face.length));
      }
  };

  // sigma and u carry graph + jump norms; xi is measured in L2 under the
  // first regime and in the starred graph norm under the second
  if (sys.method == Method::afw || sys.method == Method::afw_dual) {
    const GlobalSpace& s1 = sys.method == Method::afw ? sys.conf_sigma
                                                      : sys.conf_phi;
    const GlobalSpace& s2 = sys.method == Method::afw ? sys.conf_u
                                                      : sys.conf_psi;
    const char* n1 = sys.method == Method::afw ? "sigma" : "phi";
    const char* n2 = sys.method == Method::afw ? "u" : "psi";
    if (!s1.absent() && L.has(n1)) {
      int o = L.offset_of(n1);
      add_volume_term(trip, s1, Op::id, o, s1, Op::id, o, 1.0);
      add_volume_term(trip, s1, Op::d, o, s1, Op::d, o, 1.0);
    }
    int o2 = L.offset_of(n2);
    add_volume_term(trip, s2, Op::id, o2, s2, Op::id, o2, 1.0);
    add_volume_term(trip, s2, Op::d, o2, s2, Op::d, o2, 1.0);
  } else {
    add_graph_block(sys.spaces.Vm, "sigma", true, true);
    add_graph_block(sys.spaces.V, "u", true, true);
    add_graph_block(sys.spaces.Vp, "xi", starred, starred);
  }

  // check blocks: L2 on faces weighted by the reciprocal of the coefficient
  // that multiplies them in the formulation
  auto add_check_block = [&](const FaceSpace& fs, const char* name,
                             char which) {
    if (!L.has(name) || fs.absent()) return;
    int o = L.offset_of(name);
    for (int fc = 0; fc < mesh.n_faces(); ++fc) {
      Penalty p = penalty_coefficients(reg, rho, mesh.faces[fc].length);
      double coef = which == 'a' ? p.a : which == 'b' ? p.b
                                   : which == 'c'     ? p.c
                                                      : p.d;
      add_check_mass(trip, fs, o, fc, 1.0 / std::abs(coef));
    }
  };
  add_check_block(sys.spaces.cVm, "sigma_check", 'a');
  add_check_block(sys.spaces.cV, "u_check", 'c');
  add_check_block(sys.spaces.cVps, "xi_star_check", 'b');
  add_check_block(sys.spaces.cVs, "u_star_check", 'd');

  if (L.has("mean")) {
    int o = L.offset_of("mean");
    trip.emplace_back(o, o, 1.0);
  }

  Eigen::SparseMatrix<double> N(L.total, L.total);
  N.setFromTriplets(trip.begin(), trip.end());
  return N;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::xg7: return "xg7";
    case Method::xg4a: return "xg4a";
    case Method::xg4b: return "xg4b";
    case Method::xg3: return "xg3";
    case Method::afw: return "afw";
    case Method::afw_dual: return "afw_dual";
    case Method::hdg: return "hdg";
  }
  return "?";
}

bool method_from_name(const std::string& s, Method& out) {
  for (Method m : {Method::xg7, Method::xg4a, Method::xg4b, Method::xg3,
                   Method::afw, Method::afw_dual, Method::hdg})
    if (method_name(m) == s) {
      out = m;
      return true;
    }
  return false;
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::one: return "1";
    case Regime::two: return "2";
    case Regime::hybrid1: return "h1";
    case Regime::hybrid2: return "h2";
  }
  return "?";
}

bool regime_from_name(const std::string& s, Regime& out) {
  for (Regime r : {Regime::one, Regime::two, Regime::hybrid1, Regime::hybrid2})
    if (regime_name(r) == s) {
      out = r;
      return true;
    }
  return false;
}

}  // namespace xg
