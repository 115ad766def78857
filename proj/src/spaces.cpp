#include "xg/spaces.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <stdexcept>

#include "xg/quadrature.hpp"

namespace xg {

std::array<Vec2, 3> cell_coords(const MeshComplex& mesh, int t) {
  return {mesh.vertices[mesh.cells[t][0]], mesh.vertices[mesh.cells[t][1]],
          mesh.vertices[mesh.cells[t][2]]};
}

Chart cell_chart(const MeshComplex& mesh, int t) {
  Chart ch;
  ch.origin = mesh.cell_centroid(t);
  ch.scale = mesh.cell_diameter(t);
  return ch;
}

namespace {

// counts and moment spaces of the canonical degree-of-freedom sets
struct DofLayout {
  int per_vertex = 0;
  int per_edge = 0;
  FormSpaceSpec edge_moments{-1, -1, false};      // form degree on the edge
  FormSpaceSpec interior_moments{-1, -1, false};  // moment space on the cell
  int per_cell = 0;
};

DofLayout dof_layout(FormSpaceSpec spec) {
  DofLayout out;
  if (spec.k == 0) {
    int r = spec.degree;
    if (r < 1) throw std::runtime_error("scalar conforming space needs r>=1");
    out.per_vertex = 1;
    out.per_edge = r - 1;
    out.interior_moments = {2, r - 3, false};
  } else if (spec.k == 1) {
    int r = spec.degree;
    if (spec.trimmed) {
      if (r < 1) throw std::runtime_error("trimmed 1-form space needs r>=1");
      out.per_edge = r;
      out.interior_moments = {1, r - 2, false};
    } else {
      if (r < 1) throw std::runtime_error("complete conforming 1-form space needs r>=1");
      out.per_edge = r + 1;
      out.interior_moments = {1, r - 1, true};
    }
  } else if (spec.k == 2) {
    int rr = spec.trimmed ? spec.degree - 1 : spec.degree;
    out.interior_moments = {0, rr, false};
  } else {
    throw std::runtime_error("conforming space: form degree out of range");
  }
  out.per_cell = local_dim(out.interior_moments);
  return out;
}

double integrate_chart_poly(const Poly2& p, const Chart& ch,
                            const std::array<Vec2, 3>& co) {
  PolyForm f;
  f.k = 0;
  f.chart = ch;
  f.comp = {p};
  double acc = 0;
  for (const auto& qp : triangle_rule(co[0], co[1], co[2], p.degree()))
    acc += qp.w * f.eval(0, qp.p);
  return acc;
}

// integral over the cell of w ^ mu divided by the cell area
double interior_moment(const MeshComplex& mesh, int t, const PolyForm& w,
                       const PolyForm& mu) {
  if (w.chart.origin.x != mu.chart.origin.x ||
      w.chart.origin.y != mu.chart.origin.y || w.chart.scale != mu.chart.scale)
    throw std::runtime_error("interior moment: chart mismatch");
  Poly2 integrand;
  if (w.k == 0)
    integrand = w.comp[0] * mu.comp[0];
  else if (w.k == 1)
    integrand = w.comp[0] * mu.comp[1] + (-1.0) * (w.comp[1] * mu.comp[0]);
  else if (w.k == 2)
    integrand = w.comp[0] * mu.comp[0];
  else
    throw std::runtime_error("interior moment: bad form degree");
  auto co = cell_coords(mesh, t);
  return integrate_chart_poly(integrand, w.chart, co) / mesh.cell_area(t);
}

Poly1 monomial1(int i) {
  Poly1 p;
  p.c.assign(i + 1, 0.0);
  p.c[i] = 1.0;
  return p;
}

double edge_moment(const MeshComplex& mesh, int f, const PolyForm& w, int i) {
  auto ends = mesh.face_endpoints(f);
  FaceForm tr = trace_to_face(w, ends[0], ends[1]);
  if (tr.deg < 0) return 0.0;
  Poly1 prod = tr.p * monomial1(i);
  double val = integrate01(prod);
  if (w.k == 1) val /= mesh.faces[f].length;
  return val;
}

}  // namespace

double apply_dof_functional(const GlobalSpace& space, int dof,
                            const PolyForm& w, int cell) {
  const DofDescriptor& d = space.dofs.at(dof);
  const MeshComplex& mesh = *space.mesh;
  switch (d.kind) {
    case 0:
      return w.eval(0, mesh.vertices[d.entity]);
    case 1:
      return edge_moment(mesh, d.entity, w, d.index);
    case 2: {
      DofLayout lay = dof_layout(space.spec);
      std::vector<PolyForm> mus =
          local_basis(lay.interior_moments, cell_chart(mesh, d.entity));
      if (d.entity != cell)
        throw std::runtime_error("interior functional applied on wrong cell");
      return interior_moment(mesh, d.entity, w, mus[d.index]);
    }
    default:
      throw std::runtime_error("unknown dof kind");
  }
}

GlobalSpace make_broken_space(const MeshComplex& mesh, FormSpaceSpec spec) {
  GlobalSpace out;
  out.mesh = &mesh;
  out.spec = spec;
  out.continuity = Continuity::broken;
  int nd = local_dim(spec);
  out.cell_dofs.resize(mesh.n_cells());
  out.cell_basis.resize(mesh.n_cells());
  int next = 0;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    out.cell_basis[t] = local_basis(spec, cell_chart(mesh, t));
    out.cell_dofs[t].resize(nd);
    for (int i = 0; i < nd; ++i) out.cell_dofs[t][i] = next++;
  }
  out.dim = next;
  return out;
}

GlobalSpace make_conforming_space(const MeshComplex& mesh, FormSpaceSpec spec,
                                  bool zero_trace) {
  if (spec.rotated)
    throw std::runtime_error(
        "conforming assembly of rotated families is not supported; star a "
        "conforming space of the plain family instead");
  GlobalSpace out;
  out.mesh = &mesh;
  out.spec = spec;
  out.continuity = Continuity::conforming;
  out.zero_trace = zero_trace;
  out.cell_dofs.resize(mesh.n_cells());
  out.cell_basis.resize(mesh.n_cells());
  if (local_dim(spec) == 0) return out;

  DofLayout lay = dof_layout(spec);

  std::vector<bool> vertex_on_boundary(mesh.n_vertices(), false);
  for (const Face& f : mesh.faces)
    if (f.boundary) {
      vertex_on_boundary[f.vertices[0]] = true;
      vertex_on_boundary[f.vertices[1]] = true;
    }

  // global numbering: vertices, then edges, then cell interiors
  std::vector<int> vertex_dof(mesh.n_vertices(), -1);
  std::vector<int> edge_dof(mesh.n_faces(), -1);
  std::vector<int> cell_dof(mesh.n_cells(), -1);
  int next = 0;
  if (lay.per_vertex > 0)
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      if (zero_trace && vertex_on_boundary[v]) continue;
      vertex_dof[v] = next;
      next += lay.per_vertex;
      out.dofs.push_back({0, v, 0});
    }
  if (lay.per_edge > 0)
    for (int f = 0; f < mesh.n_faces(); ++f) {
      if (zero_trace && mesh.faces[f].boundary) continue;
      edge_dof[f] = next;
      next += lay.per_edge;
      for (int i = 0; i < lay.per_edge; ++i) out.dofs.push_back({1, f, i});
    }
  if (lay.per_cell > 0)
    for (int t = 0; t < mesh.n_cells(); ++t) {
      cell_dof[t] = next;
      next += lay.per_cell;
      for (int i = 0; i < lay.per_cell; ++i) out.dofs.push_back({2, t, i});
    }
  out.dim = next;

  // local dual bases per cell
  for (int t = 0; t < mesh.n_cells(); ++t) {
    Chart ch = cell_chart(mesh, t);
    std::vector<PolyForm> raw = local_basis(spec, ch);
    int n = static_cast<int>(raw.size());

    // local functional list in canonical order, remembering global ids
    struct LocalDof {
      int kind;
      int entity;
      int index;
      int global;  // -1 when dropped by the boundary condition
    };
    std::vector<LocalDof> locals;
    if (lay.per_vertex > 0)
      for (int v : mesh.cells[t])
        locals.push_back({0, v, 0, vertex_dof[v]});
    if (lay.per_edge > 0)
      for (const CellFace& cf : mesh.cell_faces[t])
        for (int i = 0; i < lay.per_edge; ++i)
          locals.push_back({1, cf.face, i,
                            edge_dof[cf.face] < 0 ? -1 : edge_dof[cf.face] + i});
    if (lay.per_cell > 0)
      for (int i = 0; i < lay.per_cell; ++i)
        locals.push_back({2, t, i, cell_dof[t] + i});
    if (static_cast<int>(locals.size()) != n)
      throw std::runtime_error("dof layout does not match local dimension");

    std::vector<PolyForm> mus;
    if (lay.per_cell > 0) mus = local_basis(lay.interior_moments, ch);

    Eigen::MatrixXd D(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const LocalDof& ld = locals[i];
        double v = 0;
        if (ld.kind == 0)
          v = raw[j].eval(0, mesh.vertices[ld.entity]);
        else if (ld.kind == 1)
          v = edge_moment(mesh, ld.entity, raw[j], ld.index);
        else
          v = interior_moment(mesh, t, raw[j], mus[ld.index]);
        D(i, j) = v;
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
    if (!lu.isInvertible())
      throw std::runtime_error("degrees of freedom are not unisolvent");
    Eigen::MatrixXd Dinv = lu.inverse();

    for (int i = 0; i < n; ++i) {
      if (locals[i].global < 0) continue;
      PolyForm phi = zero_form(spec.k, ch);
      for (int j = 0; j < n; ++j)
        if (Dinv(j, i) != 0.0)
          phi = form_add(phi, form_scale(Dinv(j, i), raw[j]));
      out.cell_dofs[t].push_back(locals[i].global);
      out.cell_basis[t].push_back(phi);
    }
  }
  return out;
}

PolyForm cell_field(const GlobalSpace& space, const Eigen::VectorXd& coeffs,
                    int cell) {
  PolyForm w = zero_form(space.spec.k, cell_chart(*space.mesh, cell));
  for (size_t i = 0; i < space.cell_dofs[cell].size(); ++i) {
    double c = coeffs[space.cell_dofs[cell][i]];
    if (c != 0.0) w = form_add(w, form_scale(c, space.cell_basis[cell][i]));
  }
  return w;
}

FaceForm trace_on_face(const MeshComplex& mesh, int face, const PolyForm& w) {
  auto ends = mesh.face_endpoints(face);
  FaceForm tr = trace_to_face(w, ends[0], ends[1]);
  if (tr.deg >= 0) tr.length = mesh.faces[face].length;
  return tr;
}

FaceForm side_trace(const GlobalSpace& space, const Eigen::VectorXd& coeffs,
                    int face, int cell, bool star) {
  PolyForm w = cell_field(space, coeffs, cell);
  if (star) w = hodge_star(w);
  return trace_on_face(*space.mesh, face, w);
}

FaceForm field_jump(const GlobalSpace& space, const Eigen::VectorXd& coeffs,
                    int face, bool star) {
  const Face& f = space.mesh->faces[face];
  if (f.boundary) {
    if (!star) return FaceForm{};  // [tr w] = 0 on the boundary
    return side_trace(space, coeffs, face, f.cells[0], true);
  }
  FaceForm plus = side_trace(space, coeffs, face, f.cells[0], star);
  FaceForm minus = side_trace(space, coeffs, face, f.cells[1], star);
  return face_add(plus, face_scale(-1.0, minus));
}

FaceForm field_average(const GlobalSpace& space, const Eigen::VectorXd& coeffs,
                       int face, bool star) {
  const Face& f = space.mesh->faces[face];
  if (f.boundary) {
    if (star) return FaceForm{};  // avg(tr *w) = 0 on the boundary
    return side_trace(space, coeffs, face, f.cells[0], false);
  }
  FaceForm plus = side_trace(space, coeffs, face, f.cells[0], star);
  FaceForm minus = side_trace(space, coeffs, face, f.cells[1], star);
  return face_scale(0.5, face_add(plus, minus));
}

Eigen::VectorXd conforming_average(const GlobalSpace& broken,
                                   const Eigen::VectorXd& coeffs,
                                   const GlobalSpace& conforming) {
  if (broken.mesh != conforming.mesh ||
      broken.spec.k != conforming.spec.k ||
      broken.spec.degree != conforming.spec.degree ||
      broken.spec.trimmed != conforming.spec.trimmed ||
      conforming.continuity != Continuity::conforming)
    throw std::runtime_error("conforming_average: incompatible spaces");
  const MeshComplex& mesh = *broken.mesh;

  std::vector<std::vector<int>> vertex_cells(mesh.n_vertices());
  for (int t = 0; t < mesh.n_cells(); ++t)
    for (int v : mesh.cells[t]) vertex_cells[v].push_back(t);

  std::vector<PolyForm> fields;
  fields.reserve(mesh.n_cells());
  for (int t = 0; t < mesh.n_cells(); ++t)
    fields.push_back(cell_field(broken, coeffs, t));

  Eigen::VectorXd out = Eigen::VectorXd::Zero(conforming.dim);
  for (int d = 0; d < conforming.dim; ++d) {
    const DofDescriptor& dd = conforming.dofs[d];
    const std::vector<int>* patch = nullptr;
    std::vector<int> tmp;
    if (dd.kind == 0) {
      patch = &vertex_cells[dd.entity];
    } else if (dd.kind == 1) {
      const Face& f = mesh.faces[dd.entity];
      tmp.push_back(f.cells[0]);
      if (!f.boundary) tmp.push_back(f.cells[1]);
      patch = &tmp;
    } else {
      tmp.push_back(dd.entity);
      patch = &tmp;
    }
    double acc = 0;
    for (int t : *patch) acc += apply_dof_functional(conforming, d, fields[t], t);
    out[d] = acc / static_cast<double>(patch->size());
  }
  return out;
}

FaceForm FaceSpace::basis(int face, int i) const {
  FaceForm out;
  out.deg = form_degree;
  out.p = Poly1{};
  out.p.c.assign(i + 1, 0.0);
  out.p.c[i] = 1.0;
  out.length = mesh->faces[face].length;
  return out;
}

FaceSpace make_face_space(const MeshComplex& mesh, int form_degree,
                          int poly_degree, bool interior_only) {
  FaceSpace out;
  out.mesh = &mesh;
  out.form_degree = form_degree;
  out.poly_degree = poly_degree;
  out.interior_only = interior_only;
  out.face_offset.assign(mesh.n_faces(), -1);
  if (form_degree < 0 || form_degree > 1 || poly_degree < 0) return out;
  out.per_face = poly_degree + 1;
  int next = 0;
  for (int f = 0; f < mesh.n_faces(); ++f) {
    if (interior_only && mesh.faces[f].boundary) continue;
    out.face_offset[f] = next;
    next += out.per_face;
  }
  out.dim = next;
  return out;
}

Eigen::VectorXd face_project(const FaceSpace& fs, int face, const FaceForm& q) {
  if (fs.absent() || fs.face_offset[face] < 0 || q.deg != fs.form_degree)
    return Eigen::VectorXd();
  int n = fs.per_face;
  Eigen::MatrixXd G(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    FaceForm bi = fs.basis(face, i);
    for (int j = 0; j < n; ++j)
      G(i, j) = face_inner(bi, fs.basis(face, j));
    rhs[i] = face_inner(bi, q);
  }
  return G.ldlt().solve(rhs);
}

double face_projection_residual(const FaceSpace& fs, int face,
                                const FaceForm& q) {
  if (q.deg < 0) return 0.0;
  Eigen::VectorXd c = face_project(fs, face, q);
  FaceForm diff = q;
  for (int i = 0; i < c.size(); ++i)
    diff = face_add(diff, face_scale(-c[i], fs.basis(face, i)));
  return std::sqrt(std::max(0.0, face_inner(diff, diff)));
}

namespace {

// Polynomial degree of the tangential trace of the family on a face line,
// or -1 when the space contributes no tangential trace. Whitney-type 1-forms
// lose one degree on faces (constant kappa tangential component); rotated
// ones keep the full degree (the Koszul normal component is linear along a
// face).
int trace_degree(const FormSpaceSpec& s) {
  if (s.k < 0 || s.k > 1 || s.degree < 0) return -1;
  if (s.k == 0) return s.degree;
  if (s.rotated) return s.degree;
  if (s.trimmed) return s.degree - 1;
  return s.degree;
}

// Trace degree of the star of the space (complete families and scalar
// proxies are star-closed; trimmed 1-forms swap orientation).
int star_trace_degree(const FormSpaceSpec& s) {
  if (s.k < 0 || s.k > 2 || s.degree < 0) return -1;
  FormSpaceSpec st = s;
  st.k = 2 - s.k;
  if (s.k == 2 && s.trimmed) {
    st.degree = s.degree - 1;  // trimmed top forms = complete one degree lower
    st.trimmed = false;
  }
  if (s.k == 1 && s.trimmed) st.rotated = !s.rotated;
  return trace_degree(st);
}

}  // namespace

XgSpaces make_xg_spaces(const MeshComplex& mesh, int k, int r, bool trimmed,
                        bool dual_schedule) {
  if (k < 0 || k > 2 || r < 0)
    throw std::runtime_error("form degree must be 0..2 and the index >= 0");
  XgSpaces sp;
  sp.mesh = &mesh;
  sp.k = k;
  sp.r = r;
  sp.trimmed = trimmed;
  sp.dual = dual_schedule;

  FormSpaceSpec specm{-1, -1, false}, spec{-1, -1, false}, specp{-1, -1, false};
  if (!dual_schedule) {
    if (k == 0) {
      spec = {0, r + 1, false};
      specp = {1, r, false};
    } else if (k == 1) {
      specm = {0, r + 1, false};
      if (trimmed) {
        spec = {1, r + 1, true};
        specp = {2, r, false};
      } else {
        spec = {1, r, false};
        specp = {2, std::max(r - 1, 0), false};
      }
    } else {
      specm = {1, r + 1, trimmed};
      spec = {2, r, false};
    }
  } else {
    // Star mirror of the primal schedule at form degree 2-k: the coderivative
    // complex delta(Vp) <= V <= Vm holds by construction, and the field the
    // vanishing-penalty limit makes star-conforming contains the star of the
    // matching conforming pair.
    if (k == 0) {
      spec = {0, r, false};
      specp = {1, r + 1, trimmed, trimmed};
    } else if (k == 1) {
      if (trimmed) {
        specm = {0, r, false};
        spec = {1, r + 1, true, true};
        specp = {2, r + 1, false};
      } else {
        specm = {0, std::max(r - 1, 0), false};
        spec = {1, r, false};
        specp = {2, r + 1, false};
      }
    } else {
      specm = {1, r, false};
      spec = {2, r + 1, false};
    }
  }
  sp.Vm = make_broken_space(mesh, specm);
  sp.V = make_broken_space(mesh, spec);
  sp.Vp = make_broken_space(mesh, specp);

  if (!dual_schedule) {
    int degV = spec.degree;
    int degVm = sp.Vm.absent() ? -1 : specm.degree;
    int degVp = sp.Vp.absent() ? -1 : specp.degree;
    sp.cVm = make_face_space(mesh, k - 1, degV, false);
    sp.cV = make_face_space(mesh, k, degVp, false);
    sp.cVps = make_face_space(mesh, 1 - k, degV, true);
    sp.cVs = make_face_space(mesh, 2 - k, degVm, true);
  } else {
    // Check spaces sized by the traces they must reproduce exactly: the
    // star-jump penalties see star traces of u and xi, the plain-jump
    // penalties see tangential traces, and the hybrid flux multipliers also
    // carry one-sided star traces of u and xi.
    sp.cVm = make_face_space(mesh, k - 1, star_trace_degree(spec), false);
    sp.cV = make_face_space(mesh, k, star_trace_degree(specp), false);
    sp.cVps = make_face_space(
        mesh, 1 - k,
        std::max(trace_degree(spec), star_trace_degree(specp)), true);
    sp.cVs = make_face_space(
        mesh, 2 - k,
        std::max(trace_degree(specm), star_trace_degree(spec)), true);
  }
  return sp;
}

namespace {

double inclusion_residual(const FaceSpace& fs, int face, const FaceForm& q) {
  if (q.deg < 0) return 0.0;
  double qn = std::sqrt(std::max(0.0, face_inner(q, q)));
  if (fs.absent() || fs.face_offset[face] < 0 || q.deg != fs.form_degree)
    return qn / (1.0 + qn);
  return face_projection_residual(fs, face, q) / (1.0 + qn);
}

}  // namespace

InclusionReport check_inclusions(const XgSpaces& sp, int n_samples,
                                 unsigned seed) {
  const MeshComplex& mesh = *sp.mesh;
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto rand_vec = [&](int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(gen);
    return v;
  };

  InclusionReport rep;
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd cu = rand_vec(sp.V.dim);
    Eigen::VectorXd cs = rand_vec(sp.Vm.dim);
    Eigen::VectorXd cx = rand_vec(sp.Vp.dim);
    for (int f = 0; f < mesh.n_faces(); ++f) {
      bool interior = !mesh.faces[f].boundary;
      // the four check-field sources
      rep.max_residual =
          std::max(rep.max_residual,
                   inclusion_residual(sp.cVm, f,
                                      face_star(field_jump(sp.V, cu, f, true))));
      if (!sp.Vp.absent())
        rep.max_residual =
            std::max(rep.max_residual,
                     inclusion_residual(
                         sp.cV, f, face_star(field_jump(sp.Vp, cx, f, true))));
      if (interior) {
        rep.max_residual = std::max(
            rep.max_residual,
            inclusion_residual(sp.cVps, f,
                               face_star(field_jump(sp.V, cu, f, false))));
        if (!sp.Vm.absent())
          rep.max_residual = std::max(
              rep.max_residual,
              inclusion_residual(sp.cVs, f,
                                 face_star(field_jump(sp.Vm, cs, f, false))));
        // hybrid flux traces: the one-sided star traces must be representable
        // in the multiplier spaces wherever those exist
        if (!sp.cVs.absent())
          for (int c : mesh.faces[f].cells)
            rep.hybrid_max_residual = std::max(
                rep.hybrid_max_residual,
                inclusion_residual(sp.cVs, f, side_trace(sp.V, cu, f, c, true)));
        if (!sp.cVps.absent() && !sp.Vp.absent())
          for (int c : mesh.faces[f].cells)
            rep.hybrid_max_residual =
                std::max(rep.hybrid_max_residual,
                         inclusion_residual(sp.cVps, f,
                                            side_trace(sp.Vp, cx, f, c, true)));
      }
    }
  }
  return rep;
}

double derivative_projection_residual(const GlobalSpace& source,
                                      const GlobalSpace& target,
                                      int n_samples, unsigned seed) {
  const MeshComplex& mesh = *source.mesh;
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  // global mass matrix of the target space
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(target.dim, target.dim);
  for (int t = 0; t < mesh.n_cells(); ++t) {
    auto co = cell_coords(mesh, t);
    int n = static_cast<int>(target.cell_dofs[t].size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        M(target.cell_dofs[t][i], target.cell_dofs[t][j]) += inner_product(
            target.cell_basis[t][i], target.cell_basis[t][j], co[0], co[1],
            co[2]);
  }
  Eigen::LDLT<Eigen::MatrixXd> solver(M);

  double worst = 0;
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd c(source.dim);
    for (int i = 0; i < source.dim; ++i) c[i] = dist(gen);

    std::vector<PolyForm> dw;
    dw.reserve(mesh.n_cells());
    double norm2 = 0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(target.dim);
    for (int t = 0; t < mesh.n_cells(); ++t) {
      auto co = cell_coords(mesh, t);
      dw.push_back(exterior_derivative(cell_field(source, c, t)));
      norm2 += inner_product(dw[t], dw[t], co[0], co[1], co[2]);
      for (size_t i = 0; i < target.cell_dofs[t].size(); ++i)
        rhs[target.cell_dofs[t][i]] +=
            inner_product(target.cell_basis[t][i], dw[t], co[0], co[1], co[2]);
    }
    if (norm2 < 1e-28) continue;
    Eigen::VectorXd p = solver.solve(rhs);
    double res2 = 0;
    for (int t = 0; t < mesh.n_cells(); ++t) {
      auto co = cell_coords(mesh, t);
      PolyForm diff =
          form_add(dw[t], form_scale(-1.0, cell_field(target, p, t)));
      res2 += inner_product(diff, diff, co[0], co[1], co[2]);
    }
    worst = std::max(worst, std::sqrt(std::max(0.0, res2) / norm2));
  }
  return worst;
}

double discrete_poincare_constant(const GlobalSpace& conf, double rank_tol) {
  const MeshComplex& mesh = *conf.mesh;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(conf.dim, conf.dim);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(conf.dim, conf.dim);
  for (int t = 0; t < mesh.n_cells(); ++t) {
    auto co = cell_coords(mesh, t);
    int n = static_cast<int>(conf.cell_dofs[t].size());
    std::vector<PolyForm> d(n);
    for (int i = 0; i < n; ++i)
      d[i] = exterior_derivative(conf.cell_basis[t][i]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int gi = conf.cell_dofs[t][i], gj = conf.cell_dofs[t][j];
        A(gi, gj) += inner_product(d[i], d[j], co[0], co[1], co[2]);
        M(gi, gj) += inner_product(conf.cell_basis[t][i], conf.cell_basis[t][j],
                                   co[0], co[1], co[2]);
      }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, M);
  const Eigen::VectorXd& ev = es.eigenvalues();
  double lmax = ev[ev.size() - 1];
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] > rank_tol * lmax) return 1.0 / std::sqrt(ev[i]);
  throw std::runtime_error("derivative vanishes on the whole space");
}

}  // namespace xg
