#include "xg/hybridize.hpp"

#include <algorithm>
#include <stdexcept>

#include "xg/forms.hpp"

namespace xg {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

int max_space_degree(const XgSpaces& sp) {
  int d = 0;
  for (const GlobalSpace* s : {&sp.Vm, &sp.V, &sp.Vp})
    if (!s->absent()) d = std::max(d, s->spec.degree);
  return d;
}

double guarded_face_inner(const FaceForm& a, const FaceForm& b) {
  if (a.deg < 0 || b.deg < 0) return 0.0;
  return face_inner(a, b);
}

Penalty edge_penalty(const ProblemConfig& cfg, const Face& face) {
  Penalty pen = penalty_coefficients(cfg.regime, cfg.rho, face.length);
  if (cfg.wrong_sign_penalty) pen.a = -pen.a;
  return pen;
}

}  // namespace

HybridSystem hybridize(const MeshComplex& mesh, const ProblemConfig& cfg,
                       const TrigField& f) {
  if (cfg.k != 1 && cfg.k != 2)
    throw std::invalid_argument("hybridize: supported for k in {1, 2} only");
  if (cfg.regime != Regime::hybrid1 && cfg.regime != Regime::hybrid2)
    throw std::invalid_argument(
        "hybridize: penalty regime must satisfy c = 1/(4b), d = 1/(4a) "
        "(hybrid1 or hybrid2)");

  HybridSystem hs;
  hs.config = cfg;
  hs.mesh = &mesh;
  hs.spaces = make_xg_spaces(mesh, cfg.k, cfg.degree, cfg.trimmed,
                             cfg.regime == Regime::hybrid2);
  const XgSpaces& sp = hs.spaces;
  hs.n_flux_u = sp.cVs.dim;
  hs.n_flux_xi = sp.cVps.dim;
  hs.n_fields = sp.Vm.dim + sp.Vp.dim + sp.V.dim;
  const int nf = hs.flux_dim();
  const int oS = 0, oX = sp.Vm.dim, oU = sp.Vm.dim + sp.Vp.dim;
  const int quad = data_quadrature_degree(max_space_degree(sp));

  // flux-flux face masses: the diagonal block of the unreduced system
  Triplets ftrip;
  for (int fc = 0; fc < mesh.n_faces(); ++fc) {
    if (mesh.faces[fc].boundary) continue;
    const Penalty pen = edge_penalty(cfg, mesh.faces[fc]);
    if (!sp.cVs.absent() && sp.cVs.face_offset[fc] >= 0)
      for (int m = 0; m < sp.cVs.per_face; ++m)
        for (int l = 0; l < sp.cVs.per_face; ++l) {
          double v = 4.0 * pen.a *
                     guarded_face_inner(sp.cVs.basis(fc, m), sp.cVs.basis(fc, l));
          if (v != 0.0)
            ftrip.emplace_back(sp.cVs.face_offset[fc] + m,
                               sp.cVs.face_offset[fc] + l, v);
        }
    if (!sp.cVps.absent() && sp.cVps.face_offset[fc] >= 0)
      for (int m = 0; m < sp.cVps.per_face; ++m)
        for (int l = 0; l < sp.cVps.per_face; ++l) {
          double v =
              4.0 * pen.c *
              guarded_face_inner(sp.cVps.basis(fc, m), sp.cVps.basis(fc, l));
          if (v != 0.0)
            ftrip.emplace_back(hs.n_flux_u + sp.cVps.face_offset[fc] + m,
                               hs.n_flux_u + sp.cVps.face_offset[fc] + l, v);
        }
  }
  hs.F.resize(nf, nf);
  hs.F.setFromTriplets(ftrip.begin(), ftrip.end());

  // local saddle systems, their flux couplings, and the Schur complement
  hs.cells.resize(mesh.n_cells());
  Triplets strip;  // sum over cells of G^t M^{-1} G
  hs.rhs = Eigen::VectorXd::Zero(nf);
  for (int t = 0; t < mesh.n_cells(); ++t) {
    HybridLocal& hl = hs.cells[t];
    const auto co = cell_coords(mesh, t);
    static const std::vector<PolyForm> no_basis;
    const auto& bs = sp.Vm.cell_basis[t];
    const auto& bx = sp.Vp.absent() ? no_basis : sp.Vp.cell_basis[t];
    const auto& bu = sp.V.cell_basis[t];
    const int nS = static_cast<int>(bs.size());
    const int nX = static_cast<int>(bx.size());
    const int nU = static_cast<int>(bu.size());
    const int n = nS + nX + nU;

    hl.rows.reserve(n);
    for (int i = 0; i < nS; ++i) hl.rows.push_back(oS + sp.Vm.cell_dofs[t][i]);
    for (int i = 0; i < nX; ++i) hl.rows.push_back(oX + sp.Vp.cell_dofs[t][i]);
    for (int i = 0; i < nU; ++i) hl.rows.push_back(oU + sp.V.cell_dofs[t][i]);

    // the cell's flux unknowns, in (per edge: u-flux then xi-flux) order
    for (const CellFace& cf : mesh.cell_faces[t]) {
      if (mesh.faces[cf.face].boundary) continue;
      if (!sp.cVs.absent() && sp.cVs.face_offset[cf.face] >= 0)
        for (int m = 0; m < sp.cVs.per_face; ++m)
          hl.flux.push_back(sp.cVs.face_offset[cf.face] + m);
      if (!sp.cVps.absent() && sp.cVps.face_offset[cf.face] >= 0)
        for (int m = 0; m < sp.cVps.per_face; ++m)
          hl.flux.push_back(hs.n_flux_u + sp.cVps.face_offset[cf.face] + m);
    }
    const int ncol = static_cast<int>(hl.flux.size());

    hl.M = Eigen::MatrixXd::Zero(n, n);
    hl.G = Eigen::MatrixXd::Zero(n, ncol);
    hl.load = Eigen::VectorXd::Zero(n);

    // volume terms: masses and the two derivative couplings
    for (int i = 0; i < nS; ++i)
      for (int j = 0; j < nS; ++j)
        hl.M(i, j) += inner_product(bs[i], bs[j], co[0], co[1], co[2]);
    for (int i = 0; i < nX; ++i)
      for (int j = 0; j < nX; ++j)
        hl.M(nS + i, nS + j) += inner_product(bx[i], bx[j], co[0], co[1], co[2]);
    for (int i = 0; i < nS; ++i) {
      const PolyForm dsi = exterior_derivative(bs[i]);
      for (int j = 0; j < nU; ++j) {
        const double v = inner_product(dsi, bu[j], co[0], co[1], co[2]);
        hl.M(i, nS + nX + j) += v;
        hl.M(nS + nX + j, i) += v;
      }
    }
    for (int j = 0; j < nU; ++j) {
      const PolyForm duj = exterior_derivative(bu[j]);
      for (int i = 0; i < nX; ++i) {
        const double v = inner_product(bx[i], duj, co[0], co[1], co[2]);
        hl.M(nS + i, nS + nX + j) += v;
        hl.M(nS + nX + j, nS + i) += v;
      }
    }

    // interface terms, edge by edge
    int col0 = 0;  // first local flux column of the current edge
    for (const CellFace& cf : mesh.cell_faces[t]) {
      const int fc = cf.face;
      const Face& face = mesh.faces[fc];
      const Penalty pen = edge_penalty(cfg, face);
      const double s = static_cast<double>(cf.sign);
      const double w = face.boundary ? 1.0 : 2.0;

      std::vector<FaceForm> trsU(nU), sbU(nU), trsX(nX), sbS(nS);
      for (int i = 0; i < nU; ++i) {
        trsU[i] = trace_on_face(mesh, fc, hodge_star(bu[i]));
        sbU[i] = face_star(trace_on_face(mesh, fc, bu[i]));
      }
      for (int i = 0; i < nX; ++i)
        trsX[i] = trace_on_face(mesh, fc, hodge_star(bx[i]));
      for (int i = 0; i < nS; ++i)
        sbS[i] = face_star(trace_on_face(mesh, fc, bs[i]));

      // one-sided star-trace penalties (the local remnant of the jump and
      // average penalties: weight 2 where the edge is shared, 1 on the
      // boundary where the star trace is penalized one-sidedly)
      for (int i = 0; i < nU; ++i)
        for (int j = 0; j < nU; ++j)
          hl.M(nS + nX + i, nS + nX + j) +=
              w * pen.a * guarded_face_inner(trsU[i], trsU[j]);
      for (int i = 0; i < nX; ++i)
        for (int j = 0; j < nX; ++j)
          hl.M(nS + i, nS + j) += w * pen.c * guarded_face_inner(trsX[i], trsX[j]);

      if (face.boundary) continue;  // boundary edges carry no flux unknowns

      int col = col0;
      if (!sp.cVs.absent() && sp.cVs.face_offset[fc] >= 0) {
        for (int m = 0; m < sp.cVs.per_face; ++m, ++col) {
          const FaceForm psi = sp.cVs.basis(fc, m);
          for (int i = 0; i < nS; ++i)
            hl.G(i, col) -= s * guarded_face_inner(sbS[i], psi);
          for (int i = 0; i < nU; ++i)
            hl.G(nS + nX + i, col) -=
                2.0 * pen.a * guarded_face_inner(trsU[i], psi);
        }
      }
      if (!sp.cVps.absent() && sp.cVps.face_offset[fc] >= 0) {
        for (int m = 0; m < sp.cVps.per_face; ++m, ++col) {
          const FaceForm psi = sp.cVps.basis(fc, m);
          for (int i = 0; i < nX; ++i)
            hl.G(nS + i, col) -= 2.0 * pen.c * guarded_face_inner(trsX[i], psi);
          for (int i = 0; i < nU; ++i)
            hl.G(nS + nX + i, col) -= s * guarded_face_inner(sbU[i], psi);
        }
      }
      col0 = col;
    }

    for (int i = 0; i < nU; ++i)
      hl.load[nS + nX + i] = -trig_poly_inner_cell(f, bu[i], co, quad);

    hl.factor.compute(hl.M);
    if (!hl.factor.isInvertible())
      throw std::runtime_error(
          "hybridize: singular local matrix (local stability violated)");

    // Schur contribution of this cell
    const Eigen::MatrixXd MinvG = hl.factor.solve(hl.G);
    const Eigen::MatrixXd S = hl.G.transpose() * MinvG;
    for (int cR = 0; cR < ncol; ++cR)
      for (int cC = 0; cC < ncol; ++cC)
        if (S(cR, cC) != 0.0)
          strip.emplace_back(hl.flux[cR], hl.flux[cC], S(cR, cC));
    const Eigen::VectorXd gi = hl.G.transpose() * hl.factor.solve(hl.load);
    for (int c = 0; c < ncol; ++c) hs.rhs[hl.flux[c]] -= gi[c];
  }

  Eigen::SparseMatrix<double> schur(nf, nf);
  schur.setFromTriplets(strip.begin(), strip.end());
  hs.Kc = hs.F - schur;
  hs.Kc.makeCompressed();
  return hs;
}

Eigen::VectorXd local_solve(const HybridSystem& hs, int cell,
                            const Eigen::VectorXd& flux, bool with_load) {
  const HybridLocal& hl = hs.cells.at(cell);
  Eigen::VectorXd flux_loc(hl.flux.size());
  for (size_t c = 0; c < hl.flux.size(); ++c) flux_loc[c] = flux[hl.flux[c]];
  Eigen::VectorXd rhs = -hl.G * flux_loc;
  if (with_load) rhs += hl.load;
  return hl.factor.solve(rhs);
}

void reconstruct(const HybridSystem& hs, const Eigen::VectorXd& flux,
                 Eigen::VectorXd& sigma, Eigen::VectorXd& xi,
                 Eigen::VectorXd& u) {
  const XgSpaces& sp = hs.spaces;
  sigma = Eigen::VectorXd::Zero(sp.Vm.dim);
  xi = Eigen::VectorXd::Zero(sp.Vp.dim);
  u = Eigen::VectorXd::Zero(sp.V.dim);
  const int oX = sp.Vm.dim, oU = sp.Vm.dim + sp.Vp.dim;
  for (int t = 0; t < hs.mesh->n_cells(); ++t) {
    const Eigen::VectorXd z = local_solve(hs, t, flux);
    const HybridLocal& hl = hs.cells[t];
    for (size_t i = 0; i < hl.rows.size(); ++i) {
      const int g = hl.rows[i];
      if (g < oX)
        sigma[g] = z[i];
      else if (g < oU)
        xi[g - oX] = z[i];
      else
        u[g - oU] = z[i];
    }
  }
}

HybridSolution solve_hybrid(const HybridSystem& hs, double tol) {
  HybridSolution sol;
  sol.report = solve_linear(hs.Kc, hs.rhs, tol);
  sol.flux = sol.report.x;
  reconstruct(hs, sol.flux, sol.sigma, sol.xi, sol.u);
  return sol;
}

Eigen::SparseMatrix<double> hybrid_full_matrix(const HybridSystem& hs) {
  const int n = hs.n_fields + hs.flux_dim();
  Triplets trip;
  for (const HybridLocal& hl : hs.cells) {
    const int nl = static_cast<int>(hl.rows.size());
    const int nc = static_cast<int>(hl.flux.size());
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j)
        if (hl.M(i, j) != 0.0)
          trip.emplace_back(hl.rows[i], hl.rows[j], hl.M(i, j));
    for (int i = 0; i < nl; ++i)
      for (int c = 0; c < nc; ++c)
        if (hl.G(i, c) != 0.0) {
          trip.emplace_back(hl.rows[i], hs.n_fields + hl.flux[c], hl.G(i, c));
          trip.emplace_back(hs.n_fields + hl.flux[c], hl.rows[i], hl.G(i, c));
        }
  }
  for (int o = 0; o < hs.F.outerSize(); ++o)
    for (Eigen::SparseMatrix<double>::InnerIterator it(hs.F, o); it; ++it)
      trip.emplace_back(hs.n_fields + it.row(), hs.n_fields + it.col(),
                        it.value());
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

Eigen::VectorXd hybrid_full_rhs(const HybridSystem& hs) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(hs.n_fields + hs.flux_dim());
  for (const HybridLocal& hl : hs.cells)
    for (size_t i = 0; i < hl.rows.size(); ++i) rhs[hl.rows[i]] += hl.load[i];
  return rhs;
}

Eigen::VectorXd fluxes_from_monolithic(const HybridSystem& hs,
                                       const AssembledSystem& sys,
                                       const Eigen::VectorXd& x) {
  if (!sys.layout.has("u_star_check"))
    throw std::invalid_argument(
        "fluxes_from_monolithic: needs a seven-field solution");
  const MeshComplex& mesh = *hs.mesh;
  const FieldExtract fe = extract_fields(sys, x);
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(hs.flux_dim());

  const Eigen::VectorXd us = sys.layout.segment("u_star_check", x);
  const FaceSpace& fu = hs.spaces.cVs;
  for (int fc = 0; fc < mesh.n_faces(); ++fc) {
    if (fu.absent() || fu.face_offset[fc] < 0) continue;
    const Eigen::VectorXd proj =
        face_project(fu, fc, polyfield_average(mesh, fe.u, fc, /*star=*/true));
    for (int m = 0; m < fu.per_face; ++m)
      flux[fu.face_offset[fc] + m] = us[fu.face_offset[fc] + m] + proj[m];
  }
  if (hs.n_flux_xi > 0) {
    const Eigen::VectorXd xs = sys.layout.segment("xi_star_check", x);
    const FaceSpace& fx = hs.spaces.cVps;
    for (int fc = 0; fc < mesh.n_faces(); ++fc) {
      if (fx.face_offset[fc] < 0) continue;
      const Eigen::VectorXd proj = face_project(
          fx, fc, polyfield_average(mesh, fe.xi, fc, /*star=*/true));
      for (int m = 0; m < fx.per_face; ++m)
        flux[hs.n_flux_u + fx.face_offset[fc] + m] =
            xs[fx.face_offset[fc] + m] + proj[m];
    }
  }
  return flux;
}

}  // namespace xg
