#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "xg/bases.hpp"
#include "xg/forms.hpp"
#include "xg/mesh.hpp"

namespace xg {

std::array<Vec2, 3> cell_coords(const MeshComplex& mesh, int t);
Chart cell_chart(const MeshComplex& mesh, int t);

enum class Continuity { broken, conforming };

// One degree of freedom of a conforming space: a functional attached to a
// mesh entity. kind: 0 = vertex (point evaluation), 1 = edge (moment against
// t^index along the edge's oriented tangent), 2 = cell (interior moment
// against the index-th member of the moment basis).
struct DofDescriptor {
  int kind = 2;
  int entity = -1;
  int index = 0;
};

// Global finite element space of polynomial differential forms. For broken
// spaces, dofs are cell-local coefficients in the local basis. For conforming
// spaces, cell_basis holds the restriction of the global (dual) basis to each
// cell, aligned with cell_dofs.
struct GlobalSpace {
  const MeshComplex* mesh = nullptr;
  FormSpaceSpec spec;
  Continuity continuity = Continuity::broken;
  bool zero_trace = false;
  int dim = 0;

  std::vector<std::vector<int>> cell_dofs;
  std::vector<std::vector<PolyForm>> cell_basis;
  std::vector<DofDescriptor> dofs;  // conforming spaces only

  bool absent() const { return dim == 0; }
};

GlobalSpace make_broken_space(const MeshComplex& mesh, FormSpaceSpec spec);
// zero_trace drops the functionals on boundary entities (essential boundary
// conditions for the trace of the form).
GlobalSpace make_conforming_space(const MeshComplex& mesh, FormSpaceSpec spec,
                                  bool zero_trace = false);

// value of the dof functional applied to a polynomial form living on `cell`
double apply_dof_functional(const GlobalSpace& space, int dof,
                            const PolyForm& w, int cell);

// the field restricted to one cell, as a polynomial form
PolyForm cell_field(const GlobalSpace& space, const Eigen::VectorXd& coeffs,
                    int cell);

// trace_to_face along the oriented tangent of face f, with the face length
// filled in so the face inner products are weighted correctly
FaceForm trace_on_face(const MeshComplex& mesh, int face, const PolyForm& w);

// Trace of the field (or of its Hodge star) on a face, taken from one side.
FaceForm side_trace(const GlobalSpace& space, const Eigen::VectorXd& coeffs,
                    int face, int cell, bool star);
// DG jump [tr w] (star=false) or [tr *w] (star=true): difference of side
// traces on interior faces; on boundary faces [tr w] = 0 and [tr *w] = tr *w.
FaceForm field_jump(const GlobalSpace& space, const Eigen::VectorXd& coeffs,
                    int face, bool star);
// DG average with the complementary boundary convention: on boundary faces
// avg(tr w) = tr w and avg(tr *w) = 0.
FaceForm field_average(const GlobalSpace& space, const Eigen::VectorXd& coeffs,
                       int face, bool star);

// Averaging interpolation onto the matching conforming space: each conforming
// dof takes the arithmetic mean of its functional applied on the adjacent
// cells. Reproduces conforming inputs exactly.
Eigen::VectorXd conforming_average(const GlobalSpace& broken,
                                   const Eigen::VectorXd& coeffs,
                                   const GlobalSpace& conforming);

// Space of polynomial forms on mesh edges (the check/flux spaces). Bases are
// the monomials t^i in the oriented edge parameter; form_degree 0 or 1.
// Degenerate form degrees give the absent space.
struct FaceSpace {
  const MeshComplex* mesh = nullptr;
  int form_degree = -1;
  int poly_degree = -1;
  bool interior_only = false;
  int dim = 0;
  int per_face = 0;
  std::vector<int> face_offset;  // -1 if the face carries no dofs

  bool absent() const { return dim == 0; }
  FaceForm basis(int face, int i) const;
};

FaceSpace make_face_space(const MeshComplex& mesh, int form_degree,
                          int poly_degree, bool interior_only);

// face-local L2 projection onto the face space; returns the coefficients of
// the projection of q in the monomial basis of that face (empty if absent)
Eigen::VectorXd face_project(const FaceSpace& fs, int face, const FaceForm& q);
// L2(E) distance between q and its projection
double face_projection_residual(const FaceSpace& fs, int face,
                                const FaceForm& q);

// The discontinuous Galerkin space family for one Hodge-Laplace problem:
// broken spaces for sigma/u/xi plus the four check spaces on faces.
struct XgSpaces {
  const MeshComplex* mesh = nullptr;
  int k = 0;
  int r = 0;  // family index: V has polynomial degree r+1 (trimmed) or r
  bool trimmed = true;
  bool dual = false;  // star-mirrored schedule (coderivative-oriented)
  GlobalSpace Vm, V, Vp;          // sigma, u, xi
  FaceSpace cVm, cV, cVps, cVs;   // sigma-check, u-check, xi*-check, u*-check

  int total_field_dim() const { return Vm.dim + V.dim + Vp.dim; }
};

// The primal schedule (dual_schedule = false) satisfies the exterior
// derivative inclusions d(Vm) <= V, d(V) <= Vp needed when the vanishing
// penalties drive tangential traces continuous; the dual schedule is its
// Hodge-star mirror and satisfies the coderivative inclusions
// delta(Vp) <= V, delta(V) <= Vm matching penalties that drive star traces
// continuous.
XgSpaces make_xg_spaces(const MeshComplex& mesh, int k, int r, bool trimmed,
                        bool dual_schedule = false);

struct InclusionReport {
  double max_residual = 0.0;  // relative L2 projection residual over faces
  double hybrid_max_residual = 0.0;  // trace inclusions used by hybridization
  bool ok(double tol = 1e-12) const {
    return max_residual <= tol && hybrid_max_residual <= tol;
  }
};

// Verifies (on randomized fields) that the check spaces contain the star-bar
// traces they must represent exactly, and that flux traces are representable
// on interior faces.
InclusionReport check_inclusions(const XgSpaces& spaces, int n_samples = 8,
                                 unsigned seed = 11);

// max over a randomized sample of ||d w_h - P(d w_h)|| / ||d w_h|| where P is
// the global L2 projection onto `target`; near zero iff d maps `source` into
// `target`.
double derivative_projection_residual(const GlobalSpace& source,
                                      const GlobalSpace& target,
                                      int n_samples = 6, unsigned seed = 3);

// 1/sqrt(smallest nonzero generalized eigenvalue) of (d.,d.) vs (.,.) on a
// conforming space; the discrete Poincare constant for the complex.
double discrete_poincare_constant(const GlobalSpace& conf,
                                  double rank_tol = 1e-10);

}  // namespace xg
