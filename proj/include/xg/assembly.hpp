#pragma once

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "xg/spaces.hpp"
#include "xg/trig.hpp"

namespace xg {

// Discretizations of the Hodge-Laplace problem:
//   xg7  - seven-field formulation with all four interface check fields
//   xg4a - four-field reduction keeping the starred flux check of u
//   xg4b - four-field reduction keeping the trace check of sigma
//   xg3  - fully reduced three-field formulation (penalties only)
//   afw  - conforming mixed method (sigma, u)
//   afw_dual - conforming mixed method on the Hodge-dual complex
//   hdg  - hybridized variant (assembled in the hybridization unit)
enum class Method { xg7, xg4a, xg4b, xg3, afw, afw_dual, hdg };

// Interface coefficient schedules. one/two differ by which traces are
// penalized strongly; hybrid1/hybrid2 are the variants whose local solvers
// admit static condensation (c = 1/(4b), d = 1/(4a)).
enum class Regime { one, two, hybrid1, hybrid2 };

struct Penalty {
  double a = 0, b = 0, c = 0, d = 0;
};
Penalty penalty_coefficients(Regime regime, double rho, double h_edge);

struct ProblemConfig {
  int k = 1;
  int degree = 0;  // family index r
  bool trimmed = true;
  Regime regime = Regime::one;
  double rho = 1.0;
  // Negative control for stability sweeps: flips the sign of the
  // star-jump penalty on u (coefficient `a`), which breaks the sign
  // structure the stability theory rests on.
  bool wrong_sign_penalty = false;
};

struct FieldLayout {
  std::vector<std::string> names;
  std::vector<int> sizes;
  std::vector<int> offsets;
  int total = 0;

  void add(const std::string& name, int size);
  int block(const std::string& name) const;  // -1 if absent
  bool has(const std::string& name) const { return block(name) >= 0; }
  int offset_of(const std::string& name) const;
  int size_of(const std::string& name) const;
  Eigen::VectorXd segment(const std::string& name,
                          const Eigen::VectorXd& x) const;
};

struct AssembledSystem {
  Method method = Method::xg3;
  ProblemConfig config;
  const MeshComplex* mesh = nullptr;
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd rhs;
  FieldLayout layout;

  XgSpaces spaces;  // xg methods (broken + check spaces)
  GlobalSpace conf_sigma, conf_u;  // afw
  GlobalSpace conf_phi, conf_psi;  // afw_dual proxies (xi = *phi, u = *psi)
};

AssembledSystem assemble(Method method, const MeshComplex& mesh,
                         const ProblemConfig& config, const TrigField& f);

// The three common fields as elementwise polynomial forms, whatever the
// method's internal unknowns are. Absent fields come back as zero forms of
// the appropriate degree.
struct FieldExtract {
  int k = 0;
  std::vector<PolyForm> sigma, u, xi;
};
FieldExtract extract_fields(const AssembledSystem& sys,
                            const Eigen::VectorXd& x);

// jump / average of a per-cell polynomial field across a face, with the same
// boundary conventions as the space-based versions
FaceForm polyfield_jump(const MeshComplex& mesh,
                        const std::vector<PolyForm>& field, int face,
                        bool star);
FaceForm polyfield_average(const MeshComplex& mesh,
                           const std::vector<PolyForm>& field, int face,
                           bool star);

// Gram matrix of the stability norm matching the method/regime (block
// diagonal over the layout; the k=0 mean multiplier gets weight 1).
Eigen::SparseMatrix<double> norm_matrix(const AssembledSystem& sys);

// (f, v) over one cell by quadrature exact to `quad_degree` for polynomials
double trig_poly_inner_cell(const TrigField& f, const PolyForm& v,
                            const std::array<Vec2, 3>& co, int quad_degree);

// Quadrature degree used for data integrals (f, v): exact on the polynomial
// factor, with a floor that keeps the trigonometric factor accurate on
// coarse cells. Every assembly path must use this same rule so that
// reductions of one formulation to another agree to solver accuracy.
int data_quadrature_degree(int max_poly_degree);

std::string method_name(Method m);
bool method_from_name(const std::string& s, Method& out);
std::string regime_name(Regime r);
bool regime_from_name(const std::string& s, Regime& out);

}  // namespace xg
