#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "xg/assembly.hpp"
#include "xg/mesh.hpp"
#include "xg/quadrature.hpp"

using namespace xg;

namespace {

constexpr double kPi = 3.14159265358979323846;

// coefficients of the piecewise-constant field with the given cell values,
// via local L2 projection (robust to the basis ordering)
Eigen::VectorXd piecewise_constant_coeffs(const GlobalSpace& S,
                                          const std::vector<double>& values) {
  const MeshComplex& mesh = *S.mesh;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(S.dim);
  for (int t = 0; t < mesh.n_cells(); ++t) {
    if (values[t] == 0.0) continue;
    auto co = cell_coords(mesh, t);
    const auto& basis = S.cell_basis[t];
    int n = static_cast<int>(basis.size());
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd b(n);
    PolyForm one = zero_form(basis[0].k, basis[0].chart);
    one.comp[0] = Poly2::constant(values[t]);
    for (int i = 0; i < n; ++i) {
      b[i] = inner_product(basis[i], one, co[0], co[1], co[2]);
      for (int j = 0; j < n; ++j)
        M(i, j) = inner_product(basis[i], basis[j], co[0], co[1], co[2]);
    }
    Eigen::VectorXd c = M.ldlt().solve(b);
    for (int i = 0; i < n; ++i) out[S.cell_dofs[t][i]] = c[i];
  }
  return out;
}

double field_distance(const MeshComplex& mesh, const std::vector<PolyForm>& A,
                      const std::vector<PolyForm>& B) {
  double acc = 0;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    auto co = cell_coords(mesh, t);
    PolyForm d = form_add(A[t], form_scale(-1.0, B[t]));
    acc += inner_product(d, d, co[0], co[1], co[2]);
  }
  return std::sqrt(acc);
}

double field_norm(const MeshComplex& mesh, const std::vector<PolyForm>& A) {
  double acc = 0;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    auto co = cell_coords(mesh, t);
    acc += inner_product(A[t], A[t], co[0], co[1], co[2]);
  }
  return std::sqrt(acc);
}

double trig_error_l2(const MeshComplex& mesh, const std::vector<PolyForm>& A,
                     const TrigField& exact, int quad_degree = 16) {
  double acc = 0;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    auto co = cell_coords(mesh, t);
    int nc = A[t].k >= 0 && A[t].k <= 2 ? form_components(A[t].k) : 0;
    for (const auto& qp : triangle_rule(co[0], co[1], co[2], quad_degree))
      for (int c = 0; c < nc; ++c) {
        double e = A[t].eval(c, qp.p) - exact.eval(c, qp.p);
        acc += qp.w * e * e;
      }
  }
  return std::sqrt(acc);
}

Eigen::VectorXd dense_solve(const AssembledSystem& sys) {
  Eigen::MatrixXd K = Eigen::MatrixXd(sys.K);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  REQUIRE(lu.isInvertible());
  Eigen::VectorXd x = lu.solve(sys.rhs);
  REQUIRE((K * x - sys.rhs).norm() <= 1e-9 * (1.0 + sys.rhs.norm()));
  return x;
}

double symmetry_defect(const Eigen::SparseMatrix<double>& K) {
  Eigen::SparseMatrix<double> Kt = Eigen::SparseMatrix<double>(K.transpose());
  Eigen::SparseMatrix<double> D = K - Kt;
  double num = 0, den = 0;
  for (int j = 0; j < D.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(D, j); it; ++it)
      num = std::max(num, std::abs(it.value()));
  for (int j = 0; j < K.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, j); it; ++it)
      den = std::max(den, std::abs(it.value()));
  return den > 0 ? num / den : num;
}

}  // namespace

TEST_CASE("manufactured solutions: frozen values and eigenfunction identity") {
  // hand-computed samples of the k = 1 solution family
  ManufacturedSolution m1 = manufactured_solution(1);
  CHECK(m1.u.eval(0, {0.3, 0.7}) ==
        doctest::Approx(-0.47552825814757677).epsilon(1e-14));
  CHECK(m1.u.eval(1, {0.3, 0.7}) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(m1.sigma.eval(0, {0.25, 0.0}) ==
        doctest::Approx(2.221441469079183).epsilon(1e-13));
  CHECK(m1.xi.eval(0, {0.5, 0.5}) == doctest::Approx(-kPi).epsilon(1e-13));

  // every family member is a 2 pi^2 eigenfunction: f = 2 pi^2 u pointwise
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k <= 2; ++k) {
    ManufacturedSolution ms = manufactured_solution(k);
    REQUIRE(ms.u.k == k);
    for (int s = 0; s < 25; ++s) {
      Vec2 p{U(rng), U(rng)};
      for (int c = 0; c < form_components(k); ++c)
        CHECK(ms.f.eval(c, p) ==
              doctest::Approx(2.0 * kPi * kPi * ms.u.eval(c, p))
                  .epsilon(1e-10));
    }
    // and satisfies the boundary conditions the discretizations impose weakly
    MeshComplex mesh = build_structured_mesh(2);
    CHECK(boundary_compatibility(ms, mesh) <= 1e-12);
  }

  // the k = 0 load is compatible with the pure-Neumann problem: (f, 1) = 0
  {
    ManufacturedSolution ms = manufactured_solution(0);
    MeshComplex mesh = build_structured_mesh(2);
    double integral = 0;
    for (int t = 0; t < mesh.n_cells(); ++t) {
      auto co = cell_coords(mesh, t);
      for (const auto& qp : triangle_rule(co[0], co[1], co[2], 12))
        integral += qp.w * ms.f.eval(0, qp.p);
    }
    CHECK(std::abs(integral) <= 1e-9);
  }
}

TEST_CASE("manufactured solutions: derivatives match finite differences") {
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> U(0.1, 0.9);
  double h = 1e-5;
  for (int k : {0, 1}) {
    ManufacturedSolution ms = manufactured_solution(k);
    TrigField du = trig_d(ms.u);
    for (int s = 0; s < 10; ++s) {
      Vec2 p{U(rng), U(rng)};
      auto dx = [&](int c) {
        return (ms.u.eval(c, {p.x + h, p.y}) - ms.u.eval(c, {p.x - h, p.y})) /
               (2 * h);
      };
      auto dy = [&](int c) {
        return (ms.u.eval(c, {p.x, p.y + h}) - ms.u.eval(c, {p.x, p.y - h})) /
               (2 * h);
      };
      if (k == 0) {
        CHECK(du.eval(0, p) == doctest::Approx(dx(0)).epsilon(1e-6));
        CHECK(du.eval(1, p) == doctest::Approx(dy(0)).epsilon(1e-6));
      } else {
        CHECK(du.eval(0, p) ==
              doctest::Approx(dx(1) - dy(0)).epsilon(1e-6));
      }
    }
    // d of d vanishes identically
    TrigField ddu = trig_d(du);
    for (int s = 0; s < 5; ++s) {
      Vec2 p{U(rng), U(rng)};
      for (int c = 0; c < static_cast<int>(ddu.comp.size()); ++c)
        CHECK(std::abs(ddu.eval(c, p)) <= 1e-14);
    }
  }
}

TEST_CASE("penalty schedules: frozen quadruples and scaling") {
  auto quad = [](Regime r, double rho, double h) {
    Penalty p = penalty_coefficients(r, rho, h);
    return std::array<double, 4>{p.a, p.b, p.c, p.d};
  };
  auto near = [](std::array<double, 4> got, std::array<double, 4> want) {
    for (int i = 0; i < 4; ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
  };
  near(quad(Regime::one, 1.0, 0.5), {-0.5, 2.0, 0.5, -2.0});
  near(quad(Regime::two, 1.0, 0.5), {-2.0, 0.5, 2.0, -0.5});
  near(quad(Regime::hybrid1, 1.0, 0.5), {-0.5, 2.0, 0.125, -0.5});
  near(quad(Regime::hybrid2, 1.0, 0.5), {-2.0, 0.5, 0.5, -0.125});
  near(quad(Regime::one, 2.0, 0.5), {-1.0, 1.0, 1.0, -1.0});

  // signs and the condensation relations c = 1/(4b), d = 1/(4a)
  for (Regime r :
       {Regime::one, Regime::two, Regime::hybrid1, Regime::hybrid2})
    for (double rho : {1.0, 0.1, 10.0})
      for (double h : {1.0, 0.25}) {
        Penalty p = penalty_coefficients(r, rho, h);
        CHECK(p.a < 0);
        CHECK(p.b > 0);
        CHECK(p.c > 0);
        CHECK(p.d < 0);
        if (r == Regime::hybrid1 || r == Regime::hybrid2) {
          CHECK(p.c == doctest::Approx(1.0 / (4.0 * p.b)).epsilon(1e-14));
          CHECK(p.d == doctest::Approx(1.0 / (4.0 * p.a)).epsilon(1e-14));
        }
      }
}

TEST_CASE("field layouts: frozen block dimensions") {
  MeshComplex mesh = build_structured_mesh(1);
  ProblemConfig cfg;
  cfg.k = 1;
  cfg.degree = 0;
  cfg.trimmed = true;
  ManufacturedSolution ms = manufactured_solution(1);

  AssembledSystem s7 = assemble(Method::xg7, mesh, cfg, ms.f);
  CHECK(s7.layout.size_of("sigma") == 6);
  CHECK(s7.layout.size_of("u") == 6);
  CHECK(s7.layout.size_of("xi") == 2);
  CHECK(s7.layout.size_of("sigma_check") == 10);
  CHECK(s7.layout.size_of("u_check") == 5);
  CHECK(s7.layout.size_of("xi_star_check") == 2);
  CHECK(s7.layout.size_of("u_star_check") == 2);
  CHECK(s7.layout.total == 33);
  CHECK(s7.K.rows() == 33);
  CHECK(s7.rhs.size() == 33);

  CHECK(assemble(Method::xg4a, mesh, cfg, ms.f).layout.total == 16);
  CHECK(assemble(Method::xg4b, mesh, cfg, ms.f).layout.total == 24);
  CHECK(assemble(Method::xg3, mesh, cfg, ms.f).layout.total == 14);

  // the star-oriented schedule picked by the vanishing-star-jump regimes
  ProblemConfig cd = cfg;
  cd.regime = Regime::two;
  AssembledSystem d7 = assemble(Method::xg7, mesh, cd, ms.f);
  CHECK(d7.spaces.dual);
  CHECK(d7.layout.size_of("sigma") == 2);
  CHECK(d7.layout.size_of("u") == 6);
  CHECK(d7.layout.size_of("xi") == 6);
  CHECK(d7.layout.size_of("sigma_check") == 5);
  CHECK(d7.layout.size_of("u_check") == 10);
  CHECK(d7.layout.size_of("xi_star_check") == 2);
  CHECK(d7.layout.size_of("u_star_check") == 1);
  CHECK(d7.layout.total == 32);
  CHECK(assemble(Method::xg4a, mesh, cd, ms.f).layout.total == 16);
  CHECK(assemble(Method::xg4b, mesh, cd, ms.f).layout.total == 19);
  CHECK(assemble(Method::xg3, mesh, cd, ms.f).layout.total == 14);

  // conforming pairs, with the k = 0 mean multiplier
  MeshComplex m2 = build_structured_mesh(2);
  ProblemConfig c0;
  c0.k = 0;
  c0.degree = 0;
  AssembledSystem a0 = assemble(Method::afw, m2, c0, manufactured_solution(0).f);
  CHECK(a0.layout.size_of("u") == 9);
  CHECK(a0.layout.total == 10);

  ProblemConfig c2;
  c2.k = 2;
  c2.degree = 0;
  c2.trimmed = true;
  AssembledSystem a2 = assemble(Method::afw, m2, c2, manufactured_solution(2).f);
  CHECK(a2.layout.size_of("sigma") == 16);
  CHECK(a2.layout.size_of("u") == 8);
  CHECK(a2.layout.total == 24);
}

TEST_CASE("assembled matrices are symmetric") {
  MeshComplex mesh = build_structured_mesh(2);
  for (int k : {0, 1, 2}) {
    ManufacturedSolution ms = manufactured_solution(k);
    for (auto [r, trimmed] : {std::pair{0, true}, {1, true}, {1, false}}) {
      for (Regime reg :
           {Regime::one, Regime::two, Regime::hybrid1, Regime::hybrid2}) {
        ProblemConfig cfg;
        cfg.k = k;
        cfg.degree = r;
        cfg.trimmed = trimmed;
        cfg.regime = reg;
        cfg.rho = 0.7;
        for (Method m :
             {Method::xg7, Method::xg4a, Method::xg4b, Method::xg3}) {
          AssembledSystem sys = assemble(m, mesh, cfg, ms.f);
          CAPTURE(k);
          CAPTURE(r);
          CAPTURE(static_cast<int>(m));
          CHECK(symmetry_defect(sys.K) <= 1e-12);
        }
      }
      ProblemConfig cfg;
      cfg.k = k;
      cfg.degree = r;
      cfg.trimmed = trimmed;
      CHECK(symmetry_defect(assemble(Method::afw, mesh, cfg, ms.f).K) <=
            1e-12);
      CHECK(symmetry_defect(assemble(Method::afw_dual, mesh, cfg, ms.f).K) <=
            1e-12);
    }
  }
}

TEST_CASE("constant scalars lie in the kernel up to the mean constraint") {
  MeshComplex mesh = build_structured_mesh(2);
  ManufacturedSolution ms = manufactured_solution(0);
  ProblemConfig cfg;
  cfg.k = 0;
  cfg.degree = 0;
  std::vector<double> ones(mesh.n_cells(), 1.0);

  for (Method m : {Method::xg3, Method::xg7}) {
    AssembledSystem sys = assemble(m, mesh, cfg, ms.f);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.layout.total);
    Eigen::VectorXd uc = piecewise_constant_coeffs(sys.spaces.V, ones);
    x.segment(sys.layout.offset_of("u"), sys.spaces.V.dim) = uc;
    Eigen::VectorXd Kx = sys.K * x;
    int mean_row = sys.layout.offset_of("mean");
    CHECK(Kx[mean_row] == doctest::Approx(1.0).epsilon(1e-12));
    Kx[mean_row] = 0.0;
    CHECK(Kx.lpNorm<Eigen::Infinity>() <= 1e-12);
  }

  AssembledSystem afw = assemble(Method::afw, mesh, cfg, ms.f);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(afw.layout.total);
  x.segment(afw.layout.offset_of("u"), afw.conf_u.dim) =
      Eigen::VectorXd::Ones(afw.conf_u.dim);  // vertex values of u = 1
  Eigen::VectorXd Kx = afw.K * x;
  int mean_row = afw.layout.offset_of("mean");
  CHECK(Kx[mean_row] == doctest::Approx(1.0).epsilon(1e-12));
  Kx[mean_row] = 0.0;
  CHECK(Kx.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("the four broken formulations produce the same fields") {
  MeshComplex mesh = build_structured_mesh(2);
  for (int k : {0, 1, 2}) {
    ManufacturedSolution ms = manufactured_solution(k);
    for (Regime reg : {Regime::one, Regime::two}) {
      ProblemConfig cfg;
      cfg.k = k;
      cfg.degree = 0;
      cfg.trimmed = true;
      cfg.regime = reg;
      cfg.rho = 1.0;

      AssembledSystem ref = assemble(Method::xg7, mesh, cfg, ms.f);
      FieldExtract fr = extract_fields(ref, dense_solve(ref));
      double scale = 1.0 + field_norm(mesh, fr.u);

      for (Method m : {Method::xg4a, Method::xg4b, Method::xg3}) {
        AssembledSystem sys = assemble(m, mesh, cfg, ms.f);
        FieldExtract fe = extract_fields(sys, dense_solve(sys));
        CAPTURE(k);
        CAPTURE(static_cast<int>(reg));
        CAPTURE(static_cast<int>(m));
        CHECK(field_distance(mesh, fe.u, fr.u) <= 1e-8 * scale);
        CHECK(field_distance(mesh, fe.sigma, fr.sigma) <= 1e-8 * scale);
        CHECK(field_distance(mesh, fe.xi, fr.xi) <= 1e-8 * scale);
      }
    }
  }
}

TEST_CASE("conforming methods converge on the manufactured solutions") {
  for (int k : {0, 1, 2}) {
    ManufacturedSolution ms = manufactured_solution(k);
    for (Method m : {Method::afw, Method::afw_dual}) {
      ProblemConfig cfg;
      cfg.k = k;
      cfg.degree = 0;
      cfg.trimmed = true;
      double err[2];
      for (int lev = 0; lev < 2; ++lev) {
        MeshComplex mesh = build_structured_mesh(lev == 0 ? 2 : 4);
        AssembledSystem sys = assemble(m, mesh, cfg, ms.f);
        FieldExtract fe = extract_fields(sys, dense_solve(sys));
        err[lev] = trig_error_l2(mesh, fe.u, ms.u);
      }
      CAPTURE(k);
      CAPTURE(static_cast<int>(m));
      CHECK(err[0] < 1.0);
      CHECK(err[1] <= 0.65 * err[0]);
    }
  }
}

TEST_CASE("broken formulation converges on the manufactured solution") {
  ManufacturedSolution ms = manufactured_solution(1);
  for (Regime reg : {Regime::one, Regime::two}) {
    ProblemConfig cfg;
    cfg.k = 1;
    cfg.degree = 0;
    cfg.trimmed = true;
    cfg.regime = reg;
    double err[2];
    for (int lev = 0; lev < 2; ++lev) {
      MeshComplex mesh = build_structured_mesh(lev == 0 ? 2 : 4);
      AssembledSystem sys = assemble(Method::xg3, mesh, cfg, ms.f);
      FieldExtract fe = extract_fields(sys, dense_solve(sys));
      err[lev] = trig_error_l2(mesh, fe.u, ms.u);
    }
    CAPTURE(static_cast<int>(reg));
    CHECK(err[0] < 1.0);
    CHECK(err[1] <= 0.8 * err[0]);
  }
}

TEST_CASE("stability norm: frozen values, symmetry, definiteness") {
  // piecewise-constant indicator of the cell the diagonal's normal exits:
  // squared norm = (1/2) L2 part + rho^{-1} h^{-1} * h interface part
  MeshComplex mesh = build_structured_mesh(1);
  int diag = -1;
  for (int f = 0; f < mesh.n_faces(); ++f)
    if (!mesh.faces[f].boundary) diag = f;
  REQUIRE(diag >= 0);
  int plus_cell = mesh.faces[diag].cells[0];

  for (double rho : {1.0, 4.0}) {
    ProblemConfig cfg;
    cfg.k = 0;
    cfg.degree = 0;
    cfg.regime = Regime::one;
    cfg.rho = rho;
    AssembledSystem sys =
        assemble(Method::xg3, mesh, cfg, manufactured_solution(0).f);
    Eigen::SparseMatrix<double> N = norm_matrix(sys);
    CHECK(symmetry_defect(N) <= 1e-12);

    std::vector<double> vals(mesh.n_cells(), 0.0);
    vals[plus_cell] = 1.0;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.layout.total);
    x.segment(sys.layout.offset_of("u"), sys.spaces.V.dim) =
        piecewise_constant_coeffs(sys.spaces.V, vals);
    double want = 0.5 + 1.0 / rho;
    CHECK(x.dot(N * x) == doctest::Approx(want).epsilon(1e-12));
  }

  // the norm matrix is positive definite for every formulation
  ProblemConfig cfg;
  cfg.k = 1;
  cfg.degree = 0;
  cfg.trimmed = true;
  for (Regime reg : {Regime::one, Regime::two}) {
    cfg.regime = reg;
    for (Method m : {Method::xg7, Method::xg3, Method::afw}) {
      AssembledSystem sys =
          assemble(m, mesh, cfg, manufactured_solution(1).f);
      Eigen::MatrixXd N = Eigen::MatrixXd(norm_matrix(sys));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N);
      CAPTURE(static_cast<int>(m));
      CHECK(es.eigenvalues().minCoeff() > 1e-12);
    }
  }
}

TEST_CASE("per-cell field jumps match the space versions") {
  MeshComplex mesh = build_structured_mesh(2);
  XgSpaces sp = make_xg_spaces(mesh, 1, 0, true);
  std::mt19937 rng(23);
  std::normal_distribution<double> G(0.0, 1.0);
  Eigen::VectorXd c(sp.V.dim);
  for (int i = 0; i < sp.V.dim; ++i) c[i] = G(rng);

  std::vector<PolyForm> field;
  for (int t = 0; t < mesh.n_cells(); ++t)
    field.push_back(cell_field(sp.V, c, t));

  for (int f = 0; f < mesh.n_faces(); ++f)
    for (bool star : {false, true}) {
      FaceForm a = polyfield_jump(mesh, field, f, star);
      FaceForm b = field_jump(sp.V, c, f, star);
      FaceForm d = face_add(a, face_scale(-1.0, b));
      CHECK(std::sqrt(face_inner(d, d)) <= 1e-12);
      FaceForm a2 = polyfield_average(mesh, field, f, star);
      FaceForm b2 = field_average(sp.V, c, f, star);
      FaceForm d2 = face_add(a2, face_scale(-1.0, b2));
      CHECK(std::sqrt(face_inner(d2, d2)) <= 1e-12);
    }
}

TEST_CASE("right-hand side integrates the load against test functions") {
  MeshComplex mesh = build_structured_mesh(2);
  ManufacturedSolution ms = manufactured_solution(1);
  ProblemConfig cfg;
  cfg.k = 1;
  cfg.degree = 0;
  cfg.trimmed = true;
  AssembledSystem sys = assemble(Method::xg3, mesh, cfg, ms.f);
  int oU = sys.layout.offset_of("u");
  // spot-check a few entries against a much finer quadrature
  for (int t : {0, 3}) {
    auto co = cell_coords(mesh, t);
    for (size_t i = 0; i < sys.spaces.V.cell_dofs[t].size(); ++i) {
      double want = 0;
      const PolyForm& b = sys.spaces.V.cell_basis[t][i];
      for (const auto& qp : triangle_rule(co[0], co[1], co[2], 40))
        for (int cpn = 0; cpn < 2; ++cpn)
          want += qp.w * ms.f.eval(cpn, qp.p) * b.eval(cpn, qp.p);
      CHECK(sys.rhs[oU + sys.spaces.V.cell_dofs[t][i]] ==
            doctest::Approx(-want).epsilon(1e-10));
    }
  }
}

TEST_CASE("assembly rejects unsupported configurations") {
  MeshComplex mesh = build_structured_mesh(1);
  ManufacturedSolution ms = manufactured_solution(1);
  ProblemConfig cfg;
  cfg.k = 1;
  cfg.degree = 0;
  cfg.trimmed = false;  // no conforming complete 1-form space at degree 0
  CHECK_THROWS(assemble(Method::afw, mesh, cfg, ms.f));
  cfg.trimmed = true;
  CHECK_THROWS(assemble(Method::hdg, mesh, cfg, ms.f));
}
