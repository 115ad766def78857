#include "xg/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/SparseLU>

#include "xg/forms.hpp"
#include "xg/hybridize.hpp"
#include "xg/quadrature.hpp"
#include "xg/spaces.hpp"

namespace xg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double lap() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int ncomp(int k) { return (k < 0 || k > 2) ? 0 : form_components(k); }

double teval(const TrigField& w, int c, Vec2 p) {
  return c < static_cast<int>(w.comp.size()) ? w.comp[c].eval(p) : 0.0;
}

double peval(const PolyForm& w, int c, Vec2 p) {
  return c < static_cast<int>(w.comp.size()) ? w.eval(c, p) : 0.0;
}

// integral over the mesh of |exact - discrete|^2
double diff_l2sq(const MeshComplex& mesh, const TrigField& exact,
                 const std::vector<PolyForm>& field, int quad_degree) {
  double acc = 0.0;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    const auto co = cell_coords(mesh, t);
    const int nc =
        std::max(ncomp(exact.k),
                 t < static_cast<int>(field.size()) ? ncomp(field[t].k) : 0);
    if (nc == 0) continue;
    for (const QuadPoint& q : triangle_rule(co[0], co[1], co[2], quad_degree))
      for (int c = 0; c < nc; ++c) {
        const double d = teval(exact, c, q.p) -
                         (t < static_cast<int>(field.size())
                              ? peval(field[t], c, q.p)
                              : 0.0);
        acc += q.w * d * d;
      }
  }
  return acc;
}

// scaled trace-jump seminorm of the discrete field: (1/rho) sum_E h_E^{-1}
// ||jump||^2, over interior faces (star = false) or all faces (star = true,
// where the boundary term is the one-sided star trace)
double jump_sq(const MeshComplex& mesh, const std::vector<PolyForm>& field,
               bool star, bool include_boundary, double rho) {
  double acc = 0.0;
  if (field.empty() || ncomp(field.front().k) == 0) return 0.0;
  for (int f = 0; f < mesh.n_faces(); ++f) {
    if (mesh.faces[f].boundary && !include_boundary) continue;
    const FaceForm j = polyfield_jump(mesh, field, f, star);
    if (j.deg < 0) continue;
    acc += (1.0 / rho) * (1.0 / mesh.faces[f].length) * face_inner(j, j);
  }
  return acc;
}

std::vector<PolyForm> regime_derivative(const std::vector<PolyForm>& field,
                                        bool starred) {
  std::vector<PolyForm> out(field.size());
  for (size_t t = 0; t < field.size(); ++t)
    out[t] = ncomp(field[t].k) == 0
                 ? zero_form(-1, field[t].chart)
                 : (starred ? coderivative(field[t])
                            : exterior_derivative(field[t]));
  return out;
}

int max_field_degree(const FieldExtract& fe) {
  int p = 0;
  for (const auto* v : {&fe.sigma, &fe.u, &fe.xi})
    for (const PolyForm& w : *v) p = std::max(p, w.degree());
  return p;
}

FieldExtract fields_from_hybrid(const HybridSystem& hs,
                                const Eigen::VectorXd& sigma,
                                const Eigen::VectorXd& xi,
                                const Eigen::VectorXd& u) {
  FieldExtract fe;
  fe.k = hs.config.k;
  const MeshComplex& mesh = *hs.mesh;
  fe.sigma.resize(mesh.n_cells());
  fe.xi.resize(mesh.n_cells());
  fe.u.resize(mesh.n_cells());
  for (int t = 0; t < mesh.n_cells(); ++t) {
    const Chart chart = cell_chart(mesh, t);
    fe.sigma[t] = hs.spaces.Vm.absent() ? zero_form(fe.k - 1, chart)
                                        : cell_field(hs.spaces.Vm, sigma, t);
    fe.xi[t] = hs.spaces.Vp.absent() ? zero_form(fe.k + 1, chart)
                                     : cell_field(hs.spaces.Vp, xi, t);
    fe.u[t] = cell_field(hs.spaces.V, u, t);
  }
  return fe;
}

// run independent study points concurrently, each returning one table row;
// exceptions surface in submission order
template <typename Fn>
std::vector<std::vector<double>> collect_rows(int n, Fn&& fn) {
  std::vector<std::future<std::vector<double>>> futs;
  futs.reserve(n);
  for (int i = 0; i < n; ++i)
    futs.push_back(std::async(std::launch::async, fn, i));
  std::vector<std::vector<double>> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = futs[i].get();
  return rows;
}

ProblemConfig problem_config(const StudyConfig& cfg, double rho) {
  ProblemConfig pc;
  pc.k = cfg.k;
  pc.degree = cfg.degree;
  pc.trimmed = cfg.trimmed;
  pc.regime = cfg.regime;
  pc.rho = rho;
  pc.wrong_sign_penalty = cfg.wrong_sign;
  return pc;
}

void fill_meta(StudyReport& rep, const StudyConfig& cfg) {
  rep.study = cfg.study;
  rep.meta = {{"method", method_name(cfg.method)},
              {"regime", regime_name(cfg.regime)},
              {"k", std::to_string(cfg.k)},
              {"degree", std::to_string(cfg.degree)},
              {"family", cfg.trimmed ? "trimmed" : "complete"},
              {"seed", std::to_string(cfg.seed)}};
}

double rate_between(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0)) return kNaN;
  return std::log2(coarse / fine);
}

// least-squares slope of log(y) against log(x); NaN when degenerate
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || std::abs(den) < 1e-30) return kNaN;
  return (n * sxy - sx * sy) / den;
}

double rel_vec_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / (1.0 + b.norm());
}

// --- randomized-identity helpers (exactly representable dyadic data) ------

double dyadic(std::mt19937& rng) {
  std::uniform_int_distribution<int> d(-64, 64);
  return d(rng) / 16.0;
}

PolyForm random_form(int k, int max_deg, std::mt19937& rng, Chart chart = {}) {
  PolyForm w = zero_form(k, chart);
  for (auto& comp : w.comp)
    for (int i = 0; i <= max_deg; ++i)
      for (int j = 0; i + j <= max_deg; ++j)
        comp = comp + Poly2::monomial(i, j, dyadic(rng));
  return w;
}

MeshComplex random_triangle(std::mt19937& rng) {
  std::uniform_int_distribution<int> d(-16, 16);
  for (;;) {
    std::vector<Vec2> v(3);
    for (auto& p : v) p = {d(rng) / 16.0, d(rng) / 16.0};
    const double area2 = (v[1].x - v[0].x) * (v[2].y - v[0].y) -
                         (v[2].x - v[0].x) * (v[1].y - v[0].y);
    if (std::abs(area2) > 0.1) return make_mesh(v, {{0, 1, 2}});
  }
}

double max_abs_coeff(const PolyForm& w) {
  double m = 0;
  for (const auto& comp : w.comp)
    for (const auto& [ij, c] : comp.c) m = std::max(m, std::abs(c));
  return m;
}

Eigen::VectorXd random_vec(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = unif(rng);
  return v;
}

}  // namespace

int divisions_for_level(int level) {
  if (level < 1) throw std::invalid_argument("refinement level must be >= 1");
  return 1 << (level - 1);
}

int error_quadrature_degree(int max_poly_degree) {
  return 2 * std::max(max_poly_degree, 0) + 4;
}

ManufacturedSolution manufactured_case(int k) {
  ManufacturedSolution ms = manufactured_solution(k);
  const MeshComplex probe = build_structured_mesh(4);
  const double bc = boundary_compatibility(ms, probe);
  if (bc > 1e-10)
    throw std::runtime_error(
        "manufactured case failed the boundary-compatibility gate: residual " +
        fmt17(bc));
  if (k == 0) {
    double mean = 0.0;
    for (int t = 0; t < probe.n_cells(); ++t) {
      const auto co = cell_coords(probe, t);
      for (const QuadPoint& q : triangle_rule(co[0], co[1], co[2], 10))
        mean += q.w * teval(ms.u, 0, q.p);
    }
    if (std::abs(mean) > 1e-10)
      throw std::runtime_error(
          "manufactured scalar case failed the mean-zero gate: mean " +
          fmt17(mean));
  }
  return ms;
}

ErrorReport compute_errors(const MeshComplex& mesh, const ProblemConfig& cfg,
                           const FieldExtract& fields,
                           const ManufacturedSolution& ms) {
  if (fields.k != ms.k)
    throw std::invalid_argument("compute_errors: form degree mismatch");
  const bool starred =
      cfg.regime == Regime::two || cfg.regime == Regime::hybrid2;
  const int quad = error_quadrature_degree(max_field_degree(fields));

  ErrorReport rep;

  const double u_l2sq = diff_l2sq(mesh, ms.u, fields.u, quad);
  const TrigField du_ex = starred ? trig_delta(ms.u) : trig_d(ms.u);
  const double u_dsq =
      diff_l2sq(mesh, du_ex, regime_derivative(fields.u, starred), quad);
  const double u_jsq = jump_sq(mesh, fields.u, starred, starred, cfg.rho);
  rep.u_l2 = std::sqrt(u_l2sq);
  rep.u_triple = std::sqrt(u_l2sq + u_dsq + u_jsq);

  const double s_l2sq = diff_l2sq(mesh, ms.sigma, fields.sigma, quad);
  const TrigField ds_ex = starred ? trig_delta(ms.sigma) : trig_d(ms.sigma);
  const double s_dsq =
      diff_l2sq(mesh, ds_ex, regime_derivative(fields.sigma, starred), quad);
  const double s_jsq = jump_sq(mesh, fields.sigma, starred, starred, cfg.rho);
  rep.sigma_l2 = std::sqrt(s_l2sq);
  rep.sigma_triple = std::sqrt(s_l2sq + s_dsq + s_jsq);

  rep.xi_l2 = std::sqrt(diff_l2sq(mesh, ms.xi, fields.xi, quad));
  return rep;
}

ErrorReport compute_errors(const AssembledSystem& sys, const Eigen::VectorXd& x,
                           const ManufacturedSolution& ms) {
  return compute_errors(*sys.mesh, sys.config, extract_fields(sys, x), ms);
}

double stability_constant(const AssembledSystem& sys, int dense_limit) {
  const Eigen::SparseMatrix<double> N = norm_matrix(sys);
  if (sys.layout.total <= dense_limit) return infsup_estimate(sys.K, N).gamma;
  return infsup_estimate_iterative(sys.K, N);
}

ConformingGap conforming_gap(Method method, const MeshComplex& mesh,
                             const ProblemConfig& cfg, const TrigField& f) {
  const bool starred =
      cfg.regime == Regime::two || cfg.regime == Regime::hybrid2;

  FieldExtract broken;
  int dofs_broken = 0;
  if (method == Method::hdg) {
    const HybridSystem hs = hybridize(mesh, cfg, f);
    const HybridSolution sol = solve_hybrid(hs);
    if (!sol.report.ok)
      throw std::runtime_error("conforming_gap: condensed solve failed");
    broken = fields_from_hybrid(hs, sol.sigma, sol.xi, sol.u);
    dofs_broken = hs.flux_dim();
  } else {
    const AssembledSystem sys = assemble(method, mesh, cfg, f);
    const SolveReport rep = solve(sys);
    if (!rep.ok) throw std::runtime_error("conforming_gap: solve failed");
    broken = extract_fields(sys, rep.x);
    dofs_broken = sys.layout.total;
  }

  const Method conf = starred ? Method::afw_dual : Method::afw;
  const AssembledSystem csys = assemble(conf, mesh, cfg, f);
  const SolveReport crep = solve(csys);
  if (!crep.ok)
    throw std::runtime_error("conforming_gap: conforming solve failed");
  const FieldExtract conff = extract_fields(csys, crep.x);

  ConformingGap gap;
  gap.dofs_broken = dofs_broken;
  gap.dofs_conforming = csys.layout.total;
  const int nc = mesh.n_cells();
  std::vector<PolyForm> diff_aux(nc), diff_u(nc);
  double a_sq = 0, ad_sq = 0, u_sq = 0, ud_sq = 0;
  for (int t = 0; t < nc; ++t) {
    const auto co = cell_coords(mesh, t);
    const PolyForm& ba = starred ? broken.xi[t] : broken.sigma[t];
    const PolyForm& ca = starred ? conff.xi[t] : conff.sigma[t];
    diff_aux[t] = ncomp(ba.k) > 0 ? form_add(ba, form_scale(-1.0, ca))
                                  : zero_form(ba.k, ba.chart);
    diff_u[t] = form_add(broken.u[t], form_scale(-1.0, conff.u[t]));
    if (ncomp(diff_aux[t].k) > 0) {
      a_sq += inner_product(diff_aux[t], diff_aux[t], co[0], co[1], co[2]);
      const PolyForm da = starred ? coderivative(diff_aux[t])
                                  : exterior_derivative(diff_aux[t]);
      if (ncomp(da.k) > 0)
        ad_sq += inner_product(da, da, co[0], co[1], co[2]);
    }
    u_sq += inner_product(diff_u[t], diff_u[t], co[0], co[1], co[2]);
    const PolyForm du =
        starred ? coderivative(diff_u[t]) : exterior_derivative(diff_u[t]);
    if (ncomp(du.k) > 0) ud_sq += inner_product(du, du, co[0], co[1], co[2]);
  }
  gap.aux_l2 = std::sqrt(a_sq);
  gap.aux_d_l2 = std::sqrt(ad_sq);
  gap.u_l2 = std::sqrt(u_sq);
  gap.u_d_l2 = std::sqrt(ud_sq);
  gap.aux_jump =
      std::sqrt(jump_sq(mesh, diff_aux, starred, starred, cfg.rho));
  gap.u_jump = std::sqrt(jump_sq(mesh, diff_u, starred, starred, cfg.rho));
  return gap;
}

StudyReport convergence_study(const StudyConfig& in) {
  StudyConfig cfg = in;
  if (cfg.levels.empty()) cfg.levels = {2, 3, 4, 5};
  if (cfg.rhos.empty()) cfg.rhos = {1.0};
  const ProblemConfig pc = problem_config(cfg, cfg.rhos.front());
  const ManufacturedSolution ms = manufactured_case(cfg.k);

  const int n = static_cast<int>(cfg.levels.size());
  auto rows = collect_rows(n, [&](int i) -> std::vector<double> {
    const int level = cfg.levels[i];
    try {
      const Timer timer;
      const MeshComplex mesh =
          build_structured_mesh(divisions_for_level(level));
      ErrorReport err;
      int dofs = 0;
      double gamma = kNaN;
      if (cfg.method == Method::hdg) {
        const HybridSystem hs = hybridize(mesh, pc, ms.f);
        const HybridSolution sol = solve_hybrid(hs);
        if (!sol.report.ok) throw std::runtime_error("condensed solve failed");
        err = compute_errors(mesh, pc,
                             fields_from_hybrid(hs, sol.sigma, sol.xi, sol.u),
                             ms);
        dofs = hs.flux_dim();
      } else {
        const AssembledSystem sys = assemble(cfg.method, mesh, pc, ms.f);
        const SolveReport rep = solve(sys);
        if (!rep.ok) throw std::runtime_error("linear solve failed");
        err = compute_errors(sys, rep.x, ms);
        dofs = sys.layout.total;
        gamma = stability_constant(sys);
      }
      return {static_cast<double>(level), mesh.h_max(),
              static_cast<double>(dofs), err.sigma_triple,
              err.xi_l2,                 err.u_triple,
              kNaN,                      gamma,
              timer.lap()};
    } catch (const std::exception& e) {
      throw std::runtime_error("level " + std::to_string(level) + ": " +
                               e.what());
    }
  });

  StudyReport rep;
  fill_meta(rep, cfg);
  rep.columns = {"level",        "h_max",  "dofs",
                 "err_sigma_triple", "err_xi_l2", "err_u_triple",
                 "rate_u",       "gamma_h", "wall_s"};

  const bool has_sigma = std::any_of(rows.begin(), rows.end(),
                                     [](const auto& r) { return r[3] > 0.0; });
  double rate_u_final = kNaN, rate_sigma_final = kNaN;
  bool monotone_u = true, monotone_sigma = true;
  for (int i = 1; i < n; ++i) {
    rows[i][6] = rate_between(rows[i - 1][5], rows[i][5]);
    rate_u_final = rows[i][6];
    rate_sigma_final = rate_between(rows[i - 1][3], rows[i][3]);
    if (rows[i][5] > rows[i - 1][5] * (1.0 + 1e-9)) monotone_u = false;
    if (rows[i][3] > rows[i - 1][3] * (1.0 + 1e-9)) monotone_sigma = false;
  }
  double gamma_min = kNaN;
  for (const auto& r : rows)
    if (!std::isnan(r[7])) gamma_min = std::isnan(gamma_min) ? r[7] : std::min(gamma_min, r[7]);
  rep.rows = std::move(rows);

  const double expected = cfg.degree + 1;
  rep.summary = {{"expected_order", expected},
                 {"rate_u_final", rate_u_final},
                 {"rate_sigma_final", has_sigma ? rate_sigma_final : kNaN},
                 {"monotone_u", monotone_u ? 1.0 : 0.0},
                 {"monotone_sigma", (!has_sigma || monotone_sigma) ? 1.0 : 0.0},
                 {"err_u_final", rep.rows.back()[5]},
                 {"err_sigma_final", rep.rows.back()[3]},
                 {"gamma_min", gamma_min}};

  const double need = expected <= 1.0 ? 0.85 : 0.9 * expected;
  std::string msg;
  if (!(rate_u_final >= need))
    msg += "rate_u_final " + fmt17(rate_u_final) + " < " + fmt17(need) + "; ";
  if (has_sigma && !(rate_sigma_final >= need))
    msg += "rate_sigma_final " + fmt17(rate_sigma_final) + " < " + fmt17(need) +
           "; ";
  if (!monotone_u) msg += "u error not monotone; ";
  if (has_sigma && !monotone_sigma) msg += "sigma error not monotone; ";
  rep.thresholds_ok = msg.empty();
  rep.threshold_message = msg;
  return rep;
}

StudyReport rho_limit_study(const StudyConfig& in) {
  StudyConfig cfg = in;
  if (cfg.levels.empty()) cfg.levels = {3};
  if (cfg.rhos.empty()) cfg.rhos = {1.0, 0.25, 0.0625, 0.015625};
  const ManufacturedSolution ms = manufactured_case(cfg.k);

  const int nl = static_cast<int>(cfg.levels.size());
  const int nr = static_cast<int>(cfg.rhos.size());
  auto rows = collect_rows(nl * nr, [&](int idx) -> std::vector<double> {
    const int level = cfg.levels[idx / nr];
    const double rho = cfg.rhos[idx % nr];
    try {
      const Timer timer;
      const MeshComplex mesh =
          build_structured_mesh(divisions_for_level(level));
      const ConformingGap gap =
          conforming_gap(cfg.method, mesh, problem_config(cfg, rho), ms.f);
      return {static_cast<double>(level),
              rho,
              mesh.h_max(),
              static_cast<double>(gap.dofs_broken),
              gap.aux_l2,
              gap.aux_d_l2,
              gap.u_l2,
              gap.u_d_l2,
              gap.plain(),
              gap.nonconformity(),
              timer.lap()};
    } catch (const std::exception& e) {
      throw std::runtime_error("level " + std::to_string(level) + ", rho " +
                               fmt17(rho) + ": " + e.what());
    }
  });

  StudyReport rep;
  fill_meta(rep, cfg);
  rep.columns = {"level",       "rho",           "h_max",
                 "dofs",        "diff_aux_l2",   "diff_aux_d_l2",
                 "diff_u_l2",   "diff_u_d_l2",   "d_plain",
                 "d_jump",      "wall_s"};
  rep.rows = std::move(rows);

  bool monotone = true;
  double slope_first = kNaN, slope_plain_first = kNaN;
  std::string msg;
  for (int li = 0; li < nl; ++li) {
    std::vector<double> xs, plain, jump;
    for (int ri = 0; ri < nr; ++ri) {
      const auto& r = rep.rows[li * nr + ri];
      xs.push_back(r[1]);
      plain.push_back(r[8]);
      jump.push_back(r[9]);
      if (ri > 0) {
        const auto& prev = rep.rows[li * nr + ri - 1];
        if (r[8] > prev[8] * (1.0 + 1e-9) || r[9] > prev[9] * (1.0 + 1e-9))
          monotone = false;
      }
    }
    const double slope = loglog_slope(xs, jump);
    rep.summary.emplace_back("slope_fit_l" + std::to_string(cfg.levels[li]),
                             slope);
    if (li == 0) {
      slope_first = slope;
      slope_plain_first = loglog_slope(xs, plain);
    }
  }
  rep.summary.insert(rep.summary.begin(),
                     {{"slope_fit", slope_first},
                      {"slope_plain", slope_plain_first}});
  rep.summary.emplace_back("monotone_d", monotone ? 1.0 : 0.0);

  if (!(slope_first >= 0.4 && slope_first <= 0.75))
    msg += "slope_fit " + fmt17(slope_first) + " outside [0.4, 0.75]; ";
  if (!monotone) msg += "gap not non-increasing along the rho sequence; ";
  rep.thresholds_ok = msg.empty();
  rep.threshold_message = msg;
  return rep;
}

StudyReport infsup_sweep(const StudyConfig& in) {
  StudyConfig cfg = in;
  if (cfg.levels.empty()) cfg.levels = {2, 3, 4};
  if (cfg.rhos.empty()) cfg.rhos = {1.0, 0.1, 0.01};
  const ManufacturedSolution ms = manufactured_case(cfg.k);

  const int nl = static_cast<int>(cfg.levels.size());
  const int nr = static_cast<int>(cfg.rhos.size());
  auto rows = collect_rows(nl * nr, [&](int idx) -> std::vector<double> {
    const int level = cfg.levels[idx / nr];
    const double rho = cfg.rhos[idx % nr];
    try {
      const Timer timer;
      const MeshComplex mesh =
          build_structured_mesh(divisions_for_level(level));
      const AssembledSystem sys =
          assemble(cfg.method, mesh, problem_config(cfg, rho), ms.f);
      const double gamma = stability_constant(sys);
      return {static_cast<double>(level), rho,
              mesh.h_max(),               static_cast<double>(sys.layout.total),
              gamma,                      timer.lap()};
    } catch (const std::exception& e) {
      throw std::runtime_error("level " + std::to_string(level) + ", rho " +
                               fmt17(rho) + ": " + e.what());
    }
  });

  StudyReport rep;
  fill_meta(rep, cfg);
  rep.columns = {"level", "rho", "h_max", "dofs", "gamma_h", "wall_s"};
  rep.rows = std::move(rows);

  double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0;
  double column_ratio_min = std::numeric_limits<double>::infinity();
  for (int ri = 0; ri < nr; ++ri) {
    double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
    for (int li = 0; li < nl; ++li) {
      const double g = rep.rows[li * nr + ri][4];
      cmin = std::min(cmin, g);
      cmax = std::max(cmax, g);
    }
    gmin = std::min(gmin, cmin);
    gmax = std::max(gmax, cmax);
    column_ratio_min =
        std::min(column_ratio_min, cmax > 0.0 ? cmin / cmax : 0.0);
  }
  rep.summary = {{"gamma_min", gmin},
                 {"gamma_max", gmax},
                 {"ratio_overall", gmax > 0.0 ? gmin / gmax : 0.0},
                 {"percolumn_ratio_min", column_ratio_min},
                 {"n_points", static_cast<double>(nl * nr)}};

  std::string msg;
  if (!(gmin > 0.0)) msg += "gamma_min is not positive; ";
  if (!(column_ratio_min >= 0.5))
    msg += "per-rho min/max ratio " + fmt17(column_ratio_min) + " < 0.5; ";
  rep.thresholds_ok = msg.empty();
  rep.threshold_message = msg;
  return rep;
}

StudyReport identity_study(const StudyConfig& cfg) {
  const int trials = 100;
  std::mt19937 rng(cfg.seed);
  const MeshComplex mesh = build_structured_mesh(2);
  GlobalSpace broken_lo[2] = {make_broken_space(mesh, {0, 2, false}),
                              make_broken_space(mesh, {1, 2, false})};
  GlobalSpace broken_hi[2] = {make_broken_space(mesh, {1, 2, false}),
                              make_broken_space(mesh, {2, 2, false})};

  StudyReport rep;
  fill_meta(rep, cfg);
  rep.columns = {"case", "dd_residual", "delta_delta_residual", "ibp_residual",
                 "jump_residual"};

  double dd_max = 0, deld_max = 0, ibp_max = 0, jmp_max = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const int k = trial % 2;

    const PolyForm w0 = random_form(0, 3, rng);
    const double dd =
        max_abs_coeff(exterior_derivative(exterior_derivative(w0))) /
        (1.0 + max_abs_coeff(w0));

    const PolyForm w2 = random_form(2, 3, rng);
    const double deld = max_abs_coeff(coderivative(coderivative(w2))) /
                        (1.0 + max_abs_coeff(w2));

    // elementwise integration by parts on a random triangle
    const MeshComplex tri = random_triangle(rng);
    const Chart chart{tri.vertices[0], 1.0};
    const PolyForm w = random_form(k, 3, rng, chart);
    const PolyForm m = random_form(k + 1, 3, rng, chart);
    const Vec2 A = tri.vertices[tri.cells[0][0]],
               B = tri.vertices[tri.cells[0][1]],
               C = tri.vertices[tri.cells[0][2]];
    const double vol = inner_product(exterior_derivative(w), m, A, B, C) -
                       inner_product(w, coderivative(m), A, B, C);
    double edge = 0.0, mag = std::abs(vol);
    for (const CellFace& cf : tri.cell_faces[0]) {
      FaceForm tw = trace_on_face(tri, cf.face, w);
      FaceForm tsm = trace_on_face(tri, cf.face, hodge_star(m));
      const double term = cf.sign * face_inner(face_star(tw), tsm);
      edge += term;
      mag += std::abs(term);
    }
    const double ibp = std::abs(vol - edge) / (1.0 + mag);

    // global pairing identity: elementwise boundary sums equal the
    // jump/average splitting over faces
    const GlobalSpace& s1 = broken_lo[k];
    const GlobalSpace& s2 = broken_hi[k];
    const Eigen::VectorXd c1 = random_vec(s1.dim, rng);
    const Eigen::VectorXd c2 = random_vec(s2.dim, rng);
    double lhs = 0.0;
    for (int t = 0; t < mesh.n_cells(); ++t) {
      const PolyForm f1 = cell_field(s1, c1, t);
      const PolyForm f2s = hodge_star(cell_field(s2, c2, t));
      for (const CellFace& cf : mesh.cell_faces[t])
        lhs += cf.sign * face_inner(face_star(trace_on_face(mesh, cf.face, f1)),
                                    trace_on_face(mesh, cf.face, f2s));
    }
    double rhs = 0.0;
    for (int f = 0; f < mesh.n_faces(); ++f) {
      rhs += face_inner(face_star(field_average(s1, c1, f, false)),
                        field_jump(s2, c2, f, true)) +
             face_inner(face_star(field_jump(s1, c1, f, false)),
                        field_average(s2, c2, f, true));
    }
    const double jmp = std::abs(lhs - rhs) / (1.0 + std::abs(lhs) + std::abs(rhs));

    rep.rows.push_back({static_cast<double>(trial), dd, deld, ibp, jmp});
    dd_max = std::max(dd_max, dd);
    deld_max = std::max(deld_max, deld);
    ibp_max = std::max(ibp_max, ibp);
    jmp_max = std::max(jmp_max, jmp);
  }

  rep.summary = {{"dd_residual_max", dd_max},
                 {"delta_delta_residual_max", deld_max},
                 {"ibp_residual_max", ibp_max},
                 {"jump_residual_max", jmp_max},
                 {"cases", static_cast<double>(trials)}};
  std::string msg;
  if (!(dd_max <= 1e-12)) msg += "d.d residual above 1e-12; ";
  if (!(deld_max <= 1e-12)) msg += "delta.delta residual above 1e-12; ";
  if (!(ibp_max <= 1e-12)) msg += "integration-by-parts residual above 1e-12; ";
  if (!(jmp_max <= 1e-12)) msg += "jump-splitting residual above 1e-12; ";
  rep.thresholds_ok = msg.empty();
  rep.threshold_message = msg;
  return rep;
}

StudyReport hybridize_check(const StudyConfig& in) {
  StudyConfig cfg = in;
  if (cfg.levels.empty()) cfg.levels = {2, 3};
  if (cfg.rhos.empty()) cfg.rhos = {1.0};
  if (cfg.regime == Regime::one) cfg.regime = Regime::hybrid1;
  if (cfg.regime == Regime::two) cfg.regime = Regime::hybrid2;
  const ManufacturedSolution ms = manufactured_case(cfg.k);
  const ProblemConfig pc = problem_config(cfg, cfg.rhos.front());

  const int n = static_cast<int>(cfg.levels.size());
  auto rows = collect_rows(n, [&](int i) -> std::vector<double> {
    const int level = cfg.levels[i];
    try {
      const Timer timer;
      const MeshComplex mesh =
          build_structured_mesh(divisions_for_level(level));
      const AssembledSystem mono = assemble(Method::xg7, mesh, pc, ms.f);
      const SolveReport mrep = solve(mono);
      if (!mrep.ok) throw std::runtime_error("monolithic solve failed");
      const HybridSystem hs = hybridize(mesh, pc, ms.f);
      const HybridSolution sol = solve_hybrid(hs);
      if (!sol.report.ok) throw std::runtime_error("condensed solve failed");

      double field_rel =
          std::max(rel_vec_diff(sol.sigma, mono.layout.segment("sigma", mrep.x)),
                   rel_vec_diff(sol.u, mono.layout.segment("u", mrep.x)));
      if (mono.layout.has("xi"))
        field_rel = std::max(
            field_rel, rel_vec_diff(sol.xi, mono.layout.segment("xi", mrep.x)));
      const double flux_rel =
          rel_vec_diff(sol.flux, fluxes_from_monolithic(hs, mono, mrep.x));

      // independent Schur-action probes through the unreduced blocks
      const Eigen::SparseMatrix<double> K = hybrid_full_matrix(hs);
      const int nF = hs.n_fields, nfx = hs.flux_dim();
      std::vector<Eigen::Triplet<double>> tm, tg;
      for (int o = 0; o < K.outerSize(); ++o)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, o); it; ++it) {
          if (it.row() < nF && it.col() < nF)
            tm.emplace_back(it.row(), it.col(), it.value());
          else if (it.row() < nF && it.col() >= nF)
            tg.emplace_back(it.row(), static_cast<int>(it.col()) - nF,
                            it.value());
        }
      Eigen::SparseMatrix<double> M(nF, nF), G(nF, nfx);
      M.setFromTriplets(tm.begin(), tm.end());
      G.setFromTriplets(tg.begin(), tg.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(M);
      if (lu.info() != Eigen::Success)
        throw std::runtime_error("interior block factorization failed");
      std::mt19937 rng(500 + level);
      double schur = 0.0;
      for (int probe = 0; probe < 3; ++probe) {
        const Eigen::VectorXd y = random_vec(nfx, rng);
        const Eigen::VectorXd via_blocks =
            hs.F * y - G.transpose() * lu.solve(Eigen::VectorXd(G * y));
        schur = std::max(schur,
                         rel_vec_diff(Eigen::VectorXd(hs.Kc * y), via_blocks));
      }

      return {static_cast<double>(level),
              mesh.h_max(),
              static_cast<double>(nfx),
              static_cast<double>(mono.layout.total),
              field_rel,
              flux_rel,
              schur,
              timer.lap()};
    } catch (const std::exception& e) {
      throw std::runtime_error("level " + std::to_string(level) + ": " +
                               e.what());
    }
  });

  StudyReport rep;
  fill_meta(rep, cfg);
  rep.columns = {"level",          "h_max",
                 "dofs_condensed", "dofs_monolithic",
                 "field_rel_diff", "flux_rel_diff",
                 "schur_action_resid", "wall_s"};
  rep.rows = std::move(rows);

  double field_max = 0, flux_max = 0, schur_max = 0;
  for (const auto& r : rep.rows) {
    field_max = std::max(field_max, r[4]);
    flux_max = std::max(flux_max, r[5]);
    schur_max = std::max(schur_max, r[6]);
  }
  rep.summary = {{"field_rel_max", field_max},
                 {"flux_rel_max", flux_max},
                 {"schur_action_resid_max", schur_max}};
  std::string msg;
  if (!(field_max <= 1e-8)) msg += "field round trip above 1e-8; ";
  if (!(flux_max <= 1e-8)) msg += "flux round trip above 1e-8; ";
  if (!(schur_max <= 1e-10)) msg += "Schur action residual above 1e-10; ";
  rep.thresholds_ok = msg.empty();
  rep.threshold_message = msg;
  return rep;
}

StudyReport run_study(const StudyConfig& cfg) {
  if (cfg.study == "converge") return convergence_study(cfg);
  if (cfg.study == "rholimit") return rho_limit_study(cfg);
  if (cfg.study == "infsup") return infsup_sweep(cfg);
  if (cfg.study == "identities") return identity_study(cfg);
  if (cfg.study == "hybridize-check") return hybridize_check(cfg);
  throw std::invalid_argument("unknown study '" + cfg.study + "'\n" +
                              usage_text());
}

std::string to_csv(const StudyReport& report) {
  std::string out;
  for (size_t c = 0; c < report.columns.size(); ++c) {
    if (c) out += ',';
    out += report.columns[c];
  }
  out += '\n';
  for (const auto& row : report.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += fmt17(row[c]);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out;
}

std::string json_number(double v) {
  if (std::isnan(v)) return "null";
  return fmt17(v);
}

}  // namespace

std::string to_json(const StudyReport& report) {
  std::string out = "{\n";
  out += "  \"schema_version\": 1,\n";
  out += "  \"study\": \"" + json_escape(report.study) + "\",\n";
  out += "  \"meta\": {";
  for (size_t i = 0; i < report.meta.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + json_escape(report.meta[i].first) + "\": \"" +
           json_escape(report.meta[i].second) + "\"";
  }
  out += "},\n  \"columns\": [";
  for (size_t i = 0; i < report.columns.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + json_escape(report.columns[i]) + "\"";
  }
  out += "],\n  \"rows\": [\n";
  for (size_t r = 0; r < report.rows.size(); ++r) {
    out += "    [";
    for (size_t c = 0; c < report.rows[r].size(); ++c) {
      if (c) out += ", ";
      out += json_number(report.rows[r][c]);
    }
    out += r + 1 < report.rows.size() ? "],\n" : "]\n";
  }
  out += "  ],\n  \"summary\": {";
  for (size_t i = 0; i < report.summary.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + json_escape(report.summary[i].first) +
           "\": " + json_number(report.summary[i].second);
  }
  out += "},\n";
  out += std::string("  \"thresholds_ok\": ") +
         (report.thresholds_ok ? "true" : "false") + ",\n";
  out += "  \"threshold_message\": \"" +
         json_escape(report.threshold_message) + "\"\n";
  out += "}\n";
  return out;
}

void write_report(const StudyReport& report, const std::string& out_path,
                  const std::string& format) {
  std::string text;
  if (format == "json")
    text = to_json(report);
  else if (format == "csv")
    text = to_csv(report);
  else
    throw std::invalid_argument("unknown format '" + format + "'");
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot open output file " + out_path);
  f << text;
}

std::string usage_text() {
  return
      "usage: xg <subcommand> [flags]\n"
      "subcommands:\n"
      "  converge         manufactured-solution convergence table\n"
      "  rholimit         gap to the conforming solution along a rho sequence\n"
      "  infsup           inf-sup constants over a level x rho grid\n"
      "  hybridize-check  condensed vs monolithic round trip\n"
      "  identities       randomized exact-calculus identity checks\n"
      "flags:\n"
      "  --config <file>        key = value lines with the keys below\n"
      "  --k <0|1|2>            form degree\n"
      "  --degree <r>           polynomial degree parameter\n"
      "  --family <complete|trimmed>\n"
      "  --regime <1|2|h1|h2>   penalty regime\n"
      "  --rho <list>           comma-separated positive penalty scales\n"
      "  --levels <list>        comma-separated levels, or a..b\n"
      "  --method <name>        xg7 xg4a xg4b xg3 afw afw_dual hdg\n"
      "  --out <path>           write the table to a file (default stdout)\n"
      "  --format <csv|json>\n"
      "  --assert               exit 2 when the study thresholds fail\n";
}

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string trimmed_copy(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::invalid_argument("cannot parse " + what + " '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::invalid_argument("cannot parse " + what + " '" + s + "'");
  }
}

std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> levels;
  const size_t dots = s.find("..");
  if (dots != std::string::npos) {
    const int a = parse_int(s.substr(0, dots), "level");
    const int b = parse_int(s.substr(dots + 2), "level");
    if (a < 1 || b < a) throw std::invalid_argument("bad level range " + s);
    for (int l = a; l <= b; ++l) levels.push_back(l);
    return levels;
  }
  for (const std::string& part : split_commas(s)) {
    const int l = parse_int(trimmed_copy(part), "level");
    if (l < 1) throw std::invalid_argument("levels must be >= 1");
    levels.push_back(l);
  }
  return levels;
}

std::vector<double> parse_rhos(const std::string& s) {
  std::vector<double> rhos;
  for (const std::string& part : split_commas(s)) {
    const double r = parse_double(trimmed_copy(part), "rho");
    if (!(r > 0.0)) throw std::invalid_argument("rho values must be positive");
    rhos.push_back(r);
  }
  return rhos;
}

void apply_key(StudyConfig& cfg, const std::string& key,
               const std::string& value) {
  if (key == "k") {
    cfg.k = parse_int(value, "k");
    if (cfg.k < 0 || cfg.k > 2)
      throw std::invalid_argument("k must be 0, 1, or 2");
  } else if (key == "degree") {
    cfg.degree = parse_int(value, "degree");
    if (cfg.degree < 0) throw std::invalid_argument("degree must be >= 0");
  } else if (key == "family") {
    if (value == "trimmed")
      cfg.trimmed = true;
    else if (value == "complete")
      cfg.trimmed = false;
    else
      throw std::invalid_argument("family must be complete or trimmed");
  } else if (key == "regime") {
    if (!regime_from_name(value, cfg.regime))
      throw std::invalid_argument("unknown regime '" + value + "'");
  } else if (key == "rho") {
    cfg.rhos = parse_rhos(value);
  } else if (key == "levels") {
    cfg.levels = parse_levels(value);
  } else if (key == "method") {
    if (!method_from_name(value, cfg.method))
      throw std::invalid_argument("unknown method '" + value + "'");
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "format") {
    if (value != "csv" && value != "json")
      throw std::invalid_argument("format must be csv or json");
    cfg.format = value;
  } else if (key == "assert") {
    cfg.assert_thresholds = value.empty() || value == "true" || value == "1";
  } else if (key == "seed") {
    cfg.seed = static_cast<unsigned>(parse_int(value, "seed"));
  } else {
    throw std::invalid_argument("unknown key '" + key + "'\n" + usage_text());
  }
}

void apply_config_file(StudyConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file " + path);
  std::string line;
  while (std::getline(f, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trimmed_copy(line);
    if (line.empty()) continue;
    size_t sep = line.find('=');
    if (sep == std::string::npos) sep = line.find_first_of(" \t");
    if (sep == std::string::npos)
      throw std::invalid_argument("bad config line '" + line + "'");
    const std::string key = trimmed_copy(line.substr(0, sep));
    const std::string value = trimmed_copy(line.substr(sep + 1));
    apply_key(cfg, key, value);
  }
}

}  // namespace

StudyConfig parse_study_args(const std::vector<std::string>& args) {
  if (args.empty()) throw std::invalid_argument(usage_text());
  StudyConfig cfg;
  cfg.study = args[0];
  const bool known =
      cfg.study == "converge" || cfg.study == "rholimit" ||
      cfg.study == "infsup" || cfg.study == "hybridize-check" ||
      cfg.study == "identities";
  if (!known)
    throw std::invalid_argument("unknown subcommand '" + cfg.study + "'\n" +
                                usage_text());

  // config file first, then flags override in order
  for (size_t i = 1; i < args.size(); ++i)
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw std::invalid_argument("--config needs a path");
      apply_config_file(cfg, args[i + 1]);
    }

  for (size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      ++i;  // applied above
      continue;
    }
    if (a == "--assert") {
      cfg.assert_thresholds = true;
      continue;
    }
    if (a.rfind("--", 0) != 0)
      throw std::invalid_argument("unexpected argument '" + a + "'\n" +
                                  usage_text());
    if (i + 1 >= args.size())
      throw std::invalid_argument("flag " + a + " needs a value");
    apply_key(cfg, a.substr(2), args[++i]);
  }
  return cfg;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  StudyConfig cfg;
  try {
    cfg = parse_study_args(args);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 1;
  }
  try {
    const StudyReport rep = run_study(cfg);
    const std::string text =
        cfg.format == "json" ? to_json(rep) : to_csv(rep);
    if (cfg.out.empty()) {
      out << text;
    } else {
      std::ofstream f(cfg.out);
      if (!f) throw std::runtime_error("cannot open output file " + cfg.out);
      f << text;
    }
    for (const auto& [key, value] : rep.summary)
      err << key << " = " << fmt17(value) << "\n";
    if (cfg.assert_thresholds && !rep.thresholds_ok) {
      err << "threshold violation: " << rep.threshold_message << "\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace xg
