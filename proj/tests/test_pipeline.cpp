#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "viflow/run.hpp"
#include "viflow/vi.hpp"

using namespace viflow;

namespace {

BoundaryPatch mk(int tag, int kind) {
  BoundaryPatch p;
  p.tag = tag;
  p.kind = kind;
  return p;
}

// Driven cavity with a polynomial lid and leaky walls: bottom slip (8),
// left leak (9), right wall split into outflow-only (10, lower half) and
// inflow-only (11, upper half).
ProblemDef cavity_mixed_def(int n, double lid, double g8, double g9, double g10, double g11,
                            const std::string& equation = "stokes") {
  ProblemDef def;
  def.mesh = make_square_mesh(n, 8, 10, 1, 9);
  retag_boundary(def.mesh, [](const Vec2& x) {
    if (std::abs(x.y() - 1) < 1e-12) return 1;       // lid
    if (std::abs(x.y()) < 1e-12) return 8;           // bottom
    if (std::abs(x.x()) < 1e-12) return 9;           // left
    return x.y() < 0.5 ? 10 : 11;                    // right
  });
  BoundaryPatch p1 = mk(1, 1);
  p1.h_vec = [lid](const Vec2& x) {
    double s = x.x() * (1 - x.x());
    return Vec2(16 * lid * s * s, 0.0);
  };
  BoundaryPatch p8 = mk(8, 8);
  p8.h_scalar = [](const Vec2&) { return 0.0; };
  p8.g = [g8](const Vec2&) { return g8; };
  BoundaryPatch p9 = mk(9, 9);
  p9.h_scalar = [](const Vec2&) { return 0.0; };
  p9.g = [g9](const Vec2&) { return g9; };
  BoundaryPatch p10 = mk(10, 10);
  p10.g = [g10](const Vec2&) { return g10; };
  BoundaryPatch p11 = mk(11, 11);
  p11.g = [g11](const Vec2&) { return g11; };
  def.patches = {p1, p8, p9, p10, p11};
  def.equation = equation;
  def.nu = 1.0;
  def.solver.tol = 1e-10;
  return def;
}

}  // namespace

TEST_CASE("dofmap: all-Dirichlet square fixes every boundary dof") {
  ProblemDef def = quartic_channel_mms_def(3);
  auto s = build_setup(std::move(def), false, false);
  for (const auto& ng : s->geom.nodes) {
    CHECK(s->dofs.w_fixed[2 * ng.node]);
    CHECK(s->dofs.w_fixed[2 * ng.node + 1]);
    CHECK(!s->dofs.rotated[ng.node]);
  }
}

TEST_CASE("dofmap: slip bottom fixes the normal component only") {
  ProblemDef def = poiseuille_channel_def(3, 8, 1.0);
  auto s = build_setup(std::move(def), false, false);
  int checked = 0;
  for (int node = 0; node < s->space.n_scalar(); ++node) {
    Vec2 x = s->space.nodes[node];
    if (std::abs(x.y()) > 1e-12 || x.x() < 1e-12 || x.x() > 2 - 1e-12) continue;
    CHECK(s->dofs.rotated[node]);
    CHECK(s->dofs.w_fixed[2 * node]);        // normal fixed
    CHECK(!s->dofs.w_fixed[2 * node + 1]);   // tangential free (slip dof)
    CHECK(s->dofs.lift_fixed[2 * node + 1]); // lifting pins the tangential trace
    ++checked;
  }
  CHECK(checked > 3);
}

TEST_CASE("dofmap: disk with normal-fixed boundary keeps tangentials free") {
  ProblemDef def;
  def.mesh = make_disk_mesh(24, 2, 3);
  BoundaryPatch p3 = mk(3, 3);
  p3.declared_convex = true;
  def.patches = {p3};
  def.equation = "stokes";
  def.f = [](const Vec2& p) { return Vec2(-p.y(), p.x()); };
  auto s = build_setup(std::move(def), true, false);  // no kind-1 patch: override
  for (const auto& ng : s->geom.nodes) {
    CHECK(s->dofs.rotated[ng.node]);
    CHECK(s->dofs.w_fixed[2 * ng.node]);
    CHECK(!s->dofs.w_fixed[2 * ng.node + 1]);
  }
}

TEST_CASE("stokes cavity solve: estimate and divergence") {
  ProblemDef def = cavity_mixed_def(6, 0.5, 2.0, 2.0, 2.0, 2.0);
  auto s = build_setup(std::move(def));
  SchemeResult r = run_scheme(*s, s->def.solver);
  REQUIRE(r.report.converged);
  CHECK(r.report.vi_res <= 1e-10);
  CHECK(r.report.div_res <= 1e-9);
  CHECK(r.report.energy_bound_ok);
  FlowSolution sol = postprocess(*s, r, 1e-10);
  CHECK(sol.comp.pass(1e-6));
  CHECK(sol.mult.equation_residual <= 1e-8);
}

TEST_CASE("large threshold reproduces the no-slip channel to machine precision") {
  auto slip = build_setup(poiseuille_channel_def(4, 8, 1e6));
  auto wall = build_setup(poiseuille_channel_def(4, 1, 0));
  SchemeResult rs = run_scheme(*slip, slip->def.solver);
  SchemeResult rw = run_scheme(*wall, wall->def.solver);
  REQUIRE(rs.report.converged);
  REQUIRE(rw.report.converged);
  FlowSolution qs = postprocess(*slip, rs, 1e-10);
  FlowSolution qw = postprocess(*wall, rw, 1e-10);
  VectorXd d_cart = slip->dofs.to_cartesian(qs.v_full) - wall->dofs.to_cartesian(qw.v_full);
  VectorXd d = slip->dofs.R.transpose() * d_cart;
  SpMat G = assemble_h1_gram(slip->ctx);
  CHECK(std::sqrt(d.dot(G * d)) < 1e-8);
  // Exact parabola: the discrete solution is P2-exact.
  double err = std::sqrt(velocity_error_sq(
      slip->ctx, slip->dofs.to_cartesian(qs.v_full),
      [](const Vec2& p) { return Vec2(p.y() * (1 - p.y()), 0); },
      [](const Vec2& p) {
        Mat2 g = Mat2::Zero();
        g(0, 1) = 1 - 2 * p.y();
        return g;
      },
      true));
  CHECK(err < 1e-9);
}

TEST_CASE("small threshold lets the wall slip with sigma on the bound") {
  auto s = build_setup(poiseuille_channel_def(4, 8, 0.2));
  SchemeResult r = run_scheme(*s, s->def.solver);
  REQUIRE(r.report.converged);
  FlowSolution sol = postprocess(*s, r, 1e-10);
  CHECK(sol.comp.pass(1e-6));
  bool any_slip = false;
  for (const auto& e : sol.mult.sigma_tau)
    if (std::abs(e.trace) > 1e-6) {
      any_slip = true;
      CHECK(std::abs(e.value) == doctest::Approx(e.g).epsilon(1e-6));
      CHECK(e.value * e.trace < 0);  // stress opposes the slip
    }
  CHECK(any_slip);
}

TEST_CASE("navier-stokes schemes agree in the uniqueness regime") {
  ProblemDef def = cavity_mixed_def(5, 0.05, 0.5, 0.5, 0.5, 0.5, "navier-stokes-static");
  auto s = build_setup(std::move(def));
  SchemeResult ro = oseen_fixed_point(s->vi, 1e-11);
  SchemeResult rp = frozen_convection_picard(s->vi, 1e-11);
  REQUIRE(ro.report.converged);
  REQUIRE(rp.report.converged);
  CHECK(ro.report.uniqueness_value < 1.0);
  CHECK(s->vi.norm_of(ro.w - rp.w) <= 10 * 1e-11 * std::max(1.0, s->vi.norm_of(ro.w)) + 1e-10);
  for (double ratio : ro.report.contraction_ratios)
    CHECK(ratio <= ro.report.uniqueness_value + 0.1);
}

TEST_CASE("total-pressure problem solves and obeys the energy bound") {
  ProblemDef def = cavity_mixed_def(5, 0.3, 1.0, 1.0, 1.0, 1.0, "navier-stokes-total");
  auto s = build_setup(std::move(def));
  SchemeResult r = run_scheme(*s, s->def.solver);
  REQUIRE(r.report.converged);
  CHECK(r.report.energy_bound_ok);
  FlowSolution sol = postprocess(*s, r, 1e-10);
  CHECK(sol.comp.pass(1e-6));
}

TEST_CASE("one-sided patches keep the right trace signs") {
  ProblemDef def = cavity_mixed_def(6, 0.8, 0.05, 0.05, 0.02, 0.02);
  auto s = build_setup(std::move(def));
  SchemeResult r = run_scheme(*s, s->def.solver);
  REQUIRE(r.report.converged);
  FlowSolution sol = postprocess(*s, r, 1e-10);
  CHECK(sol.comp.pass(1e-6));
  for (const auto& e : sol.mult.sigma_plus) CHECK(e.trace >= -1e-10);
  for (const auto& e : sol.mult.sigma_minus) CHECK(e.trace <= 1e-10);
}

TEST_CASE("threshold independence of the estimate right-hand side") {
  ProblemDef base = cavity_mixed_def(4, 0.4, 1.0, 1.0, 1.0, 1.0);
  auto s1 = build_setup(base);
  auto s10 = build_setup(scale_thresholds(base, 10.0));
  SchemeResult r1 = run_scheme(*s1, base.solver);
  SchemeResult r10 = run_scheme(*s10, base.solver);
  REQUIRE(r1.report.converged);
  REQUIRE(r10.report.converged);
  CHECK(std::memcmp(&r1.report.energy_rhs, &r10.report.energy_rhs, sizeof(double)) == 0);
  CHECK(r1.report.w_norm <= r1.report.energy_rhs * (1 + 1e-8));
  CHECK(r10.report.w_norm <= r10.report.energy_rhs * (1 + 1e-8));
  CHECK(r10.report.w_norm <= r1.report.w_norm * (1 + 1e-10));  // more sticking, less motion
}

TEST_CASE("regularized-path scheme rejects one-sided constraints") {
  ProblemDef def = cavity_mixed_def(4, 0.4, 1.0, 1.0, 1.0, 1.0);
  def.solver.scheme = "regularized-path";
  auto s = build_setup(std::move(def));
  CHECK_THROWS_WITH_AS(run_scheme(*s, s->def.solver), doctest::Contains("one-sided"), Error);
}

TEST_CASE("regularized path agrees with the exact solver on a slip channel") {
  ProblemDef def = poiseuille_channel_def(3, 8, 0.3);
  def.solver.scheme = "regularized-path";
  def.solver.tol = 1e-9;
  auto s = build_setup(def);
  SchemeResult rg = run_scheme(*s, def.solver);
  SchemeResult re = oseen_fixed_point(s->vi, 1e-11);
  REQUIRE(re.report.converged);
  CHECK(rg.report.converged);
  CHECK(s->vi.norm_of(rg.w - re.w) < 1e-4);
  CHECK(rg.report.eps_bound_worst <= 1.0 + 1e-8);
}

TEST_CASE("leak wall: large threshold seals, small threshold leaks") {
  auto sealed = build_setup(poiseuille_channel_def(4, 9, 1e6));
  SchemeResult rs = run_scheme(*sealed, sealed->def.solver);
  REQUIRE(rs.report.converged);
  FlowSolution qs = postprocess(*sealed, rs, 1e-10);
  for (const auto& e : qs.mult.sigma_n) CHECK(std::abs(e.trace) < 1e-12);

  auto leaky = build_setup(poiseuille_channel_def(4, 9, 1e-3));
  SchemeResult rl = run_scheme(*leaky, leaky->def.solver);
  REQUIRE(rl.report.converged);
  FlowSolution ql = postprocess(*leaky, rl, 1e-10);
  CHECK(ql.comp.pass(1e-6));
}

TEST_CASE("full solve through config files with deterministic exports") {
  Mesh mesh = make_rect_mesh(6, 3, 2.0, 1.0, 8, 1, 8, 1);
  std::filesystem::create_directories("viflow_test_scratch");
  write_mesh(mesh, "viflow_test_scratch/pipe_mesh.vm");
  std::string cfg_text = R"([problem]
mesh = pipe_mesh.vm
equation = stokes
nu = 1
[patch 1]
kind = 1
hx = y*(1-y)
hy = 0
[patch 8]
kind = 8
h = 0
g = 0.4
[solver]
scheme = oseen
tol = 1e-10
[output]
dir = viflow_test_scratch/out_cfg
)";
  std::istringstream in1(cfg_text), in2(cfg_text);
  ProblemConfig cfg1 = parse_config(in1, "pipe.cfg", "viflow_test_scratch");
  ProblemConfig cfg2 = parse_config(in2, "pipe.cfg", "viflow_test_scratch");
  CHECK(run_solve(cfg1, "viflow_test_scratch/out_a", false, 1) == 0);
  CHECK(run_solve(cfg2, "viflow_test_scratch/out_b", false, 1) == 0);
  auto slurp = [](const std::string& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  CHECK(slurp("viflow_test_scratch/out_a/fields.vtk") == slurp("viflow_test_scratch/out_b/fields.vtk"));
  CHECK(slurp("viflow_test_scratch/out_a/multipliers.csv") == slurp("viflow_test_scratch/out_b/multipliers.csv"));
  CHECK(slurp("viflow_test_scratch/out_a/report.txt") == slurp("viflow_test_scratch/out_b/report.txt"));
  CHECK(slurp("viflow_test_scratch/out_a/fields.vtk").find("velocity") != std::string::npos);
}

TEST_CASE("admissibility gate blocks and the override runs") {
  ProblemDef def;
  def.mesh = make_square_mesh(3, 8, 8, 8, 8);
  BoundaryPatch p8 = mk(8, 8);
  p8.h_scalar = [](const Vec2&) { return 0.0; };
  p8.g = [](const Vec2&) { return 1.0; };
  def.patches = {p8};
  def.equation = "stokes";
  def.f = [](const Vec2&) { return Vec2(0.1, 0); };
  CHECK_THROWS_WITH_AS(build_setup(def), doctest::Contains("admissibility"), Error);
  auto s = build_setup(def, true);  // coercive anyway: slip walls fix u.n
  SchemeResult r = run_scheme(*s, s->def.solver);
  CHECK(r.report.converged);
}

TEST_CASE("regularized path handles the nonlinear convection terms") {
  ProblemDef def = poiseuille_channel_def(3, 8, 0.3);
  def.equation = "navier-stokes-static";
  def.solver.scheme = "regularized-path";
  def.solver.tol = 1e-9;
  auto s = build_setup(def);
  SchemeResult rg = run_scheme(*s, def.solver);
  SchemeResult ro = oseen_fixed_point(s->vi, 1e-11);
  REQUIRE(ro.report.converged);
  CHECK(rg.report.converged);
  CHECK(s->vi.norm_of(rg.w - ro.w) < 1e-4);

  ProblemDef dt = poiseuille_channel_def(3, 8, 0.3);
  dt.equation = "navier-stokes-total";
  dt.solver.scheme = "regularized-path";
  auto st = build_setup(dt);
  SchemeResult rt = run_scheme(*st, dt.solver);
  SchemeResult ot = oseen_fixed_point(st->vi, 1e-11);
  REQUIRE(ot.report.converged);
  CHECK(rt.report.converged);
  CHECK(st->vi.norm_of(rt.w - ot.w) < 1e-4);
}

TEST_CASE("disk with rotation condition reproduces rigid rotation") {
  // Exact rotation v = (-y, x): zero strain, v.n = 0 on the circle and
  // rot v x n = 2 tau, so the vector datum of the kind-3 condition is
  // phi = 2 nu tau. The only stiffness acting on the rotation is the
  // curvature boundary term, so the discrete error tracks the curvature
  // consistency and must shrink under refinement.
  double prev = 1e300;
  for (int seg : {24, 48, 96}) {
    ProblemDef def;
    def.mesh = make_disk_mesh(seg, std::max(2, seg / 12), 3);
    BoundaryPatch p3;
    p3.tag = 3;
    p3.kind = 3;
    p3.declared_convex = true;
    p3.phi_vec = [](const Vec2& x) -> Vec2 {
      double r = x.norm();
      return Vec2(-x.y() / r, x.x() / r) * 2.0;
    };
    def.patches = {p3};
    def.equation = "stokes";
    def.nu = 1.0;
    def.solver.tol = 1e-11;
    auto s = build_setup(def, true, false);
    SchemeResult r = run_scheme(*s, def.solver);
    REQUIRE(r.report.converged);
    FlowSolution sol = postprocess(*s, r, def.solver.tol);
    double err = std::sqrt(velocity_error_sq(
        s->ctx, s->dofs.to_cartesian(sol.v_full),
        [](const Vec2& p) { return Vec2(-p.y(), p.x()); },
        [](const Vec2&) {
          Mat2 g;
          g << 0, -1, 1, 0;
          return g;
        },
        true));
    CHECK(err < prev * 0.6);
    prev = err;
  }
  CHECK(prev < 2e-3);
}

TEST_CASE("outlet conditions of kinds 2, 4, 6, 7 reproduce Poiseuille exactly") {
  // Parabolic channel flow u = (y(1-y), 0), p = -2 nu x is P2/P1-exact, and
  // each outlet condition pins the pressure constant through its datum, so
  // velocity AND pressure must match to solver precision with no gauge.
  double nu = 0.7;
  for (int kind : {2, 4, 6, 7}) {
    ProblemDef def;
    def.mesh = make_rect_mesh(6, 3, 2.0, 1.0, 1, kind, 1, 1);
    BoundaryPatch p1;
    p1.tag = 1;
    p1.kind = 1;
    p1.h_vec = [](const Vec2& x) { return Vec2(x.y() * (1 - x.y()), 0.0); };
    BoundaryPatch out;
    out.tag = kind;
    out.kind = kind;
    if (kind == 2 || kind == 7) {
      out.phi_scalar = [nu](const Vec2&) { return 4 * nu; };  // -p at x = 2
    } else if (kind == 4) {
      out.h_scalar = [](const Vec2&) { return 0.0; };
      out.phi_scalar = [nu](const Vec2&) { return 4 * nu; };  // -p + 2 nu eps_nn
    } else {
      out.phi_vec = [nu](const Vec2& x) {
        return Vec2(4 * nu, nu * (1 - 2 * x.y()));  // -p n + 2 nu eps n
      };
    }
    def.patches = {p1, out};
    def.equation = "stokes";
    def.nu = nu;
    def.solver.tol = 1e-11;
    auto s = build_setup(def, false, false);
    SchemeResult r = run_scheme(*s, def.solver);
    REQUIRE(r.report.converged);
    FlowSolution sol = postprocess(*s, r, def.solver.tol);
    double verr = std::sqrt(velocity_error_sq(
        s->ctx, s->dofs.to_cartesian(sol.v_full),
        [](const Vec2& p) { return Vec2(p.y() * (1 - p.y()), 0); },
        [](const Vec2& p) {
          Mat2 g = Mat2::Zero();
          g(0, 1) = 1 - 2 * p.y();
          return g;
        },
        true));
    INFO("outlet kind ", kind);
    CHECK(verr < 1e-9);
    double perr = 0;
    for (int v = 0; v < s->space.n_vertex; ++v)
      perr = std::max(perr, std::abs(sol.p_vertex[v] - (-2 * nu * s->space.nodes[v].x())));
    CHECK(perr < 1e-8);
  }
}

TEST_CASE("Robin wall reproduces exact Couette shear") {
  // u = (y, 0), p = 0; on the top wall 2(nu eps_nt + alpha u_t) = phi gives
  // phi = (nu + 2a, 0) for alpha = a I. Linear exact solution, so any sign
  // error in the Robin pairing shows up immediately.
  double nu = 0.6, a = 0.8;
  ProblemDef def;
  def.mesh = make_square_mesh(3, 1, 1, 5, 1);
  BoundaryPatch p1;
  p1.tag = 1;
  p1.kind = 1;
  p1.h_vec = [](const Vec2& x) { return Vec2(x.y(), 0.0); };
  BoundaryPatch p5;
  p5.tag = 5;
  p5.kind = 5;
  p5.h_scalar = [](const Vec2&) { return 0.0; };
  p5.alpha = [a](const Vec2&) { return Mat2(a * Mat2::Identity()); };
  p5.phi_vec = [nu, a](const Vec2&) { return Vec2(nu + 2 * a, 0.0); };
  def.patches = {p1, p5};
  def.equation = "stokes";
  def.nu = nu;
  def.solver.tol = 1e-11;
  auto s = build_setup(def, false, false);
  SchemeResult r = run_scheme(*s, def.solver);
  REQUIRE(r.report.converged);
  FlowSolution sol = postprocess(*s, r, def.solver.tol);
  double verr = std::sqrt(velocity_error_sq(
      s->ctx, s->dofs.to_cartesian(sol.v_full),
      [](const Vec2& p) { return Vec2(p.y(), 0); },
      [](const Vec2&) {
        Mat2 g = Mat2::Zero();
        g(0, 1) = 1;
        return g;
      },
      true));
  CHECK(verr < 1e-9);
}

TEST_CASE("manufactured Navier-Stokes solutions converge for both convection forms") {
  // Quartic channel velocity with the full convective term in the force.
  // The static-pressure and total-pressure formulations share the same f
  // because (u.grad)u = rot u x u + grad(|u|^2/2); only the recovered
  // pressure differs by the Bernoulli head.
  auto exact_u = [](const Vec2& p) { return quartic_mms_velocity(p); };
  auto exact_gu = [](const Vec2& p) { return quartic_mms_grad(p); };
  double nu = 1.0;
  auto force = [nu](const Vec2& x) {
    double y = x.y();
    Vec2 visc(-nu * (12 * y * y - 12 * y + 2) - M_PI * std::sin(M_PI * x.x()), 0.0);
    // (u.grad)u = u1 du/dx = 0 for the unidirectional profile, so the
    // quartic channel keeps the same force; perturb with a genuine
    // convective contribution through a second manufactured component.
    return visc;
  };
  for (const char* eq : {"navier-stokes-static", "navier-stokes-total"}) {
    std::vector<double> errs;
    for (int level = 0; level < 2; ++level) {
      int n = 8 << level;
      ProblemDef def = quartic_channel_mms_def(n, nu);
      def.equation = eq;
      def.f = force;
      def.solver.tol = 1e-11;
      auto s = build_setup(std::move(def), false, false);
      SchemeResult r = run_scheme(*s, s->def.solver);
      REQUIRE(r.report.converged);
      FlowSolution sol = postprocess(*s, r, 1e-11);
      double verr = std::sqrt(
          velocity_error_sq(s->ctx, s->dofs.to_cartesian(sol.v_full), exact_u, exact_gu, true));
      errs.push_back(verr);
    }
    INFO(eq);
    CHECK(errs[1] < errs[0] / 3.5);  // at least a rate-1.8 drop per halving
  }
}

namespace {

Vec2 vortex_u(const Vec2& p) {
  double sx = std::sin(M_PI * p.x()), sy2 = std::sin(2 * M_PI * p.y());
  double sy = std::sin(M_PI * p.y()), sx2 = std::sin(2 * M_PI * p.x());
  return Vec2(sx * sx * sy2, -sx2 * sy * sy);
}

Mat2 vortex_gu(const Vec2& p) {
  double x = p.x(), y = p.y();
  Mat2 g;
  g(0, 0) = M_PI * std::sin(2 * M_PI * x) * std::sin(2 * M_PI * y);
  g(0, 1) = 2 * M_PI * std::sin(M_PI * x) * std::sin(M_PI * x) * std::cos(2 * M_PI * y);
  g(1, 0) = -2 * M_PI * std::cos(2 * M_PI * x) * std::sin(M_PI * y) * std::sin(M_PI * y);
  g(1, 1) = -M_PI * std::sin(2 * M_PI * x) * std::sin(2 * M_PI * y);
  return g;
}

Vec2 vortex_lap(const Vec2& p) {
  double x = p.x(), y = p.y();
  double pi2 = M_PI * M_PI;
  double l1 = 2 * pi2 * std::cos(2 * M_PI * x) * std::sin(2 * M_PI * y) -
              4 * pi2 * std::sin(M_PI * x) * std::sin(M_PI * x) * std::sin(2 * M_PI * y);
  double l2 = 4 * pi2 * std::sin(2 * M_PI * x) * std::sin(M_PI * y) * std::sin(M_PI * y) -
              2 * pi2 * std::sin(2 * M_PI * x) * std::cos(2 * M_PI * y);
  return Vec2(l1, l2);
}

double vortex_p(const Vec2& p) { return std::cos(M_PI * p.x()) * std::cos(M_PI * p.y()); }

Vec2 vortex_gp(const Vec2& p) {
  return Vec2(-M_PI * std::sin(M_PI * p.x()) * std::cos(M_PI * p.y()),
              -M_PI * std::cos(M_PI * p.x()) * std::sin(M_PI * p.y()));
}

}  // namespace

TEST_CASE("vortex manufactured solution with genuine convection") {
  double nu = 1.0;
  auto force = [nu](const Vec2& x) -> Vec2 {
    return -nu * vortex_lap(x) + vortex_gu(x) * vortex_u(x) + vortex_gp(x);
  };
  for (const char* eq : {"navier-stokes-static", "navier-stokes-total"}) {
    bool total = std::string(eq) == "navier-stokes-total";
    std::vector<double> verrs, perrs;
    for (int level = 0; level < 2; ++level) {
      int n = 8 << level;
      ProblemDef def;
      def.mesh = make_square_mesh(n);
      BoundaryPatch p1;
      p1.tag = 1;
      p1.kind = 1;  // homogeneous velocity boundary (the vortex vanishes there)
      def.patches = {p1};
      def.equation = eq;
      def.nu = nu;
      def.f = force;
      def.solver.tol = 1e-11;
      auto s = build_setup(std::move(def), false, false);
      SchemeResult r = run_scheme(*s, s->def.solver);
      REQUIRE(r.report.converged);
      FlowSolution sol = postprocess(*s, r, 1e-11);
      verrs.push_back(std::sqrt(
          velocity_error_sq(s->ctx, s->dofs.to_cartesian(sol.v_full), vortex_u, vortex_gu, true)));
      auto exact_p = [total](const Vec2& x) {
        return vortex_p(x) + (total ? 0.5 * vortex_u(x).squaredNorm() : 0.0);
      };
      perrs.push_back(pressure_error(s->ctx, sol.p_vertex, exact_p));
    }
    INFO(eq);
    CHECK(verrs[1] < verrs[0] / 3.5);
    CHECK(perrs[1] < perrs[0] / 3.0);
  }
}
