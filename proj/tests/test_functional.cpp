#include <doctest.h>

#include <cmath>
#include <random>

#include "viflow/functional.hpp"

using namespace viflow;

namespace {

// Standalone single-edge spec: two vertex dofs and a midpoint dof with the
// exact lumped weights L/6, L/6, 2L/3.
FunctionalSpec single_edge_spec(double L, double g) {
  FunctionalSpec spec;
  spec.n = 3;
  double shares[3] = {L / 6, L / 6, 2 * L / 3};
  for (int k = 0; k < 3; ++k) {
    FrictionDof fd;
    fd.dof = k;
    fd.node = k;
    fd.kind = 8;
    fd.sgn = 1;
    fd.weight = shares[k];
    fd.g = g;
    fd.gw = g * shares[k];
    spec.abs_dofs.push_back(fd);
    spec.thresholds.g_tau.push_back(g);
  }
  return spec;
}

FunctionalSpec mixed_spec(unsigned seed, int n) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ud(0.1, 2.0);
  FunctionalSpec spec;
  spec.n = n;
  for (int i = 0; i < n; ++i) {
    FrictionDof fd;
    fd.dof = i;
    fd.node = i;
    fd.sgn = 1;
    fd.weight = ud(rng);
    fd.g = ud(rng);
    fd.gw = fd.g * fd.weight;
    int which = i % 3;
    if (which == 0) {
      fd.kind = 8;
      spec.abs_dofs.push_back(fd);
      spec.thresholds.g_tau.push_back(fd.g);
    } else if (which == 1) {
      fd.kind = 10;
      spec.plus_dofs.push_back(fd);
      spec.thresholds.g_plus.push_back(fd.g);
    } else {
      fd.kind = 11;
      spec.minus_dofs.push_back(fd);
      spec.thresholds.g_minus.push_back(fd.g);
    }
  }
  return spec;
}

}  // namespace

TEST_CASE("J of zero is zero and cone violations hit the sentinel") {
  FunctionalSpec spec = mixed_spec(1, 9);
  ConeSpec cone = cone_of(spec);
  VectorXd z = VectorXd::Zero(9);
  CHECK(eval_J(z, spec, cone) == 0.0);

  VectorXd bad = z;
  bad[spec.plus_dofs[0].dof] = -3.0;  // outflow-only dof pushed negative
  CHECK(std::isinf(eval_J(bad, spec, cone)));
  VectorXd ok = project_onto_K(bad, cone);
  CHECK(std::isfinite(eval_J(ok, spec, cone)));
}

TEST_CASE("single edge: J = g |t| L for constant traces") {
  double L = 0.37, g = 2.5, t = -1.2;
  FunctionalSpec spec = single_edge_spec(L, g);
  ConeSpec cone = cone_of(spec);
  VectorXd u = VectorXd::Constant(3, t);
  CHECK(eval_J(u, spec, cone) == doctest::Approx(g * std::abs(t) * L).epsilon(1e-14));
}

TEST_CASE("convexity and positive homogeneity of J on the cone") {
  FunctionalSpec spec = mixed_spec(2, 12);
  ConeSpec cone = cone_of(spec);
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd u(12), v(12);
    for (int i = 0; i < 12; ++i) {
      u[i] = nd(rng);
      v[i] = nd(rng);
    }
    u = project_onto_K(u, cone);
    v = project_onto_K(v, cone);
    double t = std::uniform_real_distribution<double>(0, 1)(rng);
    double lhs = eval_J(t * u + (1 - t) * v, spec, cone);
    double rhs = t * eval_J(u, spec, cone) + (1 - t) * eval_J(v, spec, cone);
    CHECK(lhs <= rhs + 1e-10);
    double s = std::uniform_real_distribution<double>(0, 3)(rng);
    CHECK(eval_J(s * u, spec, cone) == doctest::Approx(s * eval_J(u, spec, cone)).epsilon(1e-12));
  }
}

TEST_CASE("projection is idempotent and exact on members") {
  FunctionalSpec spec = mixed_spec(4, 10);
  ConeSpec cone = cone_of(spec);
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 30; ++rep) {
    VectorXd u(10);
    for (int i = 0; i < 10; ++i) u[i] = nd(rng);
    VectorXd p1 = project_onto_K(u, cone);
    VectorXd p2 = project_onto_K(p1, cone);
    CHECK((p2 - p1).cwiseAbs().maxCoeff() == 0.0);
  }
  VectorXd member = VectorXd::Zero(10);
  member[spec.plus_dofs[0].dof] = 2.0;
  CHECK((project_onto_K(member, cone) - member).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("regularization kernel: seam continuity and values") {
  double eps = 0.3;
  CHECK(rho_eps(0.0, eps) == 0.0);
  CHECK(drho_eps(0.0, eps) == 0.0);
  CHECK(rho_eps(eps, eps) == doctest::Approx(eps / 2));
  CHECK(rho_eps(std::nextafter(eps, 1.0), eps) == doctest::Approx(eps / 2));
  CHECK(drho_eps(eps, eps) == doctest::Approx(1.0));
  CHECK(drho_eps(-eps, eps) == doctest::Approx(-1.0));
  FunctionalSpec spec = single_edge_spec(1, 1);
  CHECK_THROWS_AS(eval_J_eps(VectorXd::Zero(3), spec, 0.0), Error);
}

TEST_CASE("uniform regularization bound and monotonicity") {
  FunctionalSpec spec = mixed_spec(6, 12);
  ConeSpec cone = cone_of(spec);
  double total_gw = spec.total_gw_abs();
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  for (double eps : {1.0, 0.1, 0.01}) {
    for (int rep = 0; rep < 100; ++rep) {
      VectorXd u(12);
      for (int i = 0; i < 12; ++i) u[i] = 2 * nd(rng);
      u = project_onto_K(u, cone);
      double j = eval_J(u, spec, cone);
      double je = eval_J_eps(u, spec, eps);
      CHECK(je <= j + 1e-12);
      CHECK(std::abs(je - j) <= eps / 2 * total_gw + 1e-12);
    }
  }
}

TEST_CASE("gradient of the regularized functional matches finite differences") {
  FunctionalSpec spec = mixed_spec(8, 10);
  double eps = 0.05, fd_step = 1e-7;
  std::mt19937 rng(9);
  std::normal_distribution<double> nd;
  int tested = 0;
  for (int rep = 0; rep < 400 && tested < 100; ++rep) {
    VectorXd u(10);
    for (int i = 0; i < 10; ++i) u[i] = nd(rng);
    bool near_seam = false;
    for (const auto& d : spec.abs_dofs)
      if (std::abs(std::abs(u[d.dof]) - eps) < 10 * fd_step) near_seam = true;
    if (near_seam) continue;
    ++tested;
    VectorXd g = grad_J_eps(u, spec, eps);
    for (int i = 0; i < 10; ++i) {
      VectorXd up = u, dn = u;
      up[i] += fd_step;
      dn[i] -= fd_step;
      double fd = (eval_J_eps(up, spec, eps) - eval_J_eps(dn, spec, eps)) / (2 * fd_step);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
    }
  }
  CHECK(tested == 100);
}
