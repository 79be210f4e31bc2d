#include <doctest.h>

#include <cmath>

#include "viflow/multipliers.hpp"
#include "viflow/oracle.hpp"

using namespace viflow;

namespace {

SpMat sparse_of(const MatrixXd& A) {
  SpMat S(A.rows(), A.cols());
  std::vector<Triplet> t;
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      if (A(i, j) != 0) t.emplace_back(i, j, A(i, j));
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

DiscreteVI vi_of(const SmallInstance& inst) {
  DiscreteVI vi;
  vi.A0 = sparse_of(inst.A);
  vi.B = SpMat(0, inst.n());
  vi.G = sparse_of(MatrixXd::Identity(inst.n(), inst.n()));
  vi.F = inst.f;
  vi.spec = spec_of(inst);
  vi.constants.alpha = 1;
  vi.constants.valid = true;
  return vi;
}

std::pair<VectorXd, VectorXd> solve(const DiscreteVI& vi, double tol = 1e-12) {
  ConvexVIProblem prob;
  prob.A = &vi.A0;
  prob.B = nullptr;
  prob.F = vi.F;
  prob.spec = &vi.spec;
  prob.tol = tol;
  VISolution s = solve_convex_vi(prob);
  REQUIRE(s.ok);
  return {s.w, s.lambda};
}

}  // namespace

TEST_CASE("stick state: recovered multiplier within the threshold") {
  SmallInstance inst;
  inst.A = MatrixXd(2, 2);
  inst.A << 2.0, 0.3, 0.3, 1.5;
  inst.f = VectorXd(2);
  inst.f << 0.4, -0.3;  // small load: everything sticks
  inst.dofs = {{SmallInstance::Kind::Abs, 1.0, 1.0}, {SmallInstance::Kind::Abs, 1.0, 1.0}};
  DiscreteVI vi = vi_of(inst);
  auto [w, lam] = solve(vi);
  CHECK(w.cwiseAbs().maxCoeff() < 1e-14);
  Multipliers m = recover_multipliers(vi, w, lam, 1e-12);
  for (const auto& e : m.sigma_tau) CHECK(std::abs(e.value) <= e.g + 1e-10);
  ComplementarityReport rep = check_complementarity(m, w);
  CHECK(rep.pass(1e-8));
}

TEST_CASE("slip state: multiplier sits on the bound against the motion") {
  SmallInstance inst;
  inst.A = MatrixXd::Constant(1, 1, 2.0);
  inst.f = VectorXd::Constant(1, 3.0);
  inst.dofs = {{SmallInstance::Kind::Abs, 1.0, 1.0}};
  DiscreteVI vi = vi_of(inst);
  auto [w, lam] = solve(vi);
  CHECK(w[0] == doctest::Approx(1.0));
  Multipliers m = recover_multipliers(vi, w, lam, 1e-12);
  REQUIRE(m.sigma_tau.size() == 1);
  CHECK(m.sigma_tau[0].value == doctest::Approx(-1.0).epsilon(1e-10));  // -g sign(v)
  CHECK(check_complementarity(m, w).pass(1e-8));
}

TEST_CASE("open outflow dof: sigma_plus equals -g") {
  SmallInstance inst;
  inst.A = MatrixXd::Constant(1, 1, 1.0);
  inst.f = VectorXd::Constant(1, 5.0);
  inst.dofs = {{SmallInstance::Kind::Cone, 2.0, 1.0}};
  DiscreteVI vi = vi_of(inst);
  auto [w, lam] = solve(vi);
  CHECK(w[0] == doctest::Approx(3.0));
  Multipliers m = recover_multipliers(vi, w, lam, 1e-12);
  REQUIRE(m.sigma_plus.size() == 1);
  CHECK(m.sigma_plus[0].value == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(check_complementarity(m, w).pass(1e-8));
}

TEST_CASE("constructed violation is flagged at the right place") {
  SmallInstance inst = random_instance(21, 6);
  DiscreteVI vi = vi_of(inst);
  auto [w, lam] = solve(vi);
  Multipliers m = recover_multipliers(vi, w, lam, 1e-12);
  CHECK(check_complementarity(m, w).pass(1e-7));
  if (!m.sigma_tau.empty()) {
    Multipliers bad = m;
    bad.sigma_tau[0].value += 2 * bad.sigma_tau[0].g;
    ComplementarityReport rep = check_complementarity(bad, w);
    CHECK(!rep.pass(1e-7));
    CHECK(rep.tau_bound > 0);
  }
}

TEST_CASE("trivially complementary at zero") {
  SmallInstance inst = random_instance(23, 5);
  inst.f.setZero();
  DiscreteVI vi = vi_of(inst);
  auto [w, lam] = solve(vi);
  Multipliers m = recover_multipliers(vi, w, lam, 1e-12);
  CHECK(check_complementarity(m, w).pass(1e-9));
}

TEST_CASE("recovery map is homogeneous of degree one") {
  SmallInstance inst = random_instance(29, 6);
  DiscreteVI vi = vi_of(inst);
  auto [w, lam] = solve(vi);
  Multipliers m1 = recover_multipliers(vi, w, lam, 1e-12);
  DiscreteVI vi2 = vi;
  vi2.F *= 2;
  Multipliers m2 = recover_multipliers(vi2, 2 * w, 2 * lam, 1.0);
  REQUIRE(m1.sigma_tau.size() == m2.sigma_tau.size());
  for (size_t i = 0; i < m1.sigma_tau.size(); ++i)
    CHECK(m2.sigma_tau[i].value == doctest::Approx(2 * m1.sigma_tau[i].value).epsilon(1e-10));
}

TEST_CASE("unconverged iterates are rejected") {
  SmallInstance inst = random_instance(31, 4);
  inst.f.setConstant(5.0);
  DiscreteVI vi = vi_of(inst);
  VectorXd w = VectorXd::Zero(4), lam;
  CHECK_THROWS_WITH_AS(recover_multipliers(vi, w, lam, 1e-12), doctest::Contains("not converged"),
                       Error);
}
