#include "viflow/oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace viflow {

double SmallInstance::energy(const VectorXd& v) const {
  double e = 0.5 * v.dot(A * v) - f.dot(v);
  for (int i = 0; i < n(); ++i) {
    if (dofs[i].kind == Kind::Abs) e += dofs[i].g * std::abs(v[i]);
    if (dofs[i].kind == Kind::Cone) e += dofs[i].g * (dofs[i].dir * v[i]);
  }
  return e;
}

FunctionalSpec spec_of(const SmallInstance& inst) {
  FunctionalSpec spec;
  spec.n = inst.n();
  for (int i = 0; i < inst.n(); ++i) {
    const auto& d = inst.dofs[i];
    if (d.kind == SmallInstance::Kind::Plain) continue;
    FrictionDof fd;
    fd.dof = i;
    fd.node = i;
    fd.sgn = 1.0;
    fd.weight = 1.0;
    fd.g = d.g;
    fd.gw = d.g;
    if (d.kind == SmallInstance::Kind::Abs) {
      fd.kind = 8;
      spec.abs_dofs.push_back(fd);
      spec.thresholds.g_tau.push_back(d.g);
    } else if (d.dir > 0) {
      fd.kind = 10;
      spec.plus_dofs.push_back(fd);  // trace = v >= 0, energy +g v
      spec.thresholds.g_plus.push_back(d.g);
    } else {
      fd.kind = 11;
      spec.minus_dofs.push_back(fd);  // trace = v <= 0, energy -g v
      spec.thresholds.g_minus.push_back(d.g);
    }
  }
  return spec;
}

VectorXd prox_gradient_reference(const SmallInstance& inst, long max_iters, double step_tol) {
  const int n = inst.n();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (inst.A + inst.A.transpose()));
  double L = es.eigenvalues().maxCoeff();
  if (L <= 0) throw Error("prox_gradient_reference: operator not positive");
  double t = 1.0 / L;

  VectorXd v = VectorXd::Zero(n);
  double scale = std::max(1.0, inst.f.cwiseAbs().maxCoeff());
  for (long it = 0; it < max_iters; ++it) {
    VectorXd y = v - t * (inst.A * v - inst.f);
    VectorXd vn(n);
    for (int i = 0; i < n; ++i) {
      const auto& d = inst.dofs[i];
      switch (d.kind) {
        case SmallInstance::Kind::Plain:
          vn[i] = y[i];
          break;
        case SmallInstance::Kind::Abs: {
          double th = t * d.g;
          vn[i] = y[i] > th ? y[i] - th : (y[i] < -th ? y[i] + th : 0.0);
          break;
        }
        case SmallInstance::Kind::Cone: {
          double z = d.dir * y[i] - t * d.g;
          vn[i] = d.dir * std::max(z, 0.0);
          break;
        }
      }
    }
    double diff = (vn - v).cwiseAbs().maxCoeff();
    v = vn;
    if (diff <= step_tol * scale) break;
  }
  return v;
}

VectorXd active_set_enumeration(const SmallInstance& inst, int* n_solutions) {
  const int n = inst.n();
  std::vector<int> cdofs;
  for (int i = 0; i < n; ++i)
    if (inst.dofs[i].kind != SmallInstance::Kind::Plain) cdofs.push_back(i);
  if (cdofs.size() > 12) throw Error("active_set_enumeration: more than 12 constrained dofs");

  // State coding per constrained dof: abs in {stick, slip+, slip-},
  // cone in {active, inactive}.
  std::vector<int> radix(cdofs.size());
  long total = 1;
  for (size_t k = 0; k < cdofs.size(); ++k) {
    radix[k] = inst.dofs[cdofs[k]].kind == SmallInstance::Kind::Abs ? 3 : 2;
    total *= radix[k];
  }

  const double scale = std::max(1.0, inst.f.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;
  VectorXd best;
  int found = 0;

  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<int> state(cdofs.size());
    for (size_t k = 0; k < cdofs.size(); ++k) {
      state[k] = static_cast<int>(c % radix[k]);
      c /= radix[k];
    }

    MatrixXd M = inst.A;
    VectorXd rhs = inst.f;
    for (size_t k = 0; k < cdofs.size(); ++k) {
      int i = cdofs[k];
      const auto& d = inst.dofs[i];
      bool clamped = (d.kind == SmallInstance::Kind::Abs && state[k] == 0) ||
                     (d.kind == SmallInstance::Kind::Cone && state[k] == 0);
      if (clamped) {
        M.row(i).setZero();
        M(i, i) = 1.0;
        rhs[i] = 0.0;
      } else if (d.kind == SmallInstance::Kind::Abs) {
        rhs[i] -= d.g * (state[k] == 1 ? 1.0 : -1.0);
      } else {
        rhs[i] -= d.g * d.dir;
      }
    }
    VectorXd v = M.fullPivLu().solve(rhs);
    if (!v.allFinite()) continue;

    // Verify the complementarity conditions of the assignment.
    VectorXd r = inst.f - inst.A * v;  // required generalized force
    bool ok = true;
    for (size_t k = 0; k < cdofs.size() && ok; ++k) {
      int i = cdofs[k];
      const auto& d = inst.dofs[i];
      if (d.kind == SmallInstance::Kind::Abs) {
        if (state[k] == 0) {
          ok = std::abs(r[i]) <= d.g + tol;
        } else {
          double s = state[k] == 1 ? 1.0 : -1.0;
          ok = s * v[i] >= -tol;
        }
      } else {
        if (state[k] == 0) {
          ok = d.dir * r[i] <= d.g + tol;  // multiplier sign
        } else {
          ok = d.dir * v[i] >= -tol;
        }
      }
    }
    if (!ok) continue;
    ++found;
    if (found == 1) best = v;
    // Distinct solutions indicate degeneracy; keep the first.
    if (found > 1 && (v - best).cwiseAbs().maxCoeff() > 1e-7 * scale && n_solutions == nullptr)
      throw Error("active_set_enumeration: multiple distinct consistent assignments");
  }
  if (found == 0) throw Error("active_set_enumeration: no consistent assignment");
  if (n_solutions) *n_solutions = found;
  return best;
}

SmallInstance random_instance(unsigned seed, int n, double friction_fraction) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);

  SmallInstance inst;
  MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = nd(rng);
  inst.A = (M * M.transpose()) / n + 0.5 * MatrixXd::Identity(n, n);
  inst.f.resize(n);
  for (int i = 0; i < n; ++i) inst.f[i] = 2.0 * nd(rng);
  inst.dofs.resize(n);
  for (int i = 0; i < n; ++i) {
    double u = ud(rng);
    if (u < friction_fraction) {
      double which = ud(rng);
      if (which < 0.5) {
        inst.dofs[i] = {SmallInstance::Kind::Abs, 0.2 + 2.0 * ud(rng), 1.0};
      } else {
        inst.dofs[i] = {SmallInstance::Kind::Cone, 0.2 + 2.0 * ud(rng), which < 0.75 ? 1.0 : -1.0};
      }
    }
  }
  return inst;
}

}  // namespace viflow
