#pragma once

#include "viflow/functional.hpp"

namespace viflow {

/// Finite-dimensional instance of the constrained nonsmooth problem:
/// minimize 1/2 v'Av - f'v + sum_abs g|v_i| + sum_cone g (dir v_i)
/// over { dir v_i >= 0 on cone dofs }. Symmetric part of A positive definite.
struct SmallInstance {
  enum class Kind { Plain, Abs, Cone };
  struct Dof {
    Kind kind = Kind::Plain;
    double g = 0;    // threshold coefficient (already weighted)
    double dir = 1;  // cone: dir * v >= 0
  };
  MatrixXd A;
  VectorXd f;
  std::vector<Dof> dofs;

  int n() const { return static_cast<int>(f.size()); }
  double energy(const VectorXd& v) const;
};

FunctionalSpec spec_of(const SmallInstance& inst);

/// First-order reference minimizer: proximal gradient with exact separable
/// prox steps; independent of the Newton/active-set solution path.
VectorXd prox_gradient_reference(const SmallInstance& inst, long max_iters = 400000,
                                 double step_tol = 1e-16);

/// Exact finite enumeration of stick/slip/contact state assignments; solves
/// one linear system per assignment and returns the one satisfying every
/// sign and bound condition. Throws if none is consistent.
VectorXd active_set_enumeration(const SmallInstance& inst, int* n_solutions = nullptr);

/// Deterministic random instance stream for cross-validation suites.
SmallInstance random_instance(unsigned seed, int n, double friction_fraction = 0.5);

}  // namespace viflow
