#pragma once

#include "viflow/dofmap.hpp"

namespace viflow {

/// One trace dof of a friction or leak patch, in reduced (free) indexing.
/// The trace in patch orientation is sgn * w[dof]; weight is the lumped
/// boundary mass and g the effective threshold, so gw = g * weight is the
/// coefficient of the dof in the discrete functional.
struct FrictionDof {
  int dof = -1;
  int node = -1;
  int tag = 0;
  int kind = 8;  // generating condition kind, 8..11
  double sgn = 1;
  double weight = 0;
  double g = 0;
  double gw = 0;
};

/// Per-point threshold values grouped by condition type; all strictly
/// positive by construction.
struct ThresholdData {
  std::vector<double> g_tau, g_n, g_plus, g_minus;
};

struct FunctionalSpec {
  std::vector<FrictionDof> abs_dofs;    // slip (kind 8) and leak (kind 9)
  std::vector<FrictionDof> plus_dofs;   // outflow-only (kind 10)
  std::vector<FrictionDof> minus_dofs;  // inflow-only (kind 11)
  std::vector<int> pinned;              // dofs forced to zero (10/11 junction)
  ThresholdData thresholds;
  int n = 0;  // reduced dof count the indices refer to

  bool empty() const { return abs_dofs.empty() && plus_dofs.empty() && minus_dofs.empty(); }
  bool has_cone() const { return !plus_dofs.empty() || !minus_dofs.empty(); }
  double total_gw_abs() const;  // sum of g*weight over the |.| dofs
};

struct ConeSpec {
  struct Entry {
    int dof;
    double sgn;  // +1: trace >= 0 (kind 10), -1: trace <= 0 (kind 11); trace = sgn_fric * w
    double dir;  // dir * w[dof] >= 0 is the dof-level constraint
  };
  std::vector<Entry> entries;
  std::vector<int> pinned;
};

FunctionalSpec build_functional(const FemSpace& space, const BoundaryGeometry& geom,
                                const DofMap& dofs, const std::vector<BoundaryPatch>& patches);
ConeSpec cone_of(const FunctionalSpec& spec);

/// Regularization kernel: |eta| - eps/2 outside the seam, |eta|^2/(2 eps)
/// inside; C1 across the seam.
double rho_eps(double eta, double eps);
double drho_eps(double eta, double eps);

/// Extended-real functional value; +inf when a cone constraint is violated
/// beyond 1e-12.
double eval_J(const VectorXd& w, const FunctionalSpec& spec, const ConeSpec& cone);

double eval_J_eps(const VectorXd& w, const FunctionalSpec& spec, double eps);
VectorXd grad_J_eps(const VectorXd& w, const FunctionalSpec& spec, double eps);

/// Nearest point in the cone (componentwise clamp); idempotent.
VectorXd project_onto_K(const VectorXd& w, const ConeSpec& cone);

}  // namespace viflow
