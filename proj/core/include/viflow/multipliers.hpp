#pragma once

#include "viflow/vi.hpp"

namespace viflow {

/// Recovered boundary multipliers, one entry per friction trace dof. value
/// is the multiplier in patch orientation (stress units), trace the matching
/// velocity trace.
struct Multipliers {
  struct Entry {
    int node = -1;
    int tag = 0;
    int dof = -1;
    double value = 0;
    double g = 0;
    double trace = 0;
    double weight = 0;
  };
  std::vector<Entry> sigma_tau;    // slip patches (kind 8)
  std::vector<Entry> sigma_n;     // leak patches (kind 9)
  std::vector<Entry> sigma_plus;  // outflow-only (kind 10)
  std::vector<Entry> sigma_minus; // inflow-only (kind 11)

  /// Max residual of the recovered equation on the non-friction free dofs.
  double equation_residual = 0;
};

/// Max violations of the complementarity system, grouped per condition.
struct ComplementarityReport {
  double tau_bound = 0;    // |sigma_tau| - g <= 0
  double tau_compl = 0;    // sigma_tau v_tau + g|v_tau| = 0
  double n_bound = 0;      // |sigma_n| - g <= 0
  double n_compl = 0;      // sigma_n v_n + g|v_n| = 0
  double plus_sign = 0;    // sigma_+ + g >= 0
  double plus_compl = 0;   // (sigma_+ + g) v_n = 0
  double minus_sign = 0;   // sigma_- - g <= 0
  double minus_compl = 0;  // (sigma_- - g) v_n = 0
  double v_sign = 0;       // cone trace sign conditions
  double g_scale = 1;
  double trace_scale = 1;

  double worst_normalized() const;
  bool pass(double tol = 1e-6) const { return worst_normalized() <= tol; }
};

/// Restricts the equation residual A0 w + N(w) w + B' lambda - F to the
/// friction trace dofs and divides by the lumped boundary weights. Requires
/// a converged iterate.
Multipliers recover_multipliers(const DiscreteVI& vi, const VectorXd& w, const VectorXd& lambda,
                                double tol);

ComplementarityReport check_complementarity(const Multipliers& m, const VectorXd& w);

}  // namespace viflow
