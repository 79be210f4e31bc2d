#pragma once

#include <functional>
#include <limits>

#include "viflow/assembly.hpp"
#include "viflow/functional.hpp"

namespace viflow {

/// Finite-dimensional variational inequality on the free dofs: coercive
/// operator, divergence block, convection handle, nonsmooth functional and
/// cone. G is the norm matrix behind every estimate (H1 Gram for assembled
/// problems, identity for synthetic instances).
struct DiscreteVI {
  SpMat A0;
  SpMat B;  // may have zero rows
  SpMat G;
  VectorXd F;
  ConvKind conv_kind = ConvKind::None;
  std::function<SpMat(const VectorXd&)> conv;        // reduced N(w)
  std::function<SpMat(const VectorXd&)> conv_extra;  // reduced d -> (d.grad)w style block
  FunctionalSpec spec;
  CoercivityEstimate constants;
  int gauge_pressure_dof = -1;

  int n() const { return static_cast<int>(A0.rows()); }
  int m() const { return static_cast<int>(B.rows()); }
  double norm_of(const VectorXd& w) const { return std::sqrt(std::max(0.0, w.dot(G * w))); }
  SpMat conv_at(const VectorXd& w) const { return conv ? conv(w) : SpMat(n(), n()); }
};

struct SolveReport {
  int outer_iters = 0;
  std::vector<int> inner_iters;
  std::vector<double> residual_history;
  std::vector<double> increment_history;
  std::vector<double> contraction_ratios;
  std::vector<double> eps_used;
  double vi_res = std::numeric_limits<double>::quiet_NaN();
  double div_res = 0;
  double w_norm = 0;
  double F_dual = 0;
  double alpha = 0;
  bool energy_bound_ok = false;
  double energy_rhs = 0;
  double uniqueness_value = std::numeric_limits<double>::quiet_NaN();
  bool uniqueness_guaranteed = false;
  double contraction_radius = std::numeric_limits<double>::quiet_NaN();
  bool picard_regime = false;
  bool picard_ball_ok = true;
  double eps_bound_worst = 0;  // worst ||v_eps|| / (||F||/alpha) on the regularized path
  bool converged = false;
  std::string failure;
  double wall_seconds = 0;
};

struct VISolution {
  VectorXd w;
  VectorXd lambda;  // divergence multiplier (p = -lambda)
  bool ok = false;
  int inner_iters = 0;
  double vi_res = std::numeric_limits<double>::quiet_NaN();
  double div_res = 0;
  std::vector<double> eps_used;
  std::string failure;
};

struct ConvexVIProblem {
  const SpMat* A = nullptr;  // linearized operator, symmetric part positive definite
  const SpMat* B = nullptr;
  VectorXd F;
  const FunctionalSpec* spec = nullptr;
  int gauge_dof = -1;
  double tol = 1e-10;
  std::vector<double> eps_schedule;  // empty: automatic continuation
};

/// Inner solver: regularization continuation plus a semismooth Newton /
/// exact active-set polish. Converges to the exact discrete inequality,
/// measured by the KKT residual below.
VISolution solve_convex_vi(const ConvexVIProblem& prob);

/// Max violation of the inequality over coordinate probe directions
/// (cone-tangent at active dofs), given r = A v + B'lambda - F.
double kkt_residual(const VectorXd& r, const VectorXd& w, const FunctionalSpec& spec);

/// Residual of the full nonlinear inequality at (w, lambda).
double vi_residual(const DiscreteVI& vi, const VectorXd& w, const VectorXd& lambda,
                   double* div_res = nullptr);

struct SchemeResult {
  VectorXd w;
  VectorXd lambda;
  SolveReport report;
};

/// Fixed point on the linearized-convection inequality: w maps to the
/// solution of the inequality with operator A0 + N(w).
SchemeResult oseen_fixed_point(const DiscreteVI& vi, double tol, int max_outer = 100);

/// Fixed point with fully frozen convection moved to the load.
SchemeResult frozen_convection_picard(const DiscreteVI& vi, double tol, int max_outer = 100);

/// Smooth regularized path: damped Newton on the regularized equation for a
/// decreasing eps list, warm-started. Excludes one-sided constraints unless
/// allow_cone is set (experimental).
SchemeResult galerkin_regularized_path(const DiscreteVI& vi, std::vector<double> eps_list,
                                       double tol, bool allow_cone = false);

/// Energy bound, uniqueness condition and contraction radius diagnostics.
void check_estimates(const DiscreteVI& vi, const VectorXd& w, SolveReport& rep);

/// Smaller root of K M^2 - alpha M + f = 0; NaN when the data are outside
/// the contraction regime (negative discriminant).
double contraction_radius(double alpha, double K, double f_dual, bool* regime = nullptr);

}  // namespace viflow
