#pragma once

#include <memory>

#include "viflow/config.hpp"
#include "viflow/export.hpp"
#include "viflow/multipliers.hpp"

namespace viflow {

/// Fully specified problem: mesh, boundary conditions, equation, data.
struct ProblemDef {
  Mesh mesh;
  std::vector<BoundaryPatch> patches;
  std::string equation = "stokes";  // stokes | navier-stokes-static | navier-stokes-total
  double nu = 1.0;
  VectorField f;
  SolverConfig solver;
};

ProblemDef def_of(const ProblemConfig& cfg);

/// Assembled problem: spaces, lifting, operators, functional, constants.
/// Owns everything the DiscreteVI handles point into; not movable.
struct ProblemSetup {
  ProblemDef def;
  FemSpace space;
  BoundaryGeometry geom;
  DofMap dofs;
  AssemblyContext ctx;
  AdmissibilityReport adm;
  VectorXd U;
  double U_h1 = 0;
  DiscreteVI vi;

  ProblemSetup() = default;
  ProblemSetup(const ProblemSetup&) = delete;
  ProblemSetup& operator=(const ProblemSetup&) = delete;
};

std::unique_ptr<ProblemSetup> build_setup(ProblemDef def, bool override_admissibility = false,
                                          bool with_constants = true);

SchemeResult run_scheme(const ProblemSetup& s, const SolverConfig& solver);

struct FlowSolution {
  VectorXd w;       // reduced homogeneous part
  VectorXd lambda;  // divergence multiplier, pressure p = -lambda
  VectorXd v_full;  // framed full velocity v = w + U
  std::vector<Vec2> vel_vertex;
  VectorXd p_vertex;
  Multipliers mult;
  ComplementarityReport comp;
  SolveReport report;
};

FlowSolution postprocess(const ProblemSetup& s, const SchemeResult& r, double tol);

/// Largest weighted-trace-vs-H1 ratio on the divergence-free subspace; the
/// discrete trace constant of the data-dependence bound.
double trace_constant(const ProblemSetup& s);

/// Copy of a definition with all thresholds scaled by a factor.
ProblemDef scale_thresholds(const ProblemDef& def, double factor);

/// CLI verbs; return value is the process exit code (0 pass, 1 usage, 2
/// solver failure, 3 check failure).
int run_solve(const ProblemConfig& cfg, const std::string& out_dir, bool override_adm,
              int threads);
int run_check(const ProblemConfig& cfg, bool override_adm, int threads);
int run_convergence(const ProblemConfig& cfg, int levels);
int run_validate_mesh(const ProblemConfig& cfg);

/// Built-in manufactured and comparison cases.
ProblemDef quartic_channel_mms_def(int n, double nu = 1.0);
Vec2 quartic_mms_velocity(const Vec2& p);
Mat2 quartic_mms_grad(const Vec2& p);
double quartic_mms_pressure(const Vec2& p);

/// Poiseuille channel on [0,2]x[0,1]: parabolic inflow/outflow on the left
/// and right (kind 1), walls of the requested kind (1: no-slip, 8: slip
/// with threshold g, 9: leak with threshold g on the top wall only).
ProblemDef poiseuille_channel_def(int n, int wall_kind, double g, double nu = 1.0);

struct MmsErrors {
  double vel_h1 = 0;
  double p_l2 = 0;
  double h = 0;
  int n_dofs = 0;
};
MmsErrors mms_errors(const ProblemSetup& s, const FlowSolution& sol,
                     const std::function<Vec2(const Vec2&)>& u,
                     const std::function<Mat2(const Vec2&)>& gu,
                     const std::function<double(const Vec2&)>& p);

double h1_difference(const ProblemSetup& a, const VectorXd& va_full, const VectorXd& vb_full);

}  // namespace viflow
