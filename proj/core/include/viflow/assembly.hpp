#pragma once

#include <memory>

#include "viflow/dofmap.hpp"

namespace viflow {

enum class ConvKind { None, A11, A12 };
enum class LoadKind { F1, F2, F3 };

struct AssemblyContext {
  const Mesh* mesh = nullptr;
  const FemSpace* space = nullptr;
  const BoundaryGeometry* geom = nullptr;
  const DofMap* dofs = nullptr;
  std::vector<BoundaryPatch> patches;
  double nu = 1.0;
};

/// Full (framed) matrices over all velocity dofs; restrict to free dofs with
/// DofMap::free2full for the solver-facing operators.

/// Strain form with all curvature/Robin boundary terms: the Stokes operator.
/// Shared core of the three problem forms.
SpMat assemble_a03(const AssemblyContext& ctx);

/// a03 plus the advective lifting couplings (U.grad)w + (w.grad)U.
SpMat assemble_a01(const AssemblyContext& ctx, const VectorXd& U_framed);

/// a03 plus the rotational lifting couplings rot U x w + rot w x U.
SpMat assemble_a02(const AssemblyContext& ctx, const VectorXd& U_framed);

/// Divergence constraint, pressure rows by velocity columns.
SpMat assemble_divergence(const AssemblyContext& ctx);

/// H1 Gram matrix of the velocity space (mass plus gradient, both
/// components); the discrete norm behind every estimate.
SpMat assemble_h1_gram(const AssemblyContext& ctx);

/// Load vector including body force, boundary data terms and the lifting
/// fold-in for the requested problem form. Reduced to free dofs.
VectorXd assemble_load(LoadKind kind, const AssemblyContext& ctx, const VectorXd& U_framed,
                       const VectorField& f);

/// Linearized convection matrix: A11 gives (w.grad)u.v, A12 gives
/// (rot w x u).v, both with the first slot frozen at w.
SpMat convection_matrix(ConvKind kind, const AssemblyContext& ctx, const VectorXd& w_framed);

/// Remainder of the derivative of N(w)w with respect to w:
/// A11 gives (d.grad)w, A12 gives rot d x w (as a matrix acting on d).
SpMat convection_jacobian_extra(ConvKind kind, const AssemblyContext& ctx,
                                const VectorXd& w_framed);

/// Divergence-free lifting of the essential boundary data; returns the full
/// framed coefficient vector, reproducing every lifting trace dof-wise.
VectorXd build_lifting(const AssemblyContext& ctx, double* h1_norm = nullptr);

struct CoercivityEstimate {
  double alpha = 0;    // smallest eigenvalue of sym A0 on ker B, against the H1 Gram
  double K_cont = 0;   // largest such eigenvalue
  double c_embed = 1;  // discrete L4-vs-H1 embedding surrogate
  double K_conv = 0;   // sampled convection continuity surrogate
  bool valid = false;  // alpha > 0
};

/// Eigenvalue bounds of the reduced operator on the discretely
/// divergence-free subspace. Dense path, intended for desk-scale systems.
CoercivityEstimate estimate_constants(const SpMat& A0_red, const SpMat& B_red,
                                      const SpMat& G_red);

/// Dual norm of a reduced load over the divergence-free subspace:
/// sqrt(F' u) with G u + B' q = F, B u = 0.
double dual_norm(const VectorXd& F_red, const SpMat& G_red, const SpMat& B_red,
                 int gauge_pressure_dof);

/// Kernel basis of B as dense columns (QR based); empty B gives identity.
MatrixXd divfree_basis(const SpMat& B_red, int n);

/// L4 norm of a velocity field given by reduced coefficients.
double l4_norm(const AssemblyContext& ctx, const VectorXd& w_red);

/// Fills c_embed and K_conv on an existing estimate by random sampling plus
/// a few ascent steps (indicative constants, mesh-dependent).
void estimate_embedding_constants(CoercivityEstimate& ce, const AssemblyContext& ctx,
                                  ConvKind kind, const SpMat& A0_red, const SpMat& B_red,
                                  const SpMat& G_red);

/// Squared H1 (or L2 when h1 is false) distance between a discrete velocity
/// given by cartesian coefficients and an analytic field.
double velocity_error_sq(const AssemblyContext& ctx, const VectorXd& v_cart,
                         const std::function<Vec2(const Vec2&)>& u,
                         const std::function<Mat2(const Vec2&)>& gu, bool h1);

/// Mean-adjusted L2 pressure error of a vertex (P1) pressure field.
double pressure_error(const AssemblyContext& ctx, const VectorXd& p_vertex,
                      const std::function<double(const Vec2&)>& p);

/// Largest eigenvalue of the weighted trace form against the H1 Gram on the
/// divergence-free subspace (diag holds the lumped boundary weights).
double weighted_trace_constant(const VectorXd& diag, const SpMat& B_red, const SpMat& G_red);

/// Restriction of full framed operators to the free dofs.
SpMat restrict_to_free(const SpMat& A_full, const DofMap& dm);
SpMat restrict_cols_to_free(const SpMat& B_full, const DofMap& dm);

/// Matrix triplet export, "i j value" rows (debug aid).
void write_matrix_market(const SpMat& A, const std::string& path);

}  // namespace viflow
