#pragma once

#include "viflow/fem.hpp"
#include "viflow/geometry.hpp"

namespace viflow {

/// Velocity dof layout for the constrained space. Scalar node k owns dofs
/// (2k, 2k+1); cartesian nodes store (u_x, u_y), rotated nodes store
/// (u.n, u.t) in their boundary frame. Rotation happens exactly on nodes of
/// patches 2..11 so every essential trace condition is a single-dof fix.
struct DofMap {
  const FemSpace* space = nullptr;
  int n_dofs = 0;

  std::vector<char> rotated;              // per scalar node
  std::vector<Vec2> frame_n, frame_t;     // valid where rotated

  // Constraints of the test/solution space (w-space, all values zero) with
  // the matching inhomogeneous v-level values (the traces the lifting must
  // reproduce at these dofs).
  std::vector<char> w_fixed;       // per dof
  std::vector<double> v_value;     // per dof, trace value at w-fixed dofs

  // Dofs fixed only in the lifting solve (slip tangential traces and the
  // one-sided normal traces).
  std::vector<char> lift_fixed;    // per dof, superset of w_fixed
  std::vector<double> lift_value;  // per dof

  std::vector<int> free2full;      // free (reduced) index -> full dof
  std::vector<int> full2free;      // -1 where fixed

  SpMat R;  // n_dofs x n_dofs, u_cartesian = R * u_framed

  int n_free() const { return static_cast<int>(free2full.size()); }

  VectorXd to_cartesian(const VectorXd& framed_full) const { return R * framed_full; }
  VectorXd expand(const VectorXd& reduced) const;          // zeros at fixed dofs
  VectorXd reduce(const VectorXd& full) const;             // free entries only
};

DofMap build_dofmap(const FemSpace& space, const BoundaryGeometry& geom,
                    const std::vector<BoundaryPatch>& patches);

}  // namespace viflow
