#pragma once

#include "viflow/mesh.hpp"

namespace viflow {

using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Vec2(const Vec2&)>;
using MatrixField = std::function<Mat2(const Vec2&)>;

/// Per-patch boundary condition data. The kind number follows the condition
/// catalogue used throughout: 1 velocity, 2 pressure, 3 rotation, 4
/// tangential velocity + normal stress, 5 normal velocity + Robin tangential
/// stress, 6 full stress, 7 normal-derivative outflow, 8 slip with tangential
/// threshold, 9 leak with normal threshold, 10 outflow-only leak, 11
/// inflow-only leak.
struct BoundaryPatch {
  int tag = 0;
  int kind = 0;
  VectorField h_vec;       // kind 1
  ScalarField h_scalar;    // kind 4: tangential; 5, 8: normal; 9: tangential
  ScalarField phi_scalar;  // kinds 2, 4, 7
  VectorField phi_vec;     // kinds 3, 5, 6
  MatrixField alpha;       // kind 5
  ScalarField g;           // kinds 8..11, threshold, strictly positive
  bool declared_convex = false;
};

inline bool kind_fixes_both(int kind) { return kind == 1; }
inline bool kind_fixes_tangential(int kind) {
  return kind == 2 || kind == 4 || kind == 7 || kind == 9 || kind == 10 || kind == 11;
}
inline bool kind_fixes_normal(int kind) { return kind == 3 || kind == 5 || kind == 8; }
inline bool kind_has_threshold(int kind) { return kind >= 8 && kind <= 11; }

const BoundaryPatch* find_patch(const std::vector<BoundaryPatch>& patches, int tag);

}  // namespace viflow
