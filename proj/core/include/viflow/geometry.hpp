#pragma once

#include <unordered_map>

#include "viflow/patch.hpp"

namespace viflow {

struct EdgeGeom {
  Vec2 n{0, 0};   // unit outward normal
  Vec2 t{0, 0};   // unit tangent, n rotated +90 deg (CCW traversal direction)
  double len = 0;
  double kappa = 0;  // piecewise-constant edge curvature
  int tag = 0;
};

struct NodeGeom {
  int node = -1;
  int e_prev = -1;  // boundary edge ending at this vertex
  int e_next = -1;  // boundary edge starting at this vertex
  double turning = 0;  // exterior angle, positive where the boundary is convex
  double weight = 0;   // nodal arc weight, half the sum of adjacent edge lengths
  double kappa = 0;    // turning / weight
  Vec2 n_avg{0, 0};    // bisector frame, renormalized mean of the adjacent edge normals
  Vec2 t_avg{0, 0};
  bool tag_corner = false;  // adjacent edges carry different patch tags
  bool sharp = false;       // genuine corner (junction of smooth pieces), not a
                            // discretization angle of a smooth curve
};

/// Outward frames, arc weights and discrete curvature of the mesh boundary.
/// Edge frames are exact per segment; nodal frames average the two adjacent
/// edge normals unless the node sits between two different patch tags, in
/// which case each edge keeps its own frame (query via frame_at).
struct BoundaryGeometry {
  std::vector<EdgeGeom> edges;  // parallel to mesh.boundary
  std::vector<NodeGeom> nodes;
  std::unordered_map<int, int> node_index;  // mesh vertex -> index into nodes

  const NodeGeom& at(int mesh_vertex) const;
  bool is_boundary_vertex(int mesh_vertex) const { return node_index.count(mesh_vertex) > 0; }

  /// Frame of a vertex as seen from one of its adjacent edges. Equals the
  /// averaged frame away from tag corners and the edge frame at a corner.
  void frame_at(int mesh_vertex, int edge, Vec2& n, Vec2& t) const;
};

BoundaryGeometry compute_boundary_frames(const Mesh& mesh);

/// Smooth test field with analytic gradient, used by the identity checks.
struct AnalyticField {
  std::function<Vec2(const Vec2&)> value;
  std::function<Mat2(const Vec2&)> grad;
};

enum class SurfaceIdentity { StrainTangent23, StrainNormal25 };

/// Residual of the cited boundary identity, max over the patch nodes.
/// StrainTangent23 requires v.n = 0 on the patch, StrainNormal25 requires
/// v.t = 0; both are checked to 1e-10 at the nodes.
double identity_residual(const Mesh& mesh, const BoundaryGeometry& geom, const AnalyticField& v,
                         int patch_tag, SurfaceIdentity which);

struct AdmissibilityReport {
  bool gamma1_present = false;
  bool pure_dirichlet = false;
  std::vector<int> lonely_onesided;          // tags 10/11 lacking a companion patch
  std::vector<int> nonpositive_thresholds;   // tags with g <= 0 somewhere
  std::vector<int> nonconvex_declared;       // declared-convex tags with kappa < -1e-8
  std::vector<std::string> notes;
  std::vector<std::string> warnings;

  bool clean() const { return warnings.empty(); }
};

AdmissibilityReport check_admissibility(const Mesh& mesh, const BoundaryGeometry& geom,
                                        const std::vector<BoundaryPatch>& patches);

}  // namespace viflow
