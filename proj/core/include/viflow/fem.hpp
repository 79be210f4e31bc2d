#pragma once

#include <Eigen/Sparse>

#include "viflow/mesh.hpp"

namespace viflow {

using SpMat = Eigen::SparseMatrix<double>;
using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double>;

/// Interior quadrature, degree-6 Dunavant rule (12 points). Barycentric
/// coordinates, weights sum to one; multiply by the triangle area.
struct TriQuadPoint {
  double l0, l1, l2, w;
};
const std::vector<TriQuadPoint>& tri_quadrature();

/// Edge quadrature, 3-point Gauss on [0,1], weights sum to one.
struct EdgeQuadPoint {
  double t, w;
};
const std::vector<EdgeQuadPoint>& edge_quadrature();

/// Quadratic Lagrange basis on the reference triangle. Local node order:
/// vertices 0,1,2 then midpoints m01, m12, m20.
void p2_shape(double l0, double l1, double l2, double N[6]);
void p2_grad_ref(double l0, double l1, double l2, double dN[6][2]);

/// Quadratic basis restricted to an edge, parameter t in [0,1] from the
/// first vertex. Node order: vertex a, vertex b, midpoint.
void p2_edge_shape(double t, double N[3]);

/// Taylor-Hood scalar node sets: P2 nodes are the mesh vertices followed by
/// one midpoint per mesh edge; P1 pressure lives on the vertices.
struct FemSpace {
  const Mesh* mesh = nullptr;
  std::vector<Vec2> nodes;  // vertex nodes then edge midpoints
  int n_vertex = 0;
  std::vector<std::array<int, 6>> elem;  // per triangle: v0 v1 v2 m01 m12 m20
  std::vector<int> bedge_mid;            // per boundary edge: midpoint node id

  int n_scalar() const { return static_cast<int>(nodes.size()); }
  int n_vdofs() const { return 2 * n_scalar(); }
};

FemSpace build_space(const Mesh& mesh);

}  // namespace viflow
