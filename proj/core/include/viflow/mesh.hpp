#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace viflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Boundary edge oriented so that a->b runs counter-clockwise around the
/// domain (interior on the left). Orientation is fixed by validate_mesh.
struct BoundaryEdge {
  int a = -1;
  int b = -1;
  int tag = 0;  // patch tag, 1..11
};

/// Triangulated 2-D domain with tagged boundary edges.
struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise
  std::vector<BoundaryEdge> boundary;
  std::vector<std::vector<int>> loops;  // closed loops as edge indices, traversal order

  int tri_of_boundary_edge(int e) const { return owner_tri_[e]; }

  std::vector<int> owner_tri_;  // filled by validate_mesh
};

Mesh load_mesh(const std::string& path);
Mesh parse_mesh(std::istream& in, const std::string& stream_name);
void write_mesh(const Mesh& mesh, const std::string& path);

/// Checks all structural invariants, orients boundary edges CCW and builds
/// the loop table. Throws Error with the offending entity on violation.
void validate_mesh(Mesh& mesh);

/// Structured meshers used by tests and the manufactured-solution cases.
Mesh make_square_mesh(int n, int tag_bottom = 1, int tag_right = 1, int tag_top = 1,
                      int tag_left = 1);
Mesh make_rect_mesh(int nx, int ny, double lx, double ly, int tag_bottom = 1,
                    int tag_right = 1, int tag_top = 1, int tag_left = 1);
Mesh make_disk_mesh(int segments, int rings, int tag = 1);

/// Reassigns boundary tags from the edge midpoint position.
void retag_boundary(Mesh& mesh, const std::function<int(const Vec2&)>& tag_of_midpoint);

double triangle_area(const Mesh& mesh, int t);

}  // namespace viflow
