#include "viflow/fem.hpp"

#include <cmath>
#include <map>

namespace viflow {

const std::vector<TriQuadPoint>& tri_quadrature() {
  static const std::vector<TriQuadPoint> rule = [] {
    std::vector<TriQuadPoint> q;
    auto perm3 = [&](double a, double b, double w) {
      q.push_back({a, b, b, w});
      q.push_back({b, a, b, w});
      q.push_back({b, b, a, w});
    };
    auto perm6 = [&](double a, double b, double c, double w) {
      q.push_back({a, b, c, w});
      q.push_back({a, c, b, w});
      q.push_back({b, a, c, w});
      q.push_back({b, c, a, w});
      q.push_back({c, a, b, w});
      q.push_back({c, b, a, w});
    };
    perm3(0.873821971016996, 0.063089014491502, 0.050844906370207);
    perm3(0.501426509658179, 0.249286745170910, 0.116786275726379);
    perm6(0.636502499121399, 0.310352451033785, 0.053145049844816, 0.082851075618374);
    return q;
  }();
  return rule;
}

const std::vector<EdgeQuadPoint>& edge_quadrature() {
  static const std::vector<EdgeQuadPoint> rule = [] {
    double s = 0.5 * std::sqrt(3.0 / 5.0);
    return std::vector<EdgeQuadPoint>{
        {0.5 - s, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + s, 5.0 / 18.0}};
  }();
  return rule;
}

void p2_shape(double l0, double l1, double l2, double N[6]) {
  N[0] = l0 * (2 * l0 - 1);
  N[1] = l1 * (2 * l1 - 1);
  N[2] = l2 * (2 * l2 - 1);
  N[3] = 4 * l0 * l1;
  N[4] = 4 * l1 * l2;
  N[5] = 4 * l2 * l0;
}

void p2_grad_ref(double l0, double l1, double l2, double dN[6][2]) {
  // Reference coordinates (xi, eta) with l1 = xi, l2 = eta, l0 = 1 - xi - eta.
  const double d0[2] = {-1, -1}, d1[2] = {1, 0}, d2[2] = {0, 1};
  for (int k = 0; k < 2; ++k) {
    dN[0][k] = (4 * l0 - 1) * d0[k];
    dN[1][k] = (4 * l1 - 1) * d1[k];
    dN[2][k] = (4 * l2 - 1) * d2[k];
    dN[3][k] = 4 * (l0 * d1[k] + l1 * d0[k]);
    dN[4][k] = 4 * (l1 * d2[k] + l2 * d1[k]);
    dN[5][k] = 4 * (l2 * d0[k] + l0 * d2[k]);
  }
}

void p2_edge_shape(double t, double N[3]) {
  N[0] = (1 - t) * (1 - 2 * t);
  N[1] = t * (2 * t - 1);
  N[2] = 4 * t * (1 - t);
}

FemSpace build_space(const Mesh& mesh) {
  FemSpace sp;
  sp.mesh = &mesh;
  sp.n_vertex = static_cast<int>(mesh.nodes.size());
  sp.nodes = mesh.nodes;

  std::map<std::pair<int, int>, int> mid_of;
  auto midpoint = [&](int a, int b) {
    auto k = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = mid_of.find(k);
    if (it != mid_of.end()) return it->second;
    int id = static_cast<int>(sp.nodes.size());
    sp.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
    mid_of[k] = id;
    return id;
  };

  sp.elem.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    sp.elem.push_back({t[0], t[1], t[2], midpoint(t[0], t[1]), midpoint(t[1], t[2]),
                       midpoint(t[2], t[0])});
  }
  sp.bedge_mid.reserve(mesh.boundary.size());
  for (const auto& e : mesh.boundary) sp.bedge_mid.push_back(midpoint(e.a, e.b));
  return sp;
}

}  // namespace viflow
