#include "viflow/geometry.hpp"

#include <cmath>
#include <set>

namespace viflow {

const BoundaryPatch* find_patch(const std::vector<BoundaryPatch>& patches, int tag) {
  for (const auto& p : patches)
    if (p.tag == tag) return &p;
  return nullptr;
}

const NodeGeom& BoundaryGeometry::at(int mesh_vertex) const {
  auto it = node_index.find(mesh_vertex);
  if (it == node_index.end())
    throw Error("vertex " + std::to_string(mesh_vertex) + " is not on the boundary");
  return nodes[it->second];
}

void BoundaryGeometry::frame_at(int mesh_vertex, int edge, Vec2& n, Vec2& t) const {
  const NodeGeom& ng = at(mesh_vertex);
  if (!ng.tag_corner && !ng.sharp) {
    n = ng.n_avg;
    t = ng.t_avg;
    return;
  }
  if (edge != ng.e_prev && edge != ng.e_next)
    throw Error("frame_at: edge is not adjacent to vertex " + std::to_string(mesh_vertex));
  n = edges[edge].n;
  t = edges[edge].t;
}

BoundaryGeometry compute_boundary_frames(const Mesh& mesh) {
  BoundaryGeometry geom;
  geom.edges.resize(mesh.boundary.size());

  for (size_t e = 0; e < mesh.boundary.size(); ++e) {
    const auto& be = mesh.boundary[e];
    Vec2 d = mesh.nodes[be.b] - mesh.nodes[be.a];
    double len = d.norm();
    if (len <= 0) throw Error("zero-length boundary edge " + std::to_string(e));
    EdgeGeom& eg = geom.edges[e];
    eg.len = len;
    eg.t = d / len;
    eg.n = Vec2(eg.t.y(), -eg.t.x());  // interior on the left of a->b, so outward is right
    eg.tag = be.tag;
  }

  // Node adjacency from the oriented loops.
  std::unordered_map<int, NodeGeom> per_node;
  for (const auto& loop : mesh.loops) {
    for (size_t i = 0; i < loop.size(); ++i) {
      int e_prev = loop[i];
      int e_next = loop[(i + 1) % loop.size()];
      int v = mesh.boundary[e_prev].b;
      NodeGeom ng;
      ng.node = v;
      ng.e_prev = e_prev;
      ng.e_next = e_next;
      per_node[v] = ng;
    }
  }

  for (auto& [v, ng] : per_node) {
    const EdgeGeom& ep = geom.edges[ng.e_prev];
    const EdgeGeom& en = geom.edges[ng.e_next];
    // Exterior turning angle between the incoming and outgoing directions.
    double cross = ep.t.x() * en.t.y() - ep.t.y() * en.t.x();
    double dot = ep.t.dot(en.t);
    ng.turning = std::atan2(cross, dot);
    ng.weight = 0.5 * (ep.len + en.len);
    ng.kappa = ng.turning / ng.weight;
    ng.tag_corner = ep.tag != en.tag;
    ng.sharp = std::abs(ng.turning) > 0.7;
    Vec2 nsum = ep.n + en.n;
    double ns = nsum.norm();
    ng.n_avg = ns > 1e-14 ? Vec2(nsum / ns) : ep.n;
    ng.t_avg = Vec2(-ng.n_avg.y(), ng.n_avg.x());
    geom.node_index[v] = static_cast<int>(geom.nodes.size());
    geom.nodes.push_back(ng);
  }

  // Piecewise-constant edge curvature from the end-node turning curvatures.
  // Tag corners and genuine (sharp) corners are excluded so a corner spike
  // never leaks into a smooth patch piece.
  for (size_t e = 0; e < mesh.boundary.size(); ++e) {
    const auto& be = mesh.boundary[e];
    double sum = 0;
    int cnt = 0;
    for (int v : {be.a, be.b}) {
      const NodeGeom& ng = geom.nodes[geom.node_index.at(v)];
      if (ng.tag_corner || ng.sharp) continue;
      sum += ng.kappa;
      ++cnt;
    }
    geom.edges[e].kappa = cnt > 0 ? sum / cnt : 0.0;
  }

  return geom;
}

double identity_residual(const Mesh& mesh, const BoundaryGeometry& geom, const AnalyticField& v,
                         int patch_tag, SurfaceIdentity which) {
  double worst = 0;
  bool any = false;
  for (const NodeGeom& ng : geom.nodes) {
    if (geom.edges[ng.e_prev].tag != patch_tag || geom.edges[ng.e_next].tag != patch_tag)
      continue;  // patch-interior nodes only
    any = true;
    Vec2 x = mesh.nodes[ng.node];
    Vec2 val = v.value(x);
    Mat2 gr = v.grad(x);
    Mat2 eps = 0.5 * (gr + gr.transpose());
    const Vec2& n = ng.n_avg;
    const Vec2& t = ng.t_avg;

    if (which == SurfaceIdentity::StrainTangent23) {
      if (std::abs(val.dot(n)) > 1e-10)
        throw Error("identity check: field trace violates v.n = 0 at node " +
                    std::to_string(ng.node));
      double lhs = t.dot(eps * n);
      double dvdn_t = t.dot(gr * n);
      double res = lhs - 0.5 * dvdn_t + 0.5 * ng.kappa * val.dot(t);
      worst = std::max(worst, std::abs(res));
    } else {
      if (std::abs(val.dot(t)) > 1e-10)
        throw Error("identity check: field trace violates v.t = 0 at node " +
                    std::to_string(ng.node));
      // Tangential divergence by a centered difference along the loop.
      int vp = mesh.boundary[ng.e_prev].a;
      int vn = mesh.boundary[ng.e_next].b;
      const NodeGeom& gp = geom.at(vp);
      const NodeGeom& gn = geom.at(vn);
      double vt_p = v.value(mesh.nodes[vp]).dot(gp.t_avg);
      double vt_n = v.value(mesh.nodes[vn]).dot(gn.t_avg);
      double ds = geom.edges[ng.e_prev].len + geom.edges[ng.e_next].len;
      double div_gamma = (vt_n - vt_p) / ds;
      double lhs = n.dot(eps * n);
      double rhs = -ng.kappa * val.dot(n) - div_gamma + gr.trace();
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  if (!any) throw Error("identity check: patch tag " + std::to_string(patch_tag) +
                        " has no interior boundary nodes");
  return worst;
}

AdmissibilityReport check_admissibility(const Mesh& mesh, const BoundaryGeometry& geom,
                                        const std::vector<BoundaryPatch>& patches) {
  AdmissibilityReport rep;
  std::set<int> tags_present;
  for (const auto& e : mesh.boundary) tags_present.insert(e.tag);

  rep.gamma1_present = tags_present.count(1) > 0;
  if (!rep.gamma1_present)
    rep.warnings.push_back("patch 1 is empty: coercivity not guaranteed");

  bool friction = false;
  for (int t : tags_present) {
    const BoundaryPatch* p = find_patch(patches, t);
    int kind = p ? p->kind : t;
    if (kind_has_threshold(kind) || kind == 10 || kind == 11) friction = true;
  }
  if (!friction) {
    rep.pure_dirichlet = tags_present.size() == 1 && tags_present.count(1) == 1;
    if (rep.pure_dirichlet)
      rep.notes.push_back("no friction patches: problem is pure Dirichlet");
  }

  // One-sided patches need a companion with a free normal trace.
  static const int companions[] = {2, 4, 7, 9, 10, 11};
  for (int i : {10, 11}) {
    bool present = false, companion = false;
    for (const auto& p : patches) {
      bool in_mesh = tags_present.count(p.tag) > 0;
      if (!in_mesh) continue;
      if (p.kind == i) present = true;
      for (int c : companions)
        if (p.kind == c && p.kind != i) companion = true;
    }
    if (present && !companion) {
      rep.lonely_onesided.push_back(i);
      rep.warnings.push_back("one-sided patch kind " + std::to_string(i) +
                             " has no companion patch of kind 2, 4, 7, 9, 10 or 11");
    }
  }

  // Threshold positivity, sampled at boundary nodes and edge midpoints.
  for (const auto& p : patches) {
    if (!kind_has_threshold(p.kind) || !p.g) continue;
    bool bad = false;
    for (size_t e = 0; e < mesh.boundary.size(); ++e) {
      if (mesh.boundary[e].tag != p.tag) continue;
      Vec2 a = mesh.nodes[mesh.boundary[e].a];
      Vec2 b = mesh.nodes[mesh.boundary[e].b];
      for (const Vec2& x : {a, b, Vec2(0.5 * (a + b))})
        if (p.g(x) <= 0) bad = true;
    }
    if (bad) {
      rep.nonpositive_thresholds.push_back(p.tag);
      rep.warnings.push_back("threshold on patch " + std::to_string(p.tag) +
                             " is not strictly positive everywhere");
    }
  }

  // Declared-convex patches must have nonnegative discrete curvature.
  for (const auto& p : patches) {
    if (!p.declared_convex) continue;
    bool bad = false;
    for (const NodeGeom& ng : geom.nodes) {
      if (ng.tag_corner) continue;
      if (geom.edges[ng.e_next].tag == p.tag && ng.kappa < -1e-8) bad = true;
    }
    if (bad) {
      rep.nonconvex_declared.push_back(p.tag);
      rep.warnings.push_back("patch " + std::to_string(p.tag) +
                             " is declared convex but has negative discrete curvature");
    }
  }

  return rep;
}

}  // namespace viflow
