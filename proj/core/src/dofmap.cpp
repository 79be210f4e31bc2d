#include "viflow/dofmap.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace viflow {

VectorXd DofMap::expand(const VectorXd& reduced) const {
  VectorXd full = VectorXd::Zero(n_dofs);
  for (int i = 0; i < n_free(); ++i) full[free2full[i]] = reduced[i];
  return full;
}

VectorXd DofMap::reduce(const VectorXd& full) const {
  VectorXd r(n_free());
  for (int i = 0; i < n_free(); ++i) r[i] = full[free2full[i]];
  return r;
}

namespace {

// A single essential condition u.d = c at a node. Axis records whether the
// generating condition addressed the normal or the tangential component, so
// a lone constraint can pick the frame orientation.
struct DirCon {
  Vec2 d;
  double c = 0;
  bool lifting_only = false;
  bool normal_axis = true;
  int tag = 0;
};

constexpr double kParallelTol = 1e-9;
constexpr double kValueTol = 1e-10;

void merge_into(std::vector<DirCon>& out, const DirCon& in, int node) {
  for (auto& ex : out) {
    double cross = ex.d.x() * in.d.y() - ex.d.y() * in.d.x();
    if (std::abs(cross) > kParallelTol) continue;
    double sgn = ex.d.dot(in.d) > 0 ? 1.0 : -1.0;
    double cin = sgn * in.c;
    if (ex.lifting_only != in.lifting_only) {
      // Solution-space data wins over a lifting-only trace at a corner.
      if (ex.lifting_only) {
        ex.lifting_only = false;
        ex.c = cin;
        ex.tag = in.tag;
        ex.normal_axis = in.normal_axis;
      }
      return;
    }
    if (std::abs(ex.c - cin) > kValueTol * std::max(1.0, std::abs(ex.c)))
      throw Error("incompatible trace data at node " + std::to_string(node) + " (patches " +
                  std::to_string(ex.tag) + " and " + std::to_string(in.tag) + ": values " +
                  std::to_string(ex.c) + " vs " + std::to_string(cin) + ")");
    return;
  }
  out.push_back(in);
}

}  // namespace

DofMap build_dofmap(const FemSpace& space, const BoundaryGeometry& geom,
                    const std::vector<BoundaryPatch>& patches) {
  const Mesh& mesh = *space.mesh;
  DofMap dm;
  dm.space = &space;
  dm.n_dofs = space.n_vdofs();
  const int ns = space.n_scalar();
  dm.rotated.assign(ns, 0);
  dm.frame_n.assign(ns, Vec2(1, 0));
  dm.frame_t.assign(ns, Vec2(0, 1));
  dm.w_fixed.assign(dm.n_dofs, 0);
  dm.v_value.assign(dm.n_dofs, 0.0);
  dm.lift_fixed.assign(dm.n_dofs, 0);
  dm.lift_value.assign(dm.n_dofs, 0.0);

  // Gather per-node directional constraints and frame requests.
  std::vector<std::vector<DirCon>> cons(ns);
  std::vector<std::vector<int>> touch_edges(ns);  // adjacent boundary edges per node

  for (size_t e = 0; e < mesh.boundary.size(); ++e) {
    const BoundaryEdge& be = mesh.boundary[e];
    const BoundaryPatch* patch = find_patch(patches, be.tag);
    if (!patch)
      throw Error("boundary tag " + std::to_string(be.tag) + " has no patch definition");
    const int kind = patch->kind;
    const int nodes_on_edge[3] = {be.a, be.b, space.bedge_mid[e]};

    for (int node : nodes_on_edge) {
      touch_edges[node].push_back(static_cast<int>(e));
      Vec2 n, t;
      if (node == space.bedge_mid[e]) {
        n = geom.edges[e].n;
        t = geom.edges[e].t;
      } else {
        geom.frame_at(node, static_cast<int>(e), n, t);
      }
      Vec2 x = space.nodes[node];
      auto add = [&](Vec2 d, double c, bool lift_only, bool normal_axis) {
        merge_into(cons[node], DirCon{d, c, lift_only, normal_axis, be.tag}, node);
      };

      switch (kind) {
        case 1: {
          Vec2 h = patch->h_vec ? patch->h_vec(x) : Vec2(0, 0);
          add(Vec2(1, 0), h.x(), false, true);
          add(Vec2(0, 1), h.y(), false, false);
          break;
        }
        case 2:
        case 7:
          add(t, 0.0, false, false);
          break;
        case 3:
          add(n, 0.0, false, true);
          break;
        case 4:
          add(t, patch->h_scalar ? patch->h_scalar(x) : 0.0, false, false);
          break;
        case 5:
          add(n, patch->h_scalar ? patch->h_scalar(x) : 0.0, false, true);
          break;
        case 6:
          break;  // natural condition, frame rotation only
        case 8:
          add(n, patch->h_scalar ? patch->h_scalar(x) : 0.0, false, true);
          add(t, 0.0, true, false);
          break;
        case 9:
          add(t, patch->h_scalar ? patch->h_scalar(x) : 0.0, false, false);
          add(n, 0.0, true, true);
          break;
        case 10:
        case 11:
          add(t, 0.0, false, false);
          add(n, 0.0, true, true);
          break;
        default:
          throw Error("unknown boundary condition kind " + std::to_string(kind) + " on patch " +
                      std::to_string(be.tag));
      }
    }
  }

  for (int node = 0; node < ns; ++node) {
    if (touch_edges[node].empty()) continue;

    std::vector<DirCon> v_cons, lift_extra;
    for (const auto& c : cons[node]) (c.lifting_only ? lift_extra : v_cons).push_back(c);

    const int d0 = 2 * node, d1 = 2 * node + 1;

    if (v_cons.size() >= 2) {
      // Two independent directions: the node is fully fixed; cartesian frame.
      Eigen::Matrix2d D;
      D.row(0) = v_cons[0].d.transpose();
      D.row(1) = v_cons[1].d.transpose();
      Vec2 rhs(v_cons[0].c, v_cons[1].c);
      Vec2 u = D.fullPivLu().solve(rhs);
      dm.w_fixed[d0] = dm.w_fixed[d1] = 1;
      dm.v_value[d0] = u.x();
      dm.v_value[d1] = u.y();
      dm.lift_fixed[d0] = dm.lift_fixed[d1] = 1;
      dm.lift_value[d0] = u.x();
      dm.lift_value[d1] = u.y();
      // Lifting-only traces yield to solution-space data at patch corners.
      continue;
    }

    // Rotated frame. With a single essential direction the frame aligns the
    // fixed axis with it; otherwise (kind 6 only) use the bisector frame.
    Vec2 fn, ft;
    if (v_cons.size() == 1) {
      const DirCon& c = v_cons[0];
      if (c.normal_axis) {
        fn = c.d.normalized();
        ft = Vec2(-fn.y(), fn.x());
      } else {
        ft = c.d.normalized();
        fn = Vec2(ft.y(), -ft.x());
      }
    } else if (!lift_extra.empty()) {
      const DirCon& c = lift_extra[0];
      if (c.normal_axis) {
        fn = c.d.normalized();
        ft = Vec2(-fn.y(), fn.x());
      } else {
        ft = c.d.normalized();
        fn = Vec2(ft.y(), -ft.x());
      }
    } else {
      int e = touch_edges[node][0];
      if (node >= space.n_vertex) {
        fn = geom.edges[e].n;
        ft = geom.edges[e].t;
      } else {
        geom.frame_at(node, e, fn, ft);
      }
    }
    dm.rotated[node] = 1;
    dm.frame_n[node] = fn;
    dm.frame_t[node] = ft;

    auto place = [&](const DirCon& c, bool lift_only) {
      double dn = c.d.dot(fn), dt = c.d.dot(ft);
      int dof;
      double sgn;
      if (std::abs(dn) > std::abs(dt)) {
        if (std::abs(std::abs(dn) - 1.0) > 1e-9)
          throw Error("incompatible frames at node " + std::to_string(node) + " (patch " +
                      std::to_string(c.tag) + ")");
        dof = d0;
        sgn = dn > 0 ? 1.0 : -1.0;
      } else {
        if (std::abs(std::abs(dt) - 1.0) > 1e-9)
          throw Error("incompatible frames at node " + std::to_string(node) + " (patch " +
                      std::to_string(c.tag) + ")");
        dof = d1;
        sgn = dt > 0 ? 1.0 : -1.0;
      }
      double value = sgn * c.c;
      if (!lift_only) {
        if (dm.w_fixed[dof] && std::abs(dm.v_value[dof] - value) > kValueTol)
          throw Error("incompatible trace data at node " + std::to_string(node));
        dm.w_fixed[dof] = 1;
        dm.v_value[dof] = value;
        dm.lift_fixed[dof] = 1;
        dm.lift_value[dof] = value;
      } else {
        // Lifting-only trace: solution-space data wins at a conflict.
        if (dm.w_fixed[dof]) return;
        if (dm.lift_fixed[dof] && std::abs(dm.lift_value[dof] - value) > kValueTol)
          throw Error("incompatible lifting trace at node " + std::to_string(node) + " (patch " +
                      std::to_string(c.tag) + ")");
        dm.lift_fixed[dof] = 1;
        dm.lift_value[dof] = value;
      }
    };
    for (const auto& c : v_cons) place(c, false);
    for (const auto& c : lift_extra) place(c, true);
  }

  for (int d = 0; d < dm.n_dofs; ++d)
    if (dm.w_fixed[d]) {
      dm.lift_fixed[d] = 1;
      dm.lift_value[d] = dm.v_value[d];
    }

  dm.full2free.assign(dm.n_dofs, -1);
  for (int d = 0; d < dm.n_dofs; ++d)
    if (!dm.w_fixed[d]) {
      dm.full2free[d] = static_cast<int>(dm.free2full.size());
      dm.free2full.push_back(d);
    }

  std::vector<Triplet> trips;
  trips.reserve(2 * dm.n_dofs);
  for (int node = 0; node < ns; ++node) {
    int d0 = 2 * node, d1 = 2 * node + 1;
    if (!dm.rotated[node]) {
      trips.emplace_back(d0, d0, 1.0);
      trips.emplace_back(d1, d1, 1.0);
    } else {
      const Vec2& n = dm.frame_n[node];
      const Vec2& t = dm.frame_t[node];
      trips.emplace_back(d0, d0, n.x());
      trips.emplace_back(d1, d0, n.y());
      trips.emplace_back(d0, d1, t.x());
      trips.emplace_back(d1, d1, t.y());
    }
  }
  dm.R.resize(dm.n_dofs, dm.n_dofs);
  dm.R.setFromTriplets(trips.begin(), trips.end());
  return dm;
}

}  // namespace viflow
