#include "viflow/functional.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace viflow {

double FunctionalSpec::total_gw_abs() const {
  double s = 0;
  for (const auto& d : abs_dofs) s += d.gw;
  return s;
}

namespace {

constexpr double kConeTol = 1e-12;

void accumulate(std::map<int, FrictionDof>& acc, const FrictionDof& e) {
  auto it = acc.find(e.dof);
  if (it == acc.end()) {
    acc[e.dof] = e;
  } else {
    it->second.weight += e.weight;
    it->second.gw += e.gw;
    it->second.g = it->second.gw / it->second.weight;
  }
}

}  // namespace

FunctionalSpec build_functional(const FemSpace& space, const BoundaryGeometry& geom,
                                const DofMap& dofs, const std::vector<BoundaryPatch>& patches) {
  const Mesh& mesh = *space.mesh;
  FunctionalSpec spec;
  spec.n = dofs.n_free();

  std::map<int, FrictionDof> tau_acc, n_acc, plus_acc, minus_acc;

  for (size_t e = 0; e < mesh.boundary.size(); ++e) {
    const BoundaryEdge& be = mesh.boundary[e];
    const BoundaryPatch* p = find_patch(patches, be.tag);
    if (!p || !kind_has_threshold(p->kind)) continue;
    if (!p->g) throw Error("patch " + std::to_string(be.tag) + " needs a threshold g");
    const EdgeGeom& eg = geom.edges[e];
    Vec2 d_patch = p->kind == 8 ? eg.t : eg.n;
    double len = eg.len;
    const int nodes_on_edge[3] = {be.a, be.b, space.bedge_mid[e]};
    const double shares[3] = {len / 6.0, len / 6.0, 2.0 * len / 3.0};

    for (int k = 0; k < 3; ++k) {
      int node = nodes_on_edge[k];
      if (!dofs.rotated[node]) continue;  // fully fixed corner, constant trace
      // Which node axis carries the trace of this patch?
      double dn = d_patch.dot(dofs.frame_n[node]);
      double dt = d_patch.dot(dofs.frame_t[node]);
      int axis;
      double sgn;
      if (std::abs(dn) >= std::abs(dt)) {
        axis = 0;
        sgn = dn >= 0 ? 1.0 : -1.0;
        if (std::abs(dn) < 0.9)
          throw Error("incompatible frames: friction trace direction of patch " +
                      std::to_string(be.tag) + " is not aligned at node " + std::to_string(node));
      } else {
        axis = 1;
        sgn = dt >= 0 ? 1.0 : -1.0;
        if (std::abs(dt) < 0.9)
          throw Error("incompatible frames: friction trace direction of patch " +
                      std::to_string(be.tag) + " is not aligned at node " + std::to_string(node));
      }
      int full_dof = 2 * node + axis;
      if (dofs.w_fixed[full_dof]) continue;  // trace pinned by a neighbouring patch
      int red = dofs.full2free[full_dof];
      double g = p->g(space.nodes[node]);
      if (g <= 0)
        throw Error("threshold on patch " + std::to_string(be.tag) + " is not positive at node " +
                    std::to_string(node));
      FrictionDof fd;
      fd.dof = red;
      fd.node = node;
      fd.tag = be.tag;
      fd.kind = p->kind;
      fd.sgn = sgn;
      fd.weight = shares[k];
      fd.g = g;
      fd.gw = g * shares[k];
      if (p->kind == 8)
        accumulate(tau_acc, fd);
      else if (p->kind == 9)
        accumulate(n_acc, fd);
      else if (p->kind == 10)
        accumulate(plus_acc, fd);
      else
        accumulate(minus_acc, fd);
    }
  }

  // A dof claimed as the free trace by two different condition kinds sits at
  // a patch junction; no single scalar satisfies both pointwise systems, so
  // the dof is pinned to zero (O(h) consistency at the corner).
  {
    std::map<int, int> claims;
    for (const auto& [dof, fd] : tau_acc) claims[dof]++;
    for (const auto& [dof, fd] : n_acc) claims[dof]++;
    for (const auto& [dof, fd] : plus_acc) claims[dof]++;
    for (const auto& [dof, fd] : minus_acc) claims[dof]++;
    for (const auto& [dof, cnt] : claims)
      if (cnt > 1) spec.pinned.push_back(dof);
    for (int dof : spec.pinned) {
      tau_acc.erase(dof);
      n_acc.erase(dof);
      plus_acc.erase(dof);
      minus_acc.erase(dof);
    }
  }

  auto flush = [](std::map<int, FrictionDof>& acc, std::vector<FrictionDof>& out) {
    for (auto& [dof, fd] : acc) out.push_back(fd);
  };
  flush(tau_acc, spec.abs_dofs);
  flush(n_acc, spec.abs_dofs);
  flush(plus_acc, spec.plus_dofs);
  flush(minus_acc, spec.minus_dofs);

  for (const auto& d : spec.abs_dofs)
    (d.kind == 8 ? spec.thresholds.g_tau : spec.thresholds.g_n).push_back(d.g);
  for (const auto& d : spec.plus_dofs) spec.thresholds.g_plus.push_back(d.g);
  for (const auto& d : spec.minus_dofs) spec.thresholds.g_minus.push_back(d.g);

  return spec;
}

ConeSpec cone_of(const FunctionalSpec& spec) {
  ConeSpec cone;
  for (const auto& d : spec.plus_dofs) cone.entries.push_back({d.dof, +1.0, d.sgn});
  for (const auto& d : spec.minus_dofs) cone.entries.push_back({d.dof, -1.0, -d.sgn});
  cone.pinned = spec.pinned;
  return cone;
}

double rho_eps(double eta, double eps) {
  double a = std::abs(eta);
  return a > eps ? a - 0.5 * eps : 0.5 * a * a / eps;
}

double drho_eps(double eta, double eps) {
  if (eta > eps) return 1.0;
  if (eta < -eps) return -1.0;
  return eta / eps;
}

double eval_J(const VectorXd& w, const FunctionalSpec& spec, const ConeSpec& cone) {
  for (const auto& e : cone.entries)
    if (e.dir * w[e.dof] < -kConeTol) return std::numeric_limits<double>::infinity();
  for (int dof : cone.pinned)
    if (std::abs(w[dof]) > kConeTol) return std::numeric_limits<double>::infinity();
  double v = 0;
  for (const auto& d : spec.abs_dofs) v += d.gw * std::abs(w[d.dof]);
  for (const auto& d : spec.plus_dofs) v += d.gw * (d.sgn * w[d.dof]);
  for (const auto& d : spec.minus_dofs) v -= d.gw * (d.sgn * w[d.dof]);
  return v;
}

double eval_J_eps(const VectorXd& w, const FunctionalSpec& spec, double eps) {
  if (eps <= 0) throw Error("eval_J_eps: eps must be positive");
  double v = 0;
  for (const auto& d : spec.abs_dofs) v += d.gw * rho_eps(w[d.dof], eps);
  for (const auto& d : spec.plus_dofs) v += d.gw * (d.sgn * w[d.dof]);
  for (const auto& d : spec.minus_dofs) v -= d.gw * (d.sgn * w[d.dof]);
  return v;
}

VectorXd grad_J_eps(const VectorXd& w, const FunctionalSpec& spec, double eps) {
  if (eps <= 0) throw Error("grad_J_eps: eps must be positive");
  VectorXd g = VectorXd::Zero(w.size());
  for (const auto& d : spec.abs_dofs) g[d.dof] += d.gw * drho_eps(w[d.dof], eps);
  for (const auto& d : spec.plus_dofs) g[d.dof] += d.gw * d.sgn;
  for (const auto& d : spec.minus_dofs) g[d.dof] -= d.gw * d.sgn;
  return g;
}

VectorXd project_onto_K(const VectorXd& w, const ConeSpec& cone) {
  VectorXd v = w;
  for (const auto& e : cone.entries)
    if (e.dir * v[e.dof] < 0) v[e.dof] = 0;
  for (int dof : cone.pinned) v[dof] = 0;
  return v;
}

}  // namespace viflow
