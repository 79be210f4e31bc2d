#include "viflow/multipliers.hpp"

#include <cmath>

namespace viflow {

double ComplementarityReport::worst_normalized() const {
  double gs = std::max(g_scale, 1e-300);
  double ts = std::max(trace_scale, 1e-300);
  double w = 0;
  w = std::max(w, tau_bound / gs);
  w = std::max(w, n_bound / gs);
  w = std::max(w, plus_sign / gs);
  w = std::max(w, minus_sign / gs);
  w = std::max(w, tau_compl / (gs * std::max(1.0, ts)));
  w = std::max(w, n_compl / (gs * std::max(1.0, ts)));
  w = std::max(w, plus_compl / (gs * std::max(1.0, ts)));
  w = std::max(w, minus_compl / (gs * std::max(1.0, ts)));
  w = std::max(w, v_sign / std::max(1.0, ts));
  return w;
}

Multipliers recover_multipliers(const DiscreteVI& vi, const VectorXd& w, const VectorXd& lambda,
                                double tol) {
  double vres = vi_residual(vi, w, lambda);
  if (!(vres <= 10 * tol))
    throw Error("recover_multipliers: iterate not converged (residual " + std::to_string(vres) +
                ")");

  VectorXd r = vi.A0 * w - vi.F;
  if (vi.conv_kind != ConvKind::None && vi.conv) r += vi.conv(w) * w;
  if (vi.m() > 0) r += vi.B.transpose() * lambda;

  Multipliers out;
  std::vector<char> friction(vi.n(), 0);
  // At a junction shared by two friction patches the residual is attributed
  // proportionally to the adjacent edge lengths, i.e. divided by the total
  // lumped weight at the dof.
  VectorXd total_weight = VectorXd::Zero(vi.n());
  for (const auto& d : vi.spec.abs_dofs) total_weight[d.dof] += d.weight;
  for (const auto& d : vi.spec.plus_dofs) total_weight[d.dof] += d.weight;
  for (const auto& d : vi.spec.minus_dofs) total_weight[d.dof] += d.weight;
  auto recover_list = [&](const std::vector<FrictionDof>& list,
                          std::vector<Multipliers::Entry>& dst) {
    for (const auto& d : list) {
      friction[d.dof] = 1;
      Multipliers::Entry e;
      e.node = d.node;
      e.tag = d.tag;
      e.dof = d.dof;
      e.weight = d.weight;
      e.g = d.g;
      e.trace = d.sgn * w[d.dof];
      e.value = d.sgn * r[d.dof] / total_weight[d.dof];
      dst.push_back(e);
    }
  };
  {
    std::vector<FrictionDof> tau, nrm;
    for (const auto& d : vi.spec.abs_dofs) (d.kind == 8 ? tau : nrm).push_back(d);
    recover_list(tau, out.sigma_tau);
    recover_list(nrm, out.sigma_n);
  }
  recover_list(vi.spec.plus_dofs, out.sigma_plus);
  recover_list(vi.spec.minus_dofs, out.sigma_minus);
  for (int dof : vi.spec.pinned) friction[dof] = 1;

  double eq = 0;
  for (int i = 0; i < vi.n(); ++i)
    if (!friction[i]) eq = std::max(eq, std::abs(r[i]));
  out.equation_residual = eq;
  return out;
}

ComplementarityReport check_complementarity(const Multipliers& m, const VectorXd& w) {
  (void)w;
  ComplementarityReport rep;
  double gs = 0, ts = 0;
  auto scales = [&](const std::vector<Multipliers::Entry>& list) {
    for (const auto& e : list) {
      gs = std::max(gs, e.g);
      ts = std::max(ts, std::abs(e.trace));
    }
  };
  scales(m.sigma_tau);
  scales(m.sigma_n);
  scales(m.sigma_plus);
  scales(m.sigma_minus);
  rep.g_scale = gs > 0 ? gs : 1.0;
  rep.trace_scale = ts;

  for (const auto& e : m.sigma_tau) {
    rep.tau_bound = std::max(rep.tau_bound, std::abs(e.value) - e.g);
    rep.tau_compl = std::max(rep.tau_compl, std::abs(e.value * e.trace + e.g * std::abs(e.trace)));
  }
  for (const auto& e : m.sigma_n) {
    rep.n_bound = std::max(rep.n_bound, std::abs(e.value) - e.g);
    rep.n_compl = std::max(rep.n_compl, std::abs(e.value * e.trace + e.g * std::abs(e.trace)));
  }
  for (const auto& e : m.sigma_plus) {
    rep.plus_sign = std::max(rep.plus_sign, -(e.value + e.g));
    rep.plus_compl = std::max(rep.plus_compl, std::abs((e.value + e.g) * e.trace));
    rep.v_sign = std::max(rep.v_sign, -e.trace);
  }
  for (const auto& e : m.sigma_minus) {
    rep.minus_sign = std::max(rep.minus_sign, e.value - e.g);
    rep.minus_compl = std::max(rep.minus_compl, std::abs((e.value - e.g) * e.trace));
    rep.v_sign = std::max(rep.v_sign, e.trace);
  }
  return rep;
}

}  // namespace viflow
