#include "viflow/vi.hpp"

#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <set>

namespace viflow {

namespace {

struct DofAggregates {
  VectorXd abs_gw;    // |.| coefficient per dof
  VectorXd cone_lin;  // gradient constant of the cone term (gw * dir)
  VectorXd cone_gw;   // energy coefficient along the feasible ray, >= 0
  VectorXd cone_dir;  // +-1 on cone dofs, 0 elsewhere
  std::vector<char> pinned;
  std::vector<int> abs_list;   // dofs carrying |.| terms
  std::vector<int> cone_list;  // dofs carrying one-sided constraints
};

DofAggregates aggregate(const FunctionalSpec& spec, int n) {
  DofAggregates ag;
  ag.abs_gw = VectorXd::Zero(n);
  ag.cone_lin = VectorXd::Zero(n);
  ag.cone_gw = VectorXd::Zero(n);
  ag.cone_dir = VectorXd::Zero(n);
  ag.pinned.assign(n, 0);
  for (const auto& d : spec.abs_dofs) {
    if (ag.abs_gw[d.dof] == 0) ag.abs_list.push_back(d.dof);
    ag.abs_gw[d.dof] += d.gw;
  }
  auto add_cone = [&](const FrictionDof& d, double dir) {
    if (ag.cone_dir[d.dof] == 0) ag.cone_list.push_back(d.dof);
    ag.cone_dir[d.dof] = dir;
    ag.cone_gw[d.dof] += d.gw;
    ag.cone_lin[d.dof] += d.gw * dir;
  };
  for (const auto& d : spec.plus_dofs) add_cone(d, d.sgn);    // trace = sgn*w >= 0
  for (const auto& d : spec.minus_dofs) add_cone(d, -d.sgn);  // trace = sgn*w <= 0
  for (int dof : spec.pinned) ag.pinned[dof] = 1;
  return ag;
}

struct SaddleWork {
  const SpMat* A = nullptr;
  const SpMat* B = nullptr;
  int n = 0, m = 0;
  int gauge = -1;
};

// Solves the pattern-linear saddle system with clamped velocity rows. On a
// singular factorization retries once with a pressure gauge row (the
// divergence block can lose its constant mode when every free normal trace
// dof is clamped).
bool solve_pattern_system(const SaddleWork& sw, const VectorXd& diag_add,
                          const std::vector<char>& clamp, const VectorXd& rhs_mom,
                          VectorXd& w, VectorXd& lam) {
  const int n = sw.n, m = sw.m;
  auto assemble = [&](int gauge_row, double gauge_val) {
    std::vector<Triplet> trips;
    trips.reserve(sw.A->nonZeros() + 2 * (sw.B ? sw.B->nonZeros() : 0) + n + m);
    for (int k = 0; k < sw.A->outerSize(); ++k)
      for (SpMat::InnerIterator it(*sw.A, k); it; ++it)
        if (!clamp[it.row()]) trips.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < n; ++i) {
      if (clamp[i])
        trips.emplace_back(i, i, 1.0);
      else if (diag_add[i] != 0.0)
        trips.emplace_back(i, i, diag_add[i]);
    }
    if (sw.B)
      for (int k = 0; k < sw.B->outerSize(); ++k)
        for (SpMat::InnerIterator it(*sw.B, k); it; ++it) {
          if (it.row() != gauge_row) trips.emplace_back(n + it.row(), it.col(), it.value());
          if (!clamp[it.col()]) trips.emplace_back(it.col(), n + it.row(), it.value());
        }
    if (gauge_row >= 0) trips.emplace_back(n + gauge_row, n + gauge_row, 1.0);
    SpMat S(n + m, n + m);
    S.setFromTriplets(trips.begin(), trips.end());
    S.makeCompressed();
    VectorXd rhs = VectorXd::Zero(n + m);
    for (int i = 0; i < n; ++i) rhs[i] = clamp[i] ? 0.0 : rhs_mom[i];
    if (gauge_row >= 0) rhs[n + gauge_row] = gauge_val;
    return std::make_pair(S, rhs);
  };

  auto attempt = [&](int gauge_row, double gauge_val) -> bool {
    auto [S, rhs] = assemble(gauge_row, gauge_val);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(S);
    if (lu.info() != Eigen::Success) return false;
    VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) return false;
    w = sol.head(n);
    lam = sol.tail(m);
    return true;
  };

  if (attempt(sw.gauge, 0.0)) return true;
  if (m > 0 && sw.gauge < 0) {
    double soft = lam.size() == m && lam.allFinite() ? lam[0] : 0.0;
    return attempt(0, soft);
  }
  return false;
}

constexpr double kActFactor = 1e-11;

}  // namespace

double kkt_residual(const VectorXd& r, const VectorXd& w, const FunctionalSpec& spec) {
  const int n = static_cast<int>(r.size());
  DofAggregates ag = aggregate(spec, n);
  const double act = kActFactor * std::max(1.0, w.cwiseAbs().maxCoeff());
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    if (ag.pinned[i]) continue;
    double viol = 0;
    const bool is_abs = ag.abs_gw[i] > 0;
    const bool is_cone = ag.cone_dir[i] != 0;
    if (is_cone) {
      double dir = ag.cone_dir[i];
      if (dir * w[i] > act) {
        double slip_part = is_abs ? ag.abs_gw[i] * (w[i] > 0 ? 1.0 : -1.0) : 0.0;
        viol = std::abs(r[i] + ag.cone_lin[i] + slip_part);
      } else {
        viol = std::max(0.0, -(dir * r[i] + ag.cone_gw[i] + ag.abs_gw[i]));
      }
    } else if (is_abs) {
      if (std::abs(w[i]) > act) {
        viol = std::abs(r[i] + ag.abs_gw[i] * (w[i] > 0 ? 1.0 : -1.0));
      } else {
        viol = std::max(0.0, std::abs(r[i]) - ag.abs_gw[i]);
      }
    } else {
      viol = std::abs(r[i]);
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

VISolution solve_convex_vi(const ConvexVIProblem& prob) {
  const SpMat& A = *prob.A;
  const int n = static_cast<int>(A.rows());
  const int m = prob.B ? static_cast<int>(prob.B->rows()) : 0;
  const FunctionalSpec& spec = *prob.spec;
  DofAggregates ag = aggregate(spec, n);

  SaddleWork sw;
  sw.A = &A;
  sw.B = prob.B;
  sw.n = n;
  sw.m = m;
  sw.gauge = prob.gauge_dof;

  VISolution out;
  out.w = VectorXd::Zero(n);
  out.lambda = VectorXd::Zero(m);

  const double fscale = std::max(1.0, prob.F.cwiseAbs().maxCoeff());
  const double ktol = 1e-12 * fscale;

  std::vector<char> cone_active(ag.cone_list.size(), 0);
  std::vector<int> abs_state(ag.abs_list.size(), 0);  // 0 stick/seam, +1/-1 slip

  // One pattern-solve pass at regularization eps (eps = 0: exact polish).
  // Returns true when the state assignment is self-consistent.
  auto pass = [&](double eps) -> bool {
    VectorXd diag = VectorXd::Zero(n);
    VectorXd rhs = prob.F;
    std::vector<char> clamp(ag.pinned.begin(), ag.pinned.end());
    for (size_t k = 0; k < ag.cone_list.size(); ++k) {
      int i = ag.cone_list[k];
      if (cone_active[k])
        clamp[i] = 1;
      else  // a co-located |.| term is linear on the feasible ray
        rhs[i] -= ag.cone_lin[i] + ag.abs_gw[i] * ag.cone_dir[i];
    }
    for (size_t k = 0; k < ag.abs_list.size(); ++k) {
      int i = ag.abs_list[k];
      if (clamp[i] || ag.cone_dir[i] != 0) continue;
      if (abs_state[k] == 0) {
        if (eps > 0)
          diag[i] += ag.abs_gw[i] / eps;
        else
          clamp[i] = 1;
      } else {
        rhs[i] -= ag.abs_gw[i] * abs_state[k];
      }
    }
    if (!solve_pattern_system(sw, diag, clamp, rhs, out.w, out.lambda)) return false;
    ++out.inner_iters;

    // Reclassify against the fresh iterate.
    VectorXd r = A * out.w - prob.F;
    if (m > 0) r += prob.B->transpose() * out.lambda;
    const double wtol = 1e-13 * std::max(1.0, out.w.cwiseAbs().maxCoeff());
    bool changed = false;
    for (size_t k = 0; k < ag.cone_list.size(); ++k) {
      int i = ag.cone_list[k];
      double dir = ag.cone_dir[i];
      char want = cone_active[k];
      if (cone_active[k]) {
        double dd = dir * r[i] + ag.cone_gw[i] + ag.abs_gw[i];
        if (dd < -ktol) want = 0;
      } else {
        if (dir * out.w[i] < -wtol) want = 1;
      }
      if (want != cone_active[k]) {
        cone_active[k] = want;
        changed = true;
      }
    }
    for (size_t k = 0; k < ag.abs_list.size(); ++k) {
      int i = ag.abs_list[k];
      if (ag.cone_dir[i] != 0 || ag.pinned[i]) continue;  // cone state governs
      int want = abs_state[k];
      if (eps > 0) {
        want = std::abs(out.w[i]) <= eps ? 0 : (out.w[i] > 0 ? 1 : -1);
      } else if (abs_state[k] == 0) {
        double xi = -r[i];
        if (std::abs(xi) > ag.abs_gw[i] + ktol) want = xi > 0 ? 1 : -1;
      } else if (abs_state[k] * out.w[i] < -wtol) {
        want = 0;
      }
      if (want != abs_state[k]) {
        abs_state[k] = want;
        changed = true;
      }
    }
    return !changed;
  };

  auto run_rounds = [&](double eps, int max_rounds) -> bool {
    for (int r = 0; r < max_rounds; ++r)
      if (pass(eps)) return true;
    return false;
  };

  auto residual_now = [&]() {
    VectorXd r = A * out.w - prob.F;
    if (m > 0) r += prob.B->transpose() * out.lambda;
    out.vi_res = kkt_residual(r, out.w, spec);
    out.div_res = m > 0 ? (*prob.B * out.w).cwiseAbs().maxCoeff() : 0.0;
    return out.vi_res;
  };

  // Best-iterate tracking: a stagnating active set returns its best visit.
  double best_res = std::numeric_limits<double>::infinity();
  VectorXd best_w, best_lam;
  auto remember_best = [&]() {
    if (residual_now() < best_res) {
      best_res = out.vi_res;
      best_w = out.w;
      best_lam = out.lambda;
    }
  };

  // Regularization continuation. The schedule starts at the trace scale of
  // the friction-free solve and decreases by factors of ten.
  std::vector<double> schedule = prob.eps_schedule;
  if (!ag.abs_list.empty()) {
    if (schedule.empty()) {
      run_rounds(std::numeric_limits<double>::infinity(), 8);  // friction-free probe
      double eps0 = 0;
      for (int i : ag.abs_list) eps0 = std::max(eps0, std::abs(out.w[i]));
      for (int i : ag.cone_list) eps0 = std::max(eps0, std::abs(out.w[i]));
      if (!(eps0 > 1e-14)) eps0 = 1.0;
      for (double e = eps0; e >= 0.9e-8 * eps0; e *= 0.1) schedule.push_back(e);
    }
    for (double eps : schedule) {
      run_rounds(eps, 12);
      out.eps_used.push_back(eps);
      if (eps <= schedule.front() * 1e-3) {
        std::vector<int> save_state = abs_state;
        std::vector<char> save_cone = cone_active;
        for (size_t k = 0; k < ag.abs_list.size(); ++k) {
          double wi = out.w[ag.abs_list[k]];
          abs_state[k] = std::abs(wi) <= eps ? 0 : (wi > 0 ? 1 : -1);
        }
        if (run_rounds(0.0, 30) && residual_now() <= prob.tol) {
          out.ok = true;
          return out;
        }
        abs_state = save_state;
        cone_active = save_cone;
      }
    }
    for (size_t k = 0; k < ag.abs_list.size(); ++k) {
      double wi = out.w[ag.abs_list[k]];
      double e = schedule.empty() ? 0.0 : schedule.back();
      abs_state[k] = std::abs(wi) <= e ? 0 : (wi > 0 ? 1 : -1);
    }
  }

  bool stable = false;
  for (int r = 0; r < 80 && !stable; ++r) {
    stable = pass(0.0);
    remember_best();
  }
  out.ok = out.vi_res <= prob.tol && stable;
  if (!out.ok) {
    if (best_res < out.vi_res) {
      out.w = best_w;
      out.lambda = best_lam;
      residual_now();
    }
    out.ok = out.vi_res <= prob.tol && stable;
    if (!out.ok)
      out.failure = stable ? "inequality residual above tolerance" : "active-set stagnation";
  }
  return out;
}

double vi_residual(const DiscreteVI& vi, const VectorXd& w, const VectorXd& lambda,
                   double* div_res) {
  VectorXd Av = vi.A0 * w;
  if (vi.conv_kind != ConvKind::None && vi.conv) Av += vi.conv(w) * w;
  VectorXd r = Av - vi.F;
  if (vi.m() > 0) r += vi.B.transpose() * lambda;
  if (div_res) *div_res = vi.m() > 0 ? (vi.B * w).cwiseAbs().maxCoeff() : 0.0;
  return kkt_residual(r, w, vi.spec);
}

double contraction_radius(double alpha, double K, double f_dual, bool* regime) {
  if (regime) *regime = false;
  if (K <= 0) {
    if (regime) *regime = true;
    return f_dual / alpha;
  }
  double disc = alpha * alpha - 4.0 * K * f_dual;
  if (disc < 0) return std::numeric_limits<double>::quiet_NaN();
  double M = (alpha - std::sqrt(disc)) / (2.0 * K);
  if (regime) *regime = 2.0 * K * M / alpha < 1.0;
  return M;
}

void check_estimates(const DiscreteVI& vi, const VectorXd& w, SolveReport& rep) {
  rep.w_norm = vi.norm_of(w);
  rep.F_dual = dual_norm(vi.F, vi.G, vi.B, vi.gauge_pressure_dof);
  rep.alpha = vi.constants.alpha;
  if (vi.constants.alpha > 0) {
    rep.energy_rhs = rep.F_dual / vi.constants.alpha;
    rep.energy_bound_ok = rep.w_norm <= rep.energy_rhs * (1.0 + 1e-8) + 1e-300;
    double Kc = vi.constants.K_conv * vi.constants.c_embed;
    rep.uniqueness_value = Kc * rep.F_dual / (vi.constants.alpha * vi.constants.alpha);
    rep.uniqueness_guaranteed =
        vi.conv_kind == ConvKind::None || rep.uniqueness_value < 1.0;
    bool regime = false;
    rep.contraction_radius = contraction_radius(vi.constants.alpha, Kc, rep.F_dual, &regime);
    rep.picard_regime = regime;
  }
}

namespace {

SchemeResult outer_fixed_point(const DiscreteVI& vi, double tol, int max_outer, bool frozen) {
  auto t0 = std::chrono::steady_clock::now();
  SchemeResult res;
  res.w = VectorXd::Zero(vi.n());
  res.lambda = VectorXd::Zero(vi.m());
  SolveReport& rep = res.report;

  check_estimates(vi, res.w, rep);  // fills F_dual, radius etc. at w = 0

  double prev_inc = -1;
  for (int k = 0; k < max_outer; ++k) {
    ConvexVIProblem prob;
    SpMat A_lin = vi.A0;
    VectorXd F = vi.F;
    if (vi.conv_kind != ConvKind::None) {
      SpMat Nw = vi.conv_at(res.w);
      if (frozen)
        F -= Nw * res.w;
      else
        A_lin = vi.A0 + Nw;
    }
    prob.A = &A_lin;
    prob.B = vi.m() > 0 ? &vi.B : nullptr;
    prob.F = F;
    prob.spec = &vi.spec;
    prob.gauge_dof = vi.gauge_pressure_dof;
    prob.tol = tol;
    VISolution sol = solve_convex_vi(prob);
    rep.inner_iters.push_back(sol.inner_iters);
    if (rep.eps_used.empty()) rep.eps_used = sol.eps_used;
    if (!sol.ok && sol.failure != "inequality residual above tolerance") {
      rep.failure = "inner solve failed: " + sol.failure;
      break;
    }

    double inc = vi.norm_of(sol.w - res.w);
    rep.increment_history.push_back(inc);
    if (prev_inc > 1e-14 && inc > 1e-14) rep.contraction_ratios.push_back(inc / prev_inc);
    prev_inc = inc;
    res.w = sol.w;
    res.lambda = sol.lambda;
    rep.outer_iters = k + 1;

    if (frozen && std::isfinite(rep.contraction_radius)) {
      if (vi.norm_of(res.w) > rep.contraction_radius * (1 + 1e-8) + 1e-12)
        rep.picard_ball_ok = false;
    }

    double vres = vi_residual(vi, res.w, res.lambda, &rep.div_res);
    rep.residual_history.push_back(vres);
    rep.vi_res = vres;
    if (vres <= tol || (k > 0 && inc <= tol)) {
      rep.converged = vres <= std::max(tol, 10 * tol);
      break;
    }
  }
  if (rep.outer_iters >= max_outer && !rep.converged && rep.failure.empty())
    rep.failure = "outer iteration limit reached";

  check_estimates(vi, res.w, rep);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace

SchemeResult oseen_fixed_point(const DiscreteVI& vi, double tol, int max_outer) {
  return outer_fixed_point(vi, tol, max_outer, false);
}

SchemeResult frozen_convection_picard(const DiscreteVI& vi, double tol, int max_outer) {
  return outer_fixed_point(vi, tol, max_outer, true);
}

SchemeResult galerkin_regularized_path(const DiscreteVI& vi, std::vector<double> eps_list,
                                       double tol, bool allow_cone) {
  if (vi.spec.has_cone() && !allow_cone)
    throw Error("scheme excludes one-sided constraints (patches of kind 10/11 present)");
  auto t0 = std::chrono::steady_clock::now();
  SchemeResult res;
  const int n = vi.n(), m = vi.m();
  res.w = VectorXd::Zero(n);
  res.lambda = VectorXd::Zero(m);
  SolveReport& rep = res.report;
  check_estimates(vi, res.w, rep);
  ConeSpec cone = cone_of(vi.spec);

  const double fscale = std::max(1.0, vi.F.cwiseAbs().maxCoeff());
  DofAggregates ag = aggregate(vi.spec, n);
  SaddleWork sw;
  sw.B = m > 0 ? &vi.B : nullptr;
  sw.n = n;
  sw.m = m;
  sw.gauge = vi.gauge_pressure_dof;
  std::vector<char> noclamp(n, 0);
  for (int i = 0; i < n; ++i) noclamp[i] = ag.pinned[i];

  // Residual of the regularized equation without the divergence coupling.
  auto residual_nolam = [&](const VectorXd& w, double eps) {
    VectorXd r = vi.A0 * w - vi.F;
    if (vi.conv_kind != ConvKind::None) r += vi.conv(w) * w;
    for (int i : ag.abs_list) r[i] += ag.abs_gw[i] * drho_eps(w[i], eps);
    for (int i : ag.cone_list) r[i] += ag.cone_lin[i];
    for (int i = 0; i < n; ++i)
      if (ag.pinned[i]) r[i] = 0;
    return r;
  };
  auto residual_norm = [&](const VectorXd& w, const VectorXd& lam, double eps) {
    VectorXd r = residual_nolam(w, eps);
    if (m > 0) r += vi.B.transpose() * lam;
    for (int i = 0; i < n; ++i)
      if (ag.pinned[i]) r[i] = 0;
    double rn = r.cwiseAbs().maxCoeff();
    if (m > 0) rn += (vi.B * w).cwiseAbs().maxCoeff();
    return rn;
  };

  bool all_ok = true;
  for (double eps : eps_list) {
    rep.eps_used.push_back(eps);
    VectorXd w = res.w, lam = res.lambda;
    bool newton_ok = false;
    for (int it = 0; it < 40; ++it) {
      double rn = residual_norm(w, lam, eps);
      if (rn <= 1e-12 * fscale) {
        newton_ok = true;
        break;
      }
      SpMat J = vi.A0;
      if (vi.conv_kind != ConvKind::None)
        J = J + vi.conv(w) + (vi.conv_extra ? vi.conv_extra(w) : SpMat(n, n));
      VectorXd diag = VectorXd::Zero(n);
      for (int i : ag.abs_list)
        if (std::abs(w[i]) <= eps) diag[i] = ag.abs_gw[i] / eps;
      sw.A = &J;
      // Solve for the next iterate: (J + D) w+ + B' lam+ = (J + D) w - r,
      // B w+ = 0; the multiplier block is linear so it carries no increment.
      VectorXd rhs_mom = J * w + diag.cwiseProduct(w) - residual_nolam(w, eps);
      VectorXd wn = VectorXd::Zero(n), ln = VectorXd::Zero(m);
      if (!solve_pattern_system(sw, diag, noclamp, rhs_mom, wn, ln)) break;
      VectorXd dw = wn - w, dl = ln - lam;
      double t = 1.0;
      for (int ls = 0;; ++ls) {
        VectorXd wt = w + t * dw, lt = lam + t * dl;
        if (allow_cone) wt = project_onto_K(wt, cone);
        double rtn = residual_norm(wt, lt, eps);
        if (rtn < rn * (1 - 1e-4 * t) || rtn <= 1e-12 * fscale || ls == 7) {
          w = wt;
          lam = lt;
          break;
        }
        t *= 0.5;
      }
    }
    if (!newton_ok && residual_norm(w, lam, eps) <= 1e-9 * fscale) newton_ok = true;
    if (!newton_ok) {
      all_ok = false;
      rep.failure = "regularized Newton failed at eps = " + std::to_string(eps);
      break;
    }
    res.w = w;
    res.lambda = lam;
    rep.inner_iters.push_back(1);
    if (rep.alpha > 0 && rep.F_dual > 0) {
      double ratio = vi.norm_of(res.w) / (rep.F_dual / rep.alpha);
      rep.eps_bound_worst = std::max(rep.eps_bound_worst, ratio);
    }
    rep.residual_history.push_back(vi_residual(vi, res.w, res.lambda, &rep.div_res));
  }
  rep.outer_iters = static_cast<int>(rep.eps_used.size());
  rep.vi_res = vi_residual(vi, res.w, res.lambda, &rep.div_res);
  // Residual target degrades gracefully with the last regularization width:
  // dofs still inside the seam contribute at most their g-weight.
  double seam_slack = 0;
  if (!rep.eps_used.empty())
    for (const auto& d : vi.spec.abs_dofs)
      if (std::abs(res.w[d.dof]) <= rep.eps_used.back())
        seam_slack = std::max(seam_slack, d.gw);
  rep.converged = all_ok && rep.vi_res <= tol + seam_slack;
  check_estimates(vi, res.w, rep);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace viflow
