#include "viflow/assembly.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

namespace viflow {

namespace {

struct QPoint {
  double w;          // physical weight
  Vec2 x;            // position
  double N[6];       // P2 shape values
  Vec2 dN[6];        // physical gradients
  double P1[3];      // vertex (pressure) shape values
};

// Evaluates shape data for one triangle at every interior quadrature point.
void element_qpoints(const FemSpace& sp, int t, std::vector<QPoint>& out) {
  const Mesh& mesh = *sp.mesh;
  const auto& tri = mesh.triangles[t];
  Vec2 x0 = mesh.nodes[tri[0]];
  Mat2 J;
  J.col(0) = mesh.nodes[tri[1]] - x0;
  J.col(1) = mesh.nodes[tri[2]] - x0;
  double detJ = J.determinant();
  Mat2 JinvT = J.inverse().transpose();
  const auto& rule = tri_quadrature();
  out.resize(rule.size());
  for (size_t q = 0; q < rule.size(); ++q) {
    const auto& r = rule[q];
    QPoint& qp = out[q];
    qp.w = r.w * 0.5 * detJ;  // rule weights sum to 1, area = detJ/2
    qp.x = x0 + J * Vec2(r.l1, r.l2);
    p2_shape(r.l0, r.l1, r.l2, qp.N);
    double dref[6][2];
    p2_grad_ref(r.l0, r.l1, r.l2, dref);
    for (int i = 0; i < 6; ++i) qp.dN[i] = JinvT * Vec2(dref[i][0], dref[i][1]);
    qp.P1[0] = r.l0;
    qp.P1[1] = r.l1;
    qp.P1[2] = r.l2;
  }
}

struct EdgeQP {
  double w;  // physical weight (includes edge length)
  Vec2 x;
  double N[3];  // trace shapes: vertex a, vertex b, midpoint
};

void edge_qpoints(const FemSpace& sp, int e, std::vector<EdgeQP>& out) {
  const Mesh& mesh = *sp.mesh;
  const auto& be = mesh.boundary[e];
  Vec2 a = mesh.nodes[be.a], b = mesh.nodes[be.b];
  double len = (b - a).norm();
  const auto& rule = edge_quadrature();
  out.resize(rule.size());
  for (size_t q = 0; q < rule.size(); ++q) {
    out[q].w = rule[q].w * len;
    out[q].x = a + rule[q].t * (b - a);
    p2_edge_shape(rule[q].t, out[q].N);
  }
}

// Velocity values and gradients of a cartesian coefficient vector at an
// interior quadrature point.
void eval_field(const QPoint& qp, const std::array<int, 6>& en, const VectorXd& u_cart, Vec2& val,
                Mat2& grad) {
  val.setZero();
  grad.setZero();
  for (int i = 0; i < 6; ++i) {
    Vec2 ui(u_cart[2 * en[i]], u_cart[2 * en[i] + 1]);
    val += qp.N[i] * ui;
    grad += ui * qp.dN[i].transpose();  // grad(k,l) = du_k/dx_l
  }
}

SpMat from_triplets(int rows, int cols, std::vector<Triplet>& trips) {
  SpMat A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SpMat rotate_square(const AssemblyContext& ctx, const SpMat& A_cart) {
  const SpMat& R = ctx.dofs->R;
  SpMat tmp = A_cart * R;
  return SpMat(R.transpose() * tmp);
}

// Boundary terms common to the three forms: curvature on patches 2 and 7,
// tangential curvature on 3, Robin matrix on 5.
void add_boundary_terms(const AssemblyContext& ctx, std::vector<Triplet>& trips) {
  const FemSpace& sp = *ctx.space;
  const Mesh& mesh = *ctx.mesh;
  std::vector<EdgeQP> qps;
  for (size_t e = 0; e < mesh.boundary.size(); ++e) {
    const auto& be = mesh.boundary[e];
    const BoundaryPatch* p = find_patch(ctx.patches, be.tag);
    if (!p) continue;
    int kind = p->kind;
    if (kind != 2 && kind != 3 && kind != 5 && kind != 7) continue;
    const EdgeGeom& eg = ctx.geom->edges[e];
    int en[3] = {be.a, be.b, sp.bedge_mid[e]};
    edge_qpoints(sp, static_cast<int>(e), qps);
    for (const auto& qp : qps) {
      double c = 0;
      Mat2 coef = Mat2::Zero();
      switch (kind) {
        case 2:
          c = 2.0 * ctx.nu * eg.kappa;
          coef = c * Mat2::Identity();
          break;
        case 7:
          c = ctx.nu * eg.kappa;
          coef = c * Mat2::Identity();
          break;
        case 3:
          c = 2.0 * ctx.nu * eg.kappa;
          coef = c * eg.t * eg.t.transpose();
          break;
        case 5: {
          Mat2 alpha = p->alpha ? p->alpha(qp.x) : Mat2::Zero();
          coef = 2.0 * alpha;
          break;
        }
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              double v = qp.w * qp.N[i] * qp.N[j] * coef(a, b);
              if (v != 0.0) trips.emplace_back(2 * en[i] + a, 2 * en[j] + b, v);
            }
    }
  }
}

SpMat strain_matrix_cart(const AssemblyContext& ctx, double nu, bool with_boundary) {
  const FemSpace& sp = *ctx.space;
  std::vector<Triplet> trips;
  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          double gdot = qp.dN[i].dot(qp.dN[j]);
          for (int a = 0; a < 2; ++a) {
            trips.emplace_back(2 * en[i] + a, 2 * en[j] + a, nu * qp.w * gdot);
            for (int b = 0; b < 2; ++b)
              trips.emplace_back(2 * en[i] + a, 2 * en[j] + b,
                                 nu * qp.w * qp.dN[i][b] * qp.dN[j][a]);
          }
        }
    }
  }
  if (with_boundary) add_boundary_terms(ctx, trips);
  return from_triplets(sp.n_vdofs(), sp.n_vdofs(), trips);
}

// (U.grad)w + (w.grad)U coupling for the static-pressure problem form.
SpMat conv_coupling_a01_cart(const AssemblyContext& ctx, const VectorXd& U_cart) {
  const FemSpace& sp = *ctx.space;
  std::vector<Triplet> trips;
  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      Vec2 U;
      Mat2 gU;
      eval_field(qp, en, U_cart, U, gU);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          double adv = U.dot(qp.dN[j]);  // (U.grad)phi_j
          double mm = qp.N[i] * qp.N[j];
          for (int a = 0; a < 2; ++a) {
            trips.emplace_back(2 * en[i] + a, 2 * en[j] + a, qp.w * qp.N[i] * adv);
            for (int b = 0; b < 2; ++b)
              trips.emplace_back(2 * en[i] + a, 2 * en[j] + b, qp.w * mm * gU(a, b));
          }
        }
    }
  }
  return from_triplets(sp.n_vdofs(), sp.n_vdofs(), trips);
}

// rot U x w + rot w x U coupling for the total-pressure problem form.
SpMat conv_coupling_a02_cart(const AssemblyContext& ctx, const VectorXd& U_cart) {
  const FemSpace& sp = *ctx.space;
  std::vector<Triplet> trips;
  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      Vec2 U;
      Mat2 gU;
      eval_field(qp, en, U_cart, U, gU);
      double rotU = gU(1, 0) - gU(0, 1);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          double mm = qp.N[i] * qp.N[j];
          // (rot U x w).u = rotU (w1 u2 - w2 u1)
          trips.emplace_back(2 * en[i] + 1, 2 * en[j] + 0, qp.w * rotU * mm);
          trips.emplace_back(2 * en[i] + 0, 2 * en[j] + 1, -qp.w * rotU * mm);
          // (rot w x U).u with rot w = d(phi_j)e_b cross
          double rw[2] = {-qp.dN[j][1], qp.dN[j][0]};  // rot(phi_j e_b) for b = 0, 1
          for (int b = 0; b < 2; ++b) {
            trips.emplace_back(2 * en[i] + 1, 2 * en[j] + b, qp.w * rw[b] * qp.N[i] * U.x());
            trips.emplace_back(2 * en[i] + 0, 2 * en[j] + b, -qp.w * rw[b] * qp.N[i] * U.y());
          }
        }
    }
  }
  return from_triplets(sp.n_vdofs(), sp.n_vdofs(), trips);
}

}  // namespace

SpMat assemble_a03(const AssemblyContext& ctx) {
  return rotate_square(ctx, strain_matrix_cart(ctx, ctx.nu, true));
}

SpMat assemble_a01(const AssemblyContext& ctx, const VectorXd& U_framed) {
  VectorXd U_cart = ctx.dofs->to_cartesian(U_framed);
  SpMat A = strain_matrix_cart(ctx, ctx.nu, true);
  A += conv_coupling_a01_cart(ctx, U_cart);
  return rotate_square(ctx, A);
}

SpMat assemble_a02(const AssemblyContext& ctx, const VectorXd& U_framed) {
  VectorXd U_cart = ctx.dofs->to_cartesian(U_framed);
  SpMat A = strain_matrix_cart(ctx, ctx.nu, true);
  A += conv_coupling_a02_cart(ctx, U_cart);
  return rotate_square(ctx, A);
}

SpMat assemble_divergence(const AssemblyContext& ctx) {
  const FemSpace& sp = *ctx.space;
  std::vector<Triplet> trips;
  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps)
      for (int i = 0; i < 3; ++i)  // pressure vertices
        for (int j = 0; j < 6; ++j)
          for (int b = 0; b < 2; ++b)
            trips.emplace_back(en[i], 2 * en[j] + b, qp.w * qp.P1[i] * qp.dN[j][b]);
  }
  SpMat B = from_triplets(sp.n_vertex, sp.n_vdofs(), trips);
  return SpMat(B * ctx.dofs->R);
}

SpMat assemble_h1_gram(const AssemblyContext& ctx) {
  const FemSpace& sp = *ctx.space;
  std::vector<Triplet> trips;
  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          double v = qp.w * (qp.N[i] * qp.N[j] + qp.dN[i].dot(qp.dN[j]));
          trips.emplace_back(2 * en[i], 2 * en[j], v);
          trips.emplace_back(2 * en[i] + 1, 2 * en[j] + 1, v);
        }
  }
  return rotate_square(ctx, from_triplets(sp.n_vdofs(), sp.n_vdofs(), trips));
}

VectorXd assemble_load(LoadKind kind, const AssemblyContext& ctx, const VectorXd& U_framed,
                       const VectorField& f) {
  const FemSpace& sp = *ctx.space;
  const Mesh& mesh = *ctx.mesh;
  VectorXd b = VectorXd::Zero(sp.n_vdofs());
  VectorXd U_cart = ctx.dofs->to_cartesian(U_framed);

  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      Vec2 fv = f ? f(qp.x) : Vec2(0, 0);
      Vec2 conv(0, 0);
      if (kind != LoadKind::F3) {
        Vec2 U;
        Mat2 gU;
        eval_field(qp, en, U_cart, U, gU);
        if (kind == LoadKind::F1) {
          conv = gU * U;  // (U.grad)U
        } else {
          double rotU = gU(1, 0) - gU(0, 1);
          conv = rotU * Vec2(-U.y(), U.x());  // rot U x U
        }
      }
      for (int i = 0; i < 6; ++i) {
        b[2 * en[i] + 0] += qp.w * qp.N[i] * (fv.x() - conv.x());
        b[2 * en[i] + 1] += qp.w * qp.N[i] * (fv.y() - conv.y());
      }
    }
  }

  // Boundary data terms.
  std::vector<EdgeQP> eqps;
  for (size_t e = 0; e < mesh.boundary.size(); ++e) {
    const auto& be = mesh.boundary[e];
    const BoundaryPatch* p = find_patch(ctx.patches, be.tag);
    if (!p) continue;
    int en[3] = {be.a, be.b, sp.bedge_mid[e]};
    const EdgeGeom& eg = ctx.geom->edges[e];
    bool scalar_phi = (p->kind == 2 || p->kind == 4 || p->kind == 7) && p->phi_scalar;
    bool vec_phi = (p->kind == 3 || p->kind == 5 || p->kind == 6) && p->phi_vec;
    if (!scalar_phi && !vec_phi) continue;
    edge_qpoints(sp, static_cast<int>(e), eqps);
    for (const auto& qp : eqps) {
      Vec2 phi(0, 0);
      if (scalar_phi)
        phi = p->phi_scalar(qp.x) * eg.n;
      else
        phi = p->phi_vec(qp.x);
      for (int i = 0; i < 3; ++i) {
        b[2 * en[i] + 0] += qp.w * qp.N[i] * phi.x();
        b[2 * en[i] + 1] += qp.w * qp.N[i] * phi.y();
      }
    }
  }

  // Lifting fold-in: subtract the Stokes-operator action on U.
  SpMat A03_cart = strain_matrix_cart(ctx, ctx.nu, true);
  VectorXd r = b - A03_cart * U_cart;
  VectorXd framed = ctx.dofs->R.transpose() * r;
  return ctx.dofs->reduce(framed);
}

SpMat convection_matrix(ConvKind kind, const AssemblyContext& ctx, const VectorXd& w_framed) {
  const FemSpace& sp = *ctx.space;
  if (kind == ConvKind::None) return SpMat(sp.n_vdofs(), sp.n_vdofs());
  VectorXd w_cart = ctx.dofs->to_cartesian(w_framed);
  std::vector<Triplet> trips;
  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      Vec2 w;
      Mat2 gw;
      eval_field(qp, en, w_cart, w, gw);
      if (kind == ConvKind::A11) {
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) {
            double adv = qp.w * qp.N[i] * w.dot(qp.dN[j]);
            trips.emplace_back(2 * en[i] + 0, 2 * en[j] + 0, adv);
            trips.emplace_back(2 * en[i] + 1, 2 * en[j] + 1, adv);
          }
      } else {
        double rotw = gw(1, 0) - gw(0, 1);
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) {
            double mm = qp.w * rotw * qp.N[i] * qp.N[j];
            trips.emplace_back(2 * en[i] + 1, 2 * en[j] + 0, mm);
            trips.emplace_back(2 * en[i] + 0, 2 * en[j] + 1, -mm);
          }
      }
    }
  }
  return rotate_square(ctx, from_triplets(sp.n_vdofs(), sp.n_vdofs(), trips));
}

SpMat convection_jacobian_extra(ConvKind kind, const AssemblyContext& ctx,
                                const VectorXd& w_framed) {
  const FemSpace& sp = *ctx.space;
  if (kind == ConvKind::None) return SpMat(sp.n_vdofs(), sp.n_vdofs());
  VectorXd w_cart = ctx.dofs->to_cartesian(w_framed);
  std::vector<Triplet> trips;
  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      Vec2 w;
      Mat2 gw;
      eval_field(qp, en, w_cart, w, gw);
      if (kind == ConvKind::A11) {
        // (d.grad)w as a matrix on d
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) {
            double mm = qp.w * qp.N[i] * qp.N[j];
            for (int a = 0; a < 2; ++a)
              for (int bcomp = 0; bcomp < 2; ++bcomp)
                trips.emplace_back(2 * en[i] + a, 2 * en[j] + bcomp, mm * gw(a, bcomp));
          }
      } else {
        // rot d x w as a matrix on d
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) {
            double rd[2] = {-qp.dN[j][1], qp.dN[j][0]};
            for (int bcomp = 0; bcomp < 2; ++bcomp) {
              trips.emplace_back(2 * en[i] + 1, 2 * en[j] + bcomp,
                                 qp.w * rd[bcomp] * qp.N[i] * w.x());
              trips.emplace_back(2 * en[i] + 0, 2 * en[j] + bcomp,
                                 -qp.w * rd[bcomp] * qp.N[i] * w.y());
            }
          }
      }
    }
  }
  return rotate_square(ctx, from_triplets(sp.n_vdofs(), sp.n_vdofs(), trips));
}

namespace {

SpMat restrict_square(const SpMat& A, const std::vector<int>& keep,
                      const std::vector<int>& full2keep) {
  std::vector<Triplet> trips;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      int r = full2keep[it.row()], c = full2keep[it.col()];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  SpMat out(static_cast<int>(keep.size()), static_cast<int>(keep.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SpMat restrict_cols(const SpMat& B, const std::vector<int>& keep,
                    const std::vector<int>& full2keep) {
  std::vector<Triplet> trips;
  for (int k = 0; k < B.outerSize(); ++k)
    for (SpMat::InnerIterator it(B, k); it; ++it) {
      int c = full2keep[it.col()];
      if (c >= 0) trips.emplace_back(it.row(), c, it.value());
    }
  SpMat out(B.rows(), static_cast<int>(keep.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

VectorXd build_lifting(const AssemblyContext& ctx, double* h1_norm) {
  const DofMap& dm = *ctx.dofs;
  const int n = dm.n_dofs;

  // Plain strain operator and divergence in the rotated frame; the lifting
  // problem has no boundary form terms.
  SpMat K = rotate_square(ctx, strain_matrix_cart(ctx, 1.0, false));
  SpMat B = assemble_divergence(ctx);

  std::vector<int> lift_free, full2lf(n, -1);
  for (int d = 0; d < n; ++d)
    if (!dm.lift_fixed[d]) {
      full2lf[d] = static_cast<int>(lift_free.size());
      lift_free.push_back(d);
    }

  VectorXd U = VectorXd::Zero(n);
  for (int d = 0; d < n; ++d)
    if (dm.lift_fixed[d]) U[d] = dm.lift_value[d];

  bool has_free_normal_patch = false;
  std::set<int> tags;
  for (const auto& e : ctx.mesh->boundary) tags.insert(e.tag);
  for (const auto& p : ctx.patches) {
    if (!tags.count(p.tag)) continue;
    if (p.kind == 2 || p.kind == 4 || p.kind == 6 || p.kind == 7) has_free_normal_patch = true;
  }

  VectorXd div_rhs = -(B * U);
  if (!has_free_normal_patch) {
    double scale = 0;
    for (int d = 0; d < n; ++d)
      if (dm.lift_fixed[d]) scale = std::max(scale, std::abs(U[d]));
    double flux = div_rhs.sum();
    if (std::abs(flux) > 1e-10 * std::max(1.0, scale))
      throw Error(
          "incompatible flux: essential boundary data has net flux " + std::to_string(-flux) +
          " and no patch of kind 2, 4, 6 or 7 can carry it");
  }

  const int nf = static_cast<int>(lift_free.size());
  const int np = static_cast<int>(B.rows());
  SpMat Kff = restrict_square(K, lift_free, full2lf);
  SpMat Bf = restrict_cols(B, lift_free, full2lf);
  VectorXd rhs_mom = VectorXd::Zero(nf);
  {
    VectorXd KU = K * U;
    for (int i = 0; i < nf; ++i) rhs_mom[i] = -KU[lift_free[i]];
  }

  std::vector<Triplet> trips;
  for (int k = 0; k < Kff.outerSize(); ++k)
    for (SpMat::InnerIterator it(Kff, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < Bf.outerSize(); ++k)
    for (SpMat::InnerIterator it(Bf, k); it; ++it) {
      trips.emplace_back(nf + it.row(), it.col(), it.value());
      trips.emplace_back(it.col(), nf + it.row(), it.value());
    }
  VectorXd rhs(nf + np);
  rhs.head(nf) = rhs_mom;
  rhs.tail(np) = div_rhs;
  if (!has_free_normal_patch) {
    // Pressure gauge: overwrite the first multiplier row.
    std::vector<Triplet> kept;
    kept.reserve(trips.size());
    for (const auto& t : trips)
      if (t.row() != nf) kept.push_back(t);
    kept.emplace_back(nf, nf, 1.0);
    trips.swap(kept);
    rhs[nf] = 0.0;
  }
  SpMat S(nf + np, nf + np);
  S.setFromTriplets(trips.begin(), trips.end());
  S.makeCompressed();
  Eigen::SparseLU<SpMat> lu(S);
  if (lu.info() != Eigen::Success) throw Error("lifting solve failed (singular system)");
  VectorXd sol = lu.solve(rhs);
  for (int i = 0; i < nf; ++i) U[lift_free[i]] = sol[i];

  if (h1_norm) {
    SpMat G = assemble_h1_gram(ctx);
    *h1_norm = std::sqrt(std::max(0.0, U.dot(G * U)));
  }
  return U;
}

namespace {

// LU of the constrained saddle [M B'; B 0], solving M z = r on ker B. A
// rank-deficient divergence block (no pressure-fixing patch) gets one row
// replaced by a multiplier gauge.
struct KerBSolver {
  Eigen::SparseLU<SpMat> lu;
  int n = 0, m = 0;
  bool ok = false;

  KerBSolver(const SpMat& M, const SpMat& B) {
    n = static_cast<int>(M.rows());
    m = static_cast<int>(B.rows());
    ok = factor(M, B, -1) || factor(M, B, 0);
  }

  bool factor(const SpMat& M, const SpMat& B, int gauge) {
    std::vector<Triplet> trips;
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMat::InnerIterator it(M, k); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < B.outerSize(); ++k)
      for (SpMat::InnerIterator it(B, k); it; ++it) {
        if (it.row() != gauge) trips.emplace_back(n + it.row(), it.col(), it.value());
        trips.emplace_back(it.col(), n + it.row(), it.value());
      }
    if (gauge >= 0) trips.emplace_back(n + gauge, n + gauge, 1.0);
    SpMat S(n + m, n + m);
    S.setFromTriplets(trips.begin(), trips.end());
    S.makeCompressed();
    lu.compute(S);
    return lu.info() == Eigen::Success;
  }

  VectorXd solve(const VectorXd& r) const {
    VectorXd rhs = VectorXd::Zero(n + m);
    rhs.head(n) = r;
    VectorXd sol = lu.solve(rhs);
    return sol.head(n);
  }
};

VectorXd seeded_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

// Extremal generalized eigenvalues of (sym A, G) on ker B by power/inverse
// iteration with sparse saddle solves; used beyond the dense-path size.
CoercivityEstimate estimate_constants_iterative(const SpMat& A0_red, const SpMat& B_red,
                                                const SpMat& G_red) {
  CoercivityEstimate ce;
  const int n = static_cast<int>(A0_red.rows());
  SpMat As = SpMat(0.5 * (A0_red + SpMat(A0_red.transpose())));

  KerBSolver gsolve(G_red, B_red);
  if (!gsolve.ok) throw Error("coercivity estimate: norm-matrix factorization failed");
  auto rayleigh = [&](const VectorXd& y) {
    return y.dot(As * y) / std::max(1e-300, y.dot(G_red * y));
  };

  // Largest eigenvalue: power iteration on G^{-1} As within ker B.
  VectorXd y = gsolve.solve(G_red * seeded_vector(n, 20240801u));
  double lam_max = 0;
  for (int it = 0; it < 120; ++it) {
    VectorXd z = gsolve.solve(As * y);
    double nz = std::sqrt(std::max(1e-300, z.dot(G_red * z)));
    z /= nz;
    double lam = rayleigh(z);
    bool done = it > 8 && std::abs(lam - lam_max) <= 1e-10 * std::max(1.0, std::abs(lam));
    lam_max = lam;
    y = z;
    if (done) break;
  }
  ce.K_cont = lam_max;

  // Smallest eigenvalue: inverse iteration, As z = G y on ker B. The
  // Rayleigh quotients decrease towards the minimum from above.
  KerBSolver asolve(As, B_red);
  if (!asolve.ok) {
    ce.alpha = 0;  // singular or indefinite operator
    ce.valid = false;
    return ce;
  }
  y = gsolve.solve(G_red * seeded_vector(n, 20240802u));
  double lam_min = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 160; ++it) {
    VectorXd z = asolve.solve(G_red * y);
    double nz = std::sqrt(std::max(1e-300, z.dot(G_red * z)));
    z /= nz;
    double lam = rayleigh(z);
    bool done = it > 8 && std::abs(lam - lam_min) <= 1e-10 * std::max(1.0, std::abs(lam));
    lam_min = std::min(lam_min, lam);
    y = z;
    if (done) break;
  }
  ce.alpha = lam_min;
  ce.valid = ce.alpha > 0;
  return ce;
}

constexpr int kDenseEigLimit = 2500;

}  // namespace

CoercivityEstimate estimate_constants(const SpMat& A0_red, const SpMat& B_red,
                                      const SpMat& G_red) {
  const int n = static_cast<int>(A0_red.rows());
  if (n > kDenseEigLimit) return estimate_constants_iterative(A0_red, B_red, G_red);
  CoercivityEstimate ce;
  MatrixXd Z = divfree_basis(B_red, n);
  MatrixXd As = 0.5 * (MatrixXd(A0_red) + MatrixXd(A0_red).transpose());
  MatrixXd Ap = Z.transpose() * As * Z;
  MatrixXd Gp = Z.transpose() * MatrixXd(G_red) * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(Ap, Gp);
  if (es.info() != Eigen::Success) throw Error("coercivity eigensolve failed");
  ce.alpha = es.eigenvalues().minCoeff();
  ce.K_cont = es.eigenvalues().maxCoeff();
  ce.valid = ce.alpha > 0;
  return ce;
}

MatrixXd divfree_basis(const SpMat& B_red, int n) {
  if (B_red.rows() == 0 || B_red.nonZeros() == 0) return MatrixXd::Identity(n, n);
  MatrixXd Bt = MatrixXd(B_red).transpose();  // n x m
  Eigen::ColPivHouseholderQR<MatrixXd> qr(Bt);
  int rank = static_cast<int>(qr.rank());
  MatrixXd Q = qr.householderQ();
  return Q.rightCols(n - rank);
}

double dual_norm(const VectorXd& F_red, const SpMat& G_red, const SpMat& B_red,
                 int gauge_pressure_dof) {
  const int n = static_cast<int>(G_red.rows());
  const int m = static_cast<int>(B_red.rows());
  std::vector<Triplet> trips;
  for (int k = 0; k < G_red.outerSize(); ++k)
    for (SpMat::InnerIterator it(G_red, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < B_red.outerSize(); ++k)
    for (SpMat::InnerIterator it(B_red, k); it; ++it) {
      if (gauge_pressure_dof >= 0 && it.row() == gauge_pressure_dof) continue;
      trips.emplace_back(n + it.row(), it.col(), it.value());
      trips.emplace_back(it.col(), n + it.row(), it.value());
    }
  if (gauge_pressure_dof >= 0) trips.emplace_back(n + gauge_pressure_dof, n + gauge_pressure_dof, 1.0);
  SpMat S(n + m, n + m);
  S.setFromTriplets(trips.begin(), trips.end());
  S.makeCompressed();
  Eigen::SparseLU<SpMat> lu(S);
  if (lu.info() != Eigen::Success) throw Error("dual norm solve failed");
  VectorXd rhs = VectorXd::Zero(n + m);
  rhs.head(n) = F_red;
  VectorXd sol = lu.solve(rhs);
  double v = F_red.dot(sol.head(n));
  return std::sqrt(std::max(0.0, v));
}

double l4_norm(const AssemblyContext& ctx, const VectorXd& w_red) {
  const FemSpace& sp = *ctx.space;
  VectorXd w_cart = ctx.dofs->to_cartesian(ctx.dofs->expand(w_red));
  double acc = 0;
  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      Vec2 w;
      Mat2 gw;
      eval_field(qp, en, w_cart, w, gw);
      double s = w.squaredNorm();
      acc += qp.w * s * s;
    }
  }
  return std::pow(acc, 0.25);
}

void estimate_embedding_constants(CoercivityEstimate& ce, const AssemblyContext& ctx,
                                  ConvKind kind, const SpMat& A0_red, const SpMat& B_red,
                                  const SpMat& G_red) {
  (void)A0_red;
  const int n = static_cast<int>(G_red.rows());
  std::mt19937 rng(20240817);
  std::normal_distribution<double> nd;
  // Divergence-free probes: dense basis at desk scale, G-orthogonal saddle
  // projection beyond it.
  MatrixXd Z;
  std::unique_ptr<KerBSolver> proj;
  if (n <= kDenseEigLimit) {
    Z = divfree_basis(B_red, n);
    if (Z.cols() == 0) return;
  } else {
    proj = std::make_unique<KerBSolver>(G_red, B_red);
    if (!proj->ok) return;
  }
  auto random_u = [&]() {
    VectorXd u;
    if (proj) {
      VectorXd y(n);
      for (int i = 0; i < n; ++i) y[i] = nd(rng);
      u = proj->solve(G_red * y);
    } else {
      VectorXd r(Z.cols());
      for (int i = 0; i < r.size(); ++i) r[i] = nd(rng);
      u = Z * r;
    }
    double g = std::sqrt(std::max(1e-300, u.dot(G_red * u)));
    return VectorXd(u / g);
  };

  double best = 0;
  for (int s = 0; s < 32; ++s) best = std::max(best, l4_norm(ctx, random_u()));
  ce.c_embed = best;

  if (kind == ConvKind::None) {
    ce.K_conv = 0;
    return;
  }
  double bestK = 0;
  for (int s = 0; s < 24; ++s) {
    VectorXd w = random_u(), u = random_u(), v = random_u();
    SpMat Nw = convection_matrix(kind, ctx, ctx.dofs->expand(w));
    // reduce on the fly
    double val = 0;
    VectorXd Nu = Nw * ctx.dofs->expand(u);
    VectorXd v_full = ctx.dofs->expand(v);
    val = std::abs(v_full.dot(Nu));
    double wl4 = std::max(1e-300, l4_norm(ctx, w));
    bestK = std::max(bestK, val / wl4);
  }
  ce.K_conv = bestK;
}

double velocity_error_sq(const AssemblyContext& ctx, const VectorXd& v_cart,
                         const std::function<Vec2(const Vec2&)>& u,
                         const std::function<Mat2(const Vec2&)>& gu, bool h1) {
  const FemSpace& sp = *ctx.space;
  double acc = 0;
  std::vector<QPoint> qps;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      Vec2 vh;
      Mat2 gh;
      eval_field(qp, en, v_cart, vh, gh);
      Vec2 du = vh - u(qp.x);
      acc += qp.w * du.squaredNorm();
      if (h1) {
        Mat2 dg = gh - gu(qp.x);
        acc += qp.w * dg.squaredNorm();
      }
    }
  }
  return acc;
}

double pressure_error(const AssemblyContext& ctx, const VectorXd& p_vertex,
                      const std::function<double(const Vec2&)>& p) {
  const FemSpace& sp = *ctx.space;
  std::vector<QPoint> qps;
  double area = 0, mean = 0;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      double ph = qp.P1[0] * p_vertex[en[0]] + qp.P1[1] * p_vertex[en[1]] +
                  qp.P1[2] * p_vertex[en[2]];
      area += qp.w;
      mean += qp.w * (ph - p(qp.x));
    }
  }
  mean /= area;
  double acc = 0;
  for (size_t t = 0; t < sp.elem.size(); ++t) {
    const auto& en = sp.elem[t];
    element_qpoints(sp, static_cast<int>(t), qps);
    for (const auto& qp : qps) {
      double ph = qp.P1[0] * p_vertex[en[0]] + qp.P1[1] * p_vertex[en[1]] +
                  qp.P1[2] * p_vertex[en[2]];
      double d = ph - p(qp.x) - mean;
      acc += qp.w * d * d;
    }
  }
  return std::sqrt(acc);
}

SpMat restrict_to_free(const SpMat& A_full, const DofMap& dm) {
  return restrict_square(A_full, dm.free2full, dm.full2free);
}

SpMat restrict_cols_to_free(const SpMat& B_full, const DofMap& dm) {
  return restrict_cols(B_full, dm.free2full, dm.full2free);
}

double weighted_trace_constant(const VectorXd& diag, const SpMat& B_red, const SpMat& G_red) {
  const int n = static_cast<int>(G_red.rows());
  if (n <= kDenseEigLimit) {
    MatrixXd Z = divfree_basis(B_red, n);
    MatrixXd Qp = Z.transpose() * diag.asDiagonal() * Z;
    MatrixXd Gp = Z.transpose() * MatrixXd(G_red) * Z;
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(Qp, Gp);
    if (es.info() != Eigen::Success) throw Error("trace constant eigensolve failed");
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }
  KerBSolver gsolve(G_red, B_red);
  if (!gsolve.ok) throw Error("trace constant: norm-matrix factorization failed");
  VectorXd y = gsolve.solve(G_red * seeded_vector(n, 20240803u));
  double lam = 0;
  for (int it = 0; it < 160; ++it) {
    VectorXd z = gsolve.solve(diag.cwiseProduct(y));
    double nz = std::sqrt(std::max(1e-300, z.dot(G_red * z)));
    if (nz < 1e-280) break;  // trace form can be tiny relative to the norm
    z /= nz;
    double l = z.dot(diag.cwiseProduct(z)) / std::max(1e-300, z.dot(G_red * z));
    bool done = it > 8 && std::abs(l - lam) <= 1e-10 * std::max(1.0, std::abs(l));
    lam = l;
    y = z;
    if (done) break;
  }
  return std::sqrt(std::max(0.0, lam));
}

void write_matrix_market(const SpMat& A, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write matrix file '" + path + "'");
  char buf[96];
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()),
                    static_cast<long>(it.col()), it.value());
      out << buf;
    }
}

}  // namespace viflow
