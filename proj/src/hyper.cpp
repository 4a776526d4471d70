#include "scf/hyper.hpp"

#include <cmath>
#include <sstream>

#include "scf/linalg.hpp"

namespace scf {

namespace {

// Gradient coefficients of gamma in the (h_u, h_v) basis and their
// derivatives, all algebraic in the bundle fields.
struct GradGamma {
  double c1, c2, c1u, c1v, c2u, c2v;
};

GradGamma grad_gamma(const GaussPair& p, long k) {
  double E = p.E[k], F = p.F[k], G = p.G[k];
  double W = E * G - F * F;
  double Wu = p.Eu[k] * G + E * p.Gu[k] - 2.0 * F * p.Fu[k];
  double Wv = p.Ev[k] * G + E * p.Gv[k] - 2.0 * F * p.Fv[k];
  double n1 = G * p.gamma_u[k] - F * p.gamma_v[k];
  double n2 = E * p.gamma_v[k] - F * p.gamma_u[k];
  GradGamma g;
  g.c1 = n1 / W;
  g.c2 = n2 / W;
  double n1u = p.Gu[k] * p.gamma_u[k] + G * p.gamma_uu[k] - p.Fu[k] * p.gamma_v[k] -
               F * p.gamma_uv[k];
  double n1v = p.Gv[k] * p.gamma_u[k] + G * p.gamma_uv[k] - p.Fv[k] * p.gamma_v[k] -
               F * p.gamma_vv[k];
  double n2u = p.Eu[k] * p.gamma_v[k] + E * p.gamma_uv[k] - p.Fu[k] * p.gamma_u[k] -
               F * p.gamma_uu[k];
  double n2v = p.Ev[k] * p.gamma_v[k] + E * p.gamma_vv[k] - p.Fv[k] * p.gamma_u[k] -
               F * p.gamma_uv[k];
  g.c1u = (n1u * W - n1 * Wu) / (W * W);
  g.c1v = (n1v * W - n1 * Wv) / (W * W);
  g.c2u = (n2u * W - n2 * Wu) / (W * W);
  g.c2v = (n2v * W - n2 * Wv) / (W * W);
  return g;
}

}  // namespace

Hypersurface build_hypersurface(const GaussPair& pair, double w_max,
                                double rank_tol) {
  const Grid2& g = pair.h.grid();
  const int dim = pair.n + 1;
  const int nxi = pair.n - 2;
  Hypersurface h;
  h.pair = pair;
  h.n = pair.n;
  h.w_max = w_max;
  h.exact = pair.exact_derivatives && pair.n == 3;
  h.f0 = VecField(g, dim);
  h.f0u = VecField(g, dim);
  h.f0v = VecField(g, dim);
  h.e1 = VecField(g, dim);
  h.e2 = VecField(g, dim);
  h.sx = MatField(g, 2, 2);
  h.cx = MatField(g, nxi, 2);
  h.shape = MatField(g, 2, 2);
  h.kappa1 = RealField(g);
  h.kappa2 = RealField(g);

  // cross-section and its derivatives from the bundle
  par::for_index(g.size(), [&](long k) {
    GradGamma gg = grad_gamma(pair, k);
    h.f0.at(k) = pair.gamma[k] * pair.h.at(k) + gg.c1 * pair.hu.at(k) +
                 gg.c2 * pair.hv.at(k);
    h.f0u.at(k) = pair.gamma_u[k] * pair.h.at(k) + pair.gamma[k] * pair.hu.at(k) +
                  gg.c1u * pair.hu.at(k) + gg.c1 * pair.huu.at(k) +
                  gg.c2u * pair.hv.at(k) + gg.c2 * pair.huv.at(k);
    h.f0v.at(k) = pair.gamma_v[k] * pair.h.at(k) + pair.gamma[k] * pair.hv.at(k) +
                  gg.c1v * pair.hu.at(k) + gg.c1 * pair.huv.at(k) +
                  gg.c2v * pair.hv.at(k) + gg.c2 * pair.hvv.at(k);
  });

  // fiber frame
  h.xi.assign(nxi, VecField(g, dim));
  h.xiu.assign(nxi, VecField(g, dim));
  h.xiv.assign(nxi, VecField(g, dim));
  if (pair.n == 3) {
    // closed-form unit normal of span{h, h_u, h_v} in R^4, smooth in (u,v)
    par::for_index(g.size(), [&](long k) {
      Eigen::Vector4d a = pair.h.at(k), b = pair.hu.at(k), c = pair.hv.at(k);
      Eigen::Vector4d t = cross4(a, b, c);
      double nt = t.norm();
      if (nt < 1e-300) fail(errc::frame_degenerate, "fiber frame degenerate");
      Eigen::Vector4d tu = cross4(b, b, c) + cross4(a, pair.huu.at(k), c) +
                           cross4(a, b, pair.huv.at(k));
      Eigen::Vector4d tv = cross4(c, b, c) + cross4(a, pair.huv.at(k), c) +
                           cross4(a, b, pair.hvv.at(k));
      h.xi[0].at(k) = t / nt;
      h.xiu[0].at(k) = tu / nt - t * (t.dot(tu)) / (nt * nt * nt);
      h.xiv[0].at(k) = tv / nt - t * (t.dot(tv)) / (nt * nt * nt);
    });
    if (!pair.exact_derivatives) {
      // stencil derivatives stay consistent with the stencil-made bundle
      h.xiu[0] = diff(h.xi[0], DiffAxis::u);
      h.xiv[0] = diff(h.xi[0], DiffAxis::v);
    }
  } else {
    // complement frame per node, then a nearest-frame alignment sweep
    std::vector<Eigen::MatrixXd> frames(g.size());
    for (long k = 0; k < g.size(); ++k) {
      Eigen::MatrixXd tang(dim, 3);
      tang.col(0) = pair.h.at(k);
      tang.col(1) = pair.hu.at(k);
      tang.col(2) = pair.hv.at(k);
      frames[k] = complement_basis(tang);
    }
    for (int j = 0; j < g.nv; ++j)
      for (int i = 0; i < g.nu; ++i) {
        if (i == 0 && j == 0) continue;
        long k = g.idx(i, j);
        long ref = j == 0 ? g.idx(i - 1, 0) : g.idx(i, j - 1);
        double min_sv = 0;
        Eigen::MatrixXd r = procrustes(frames[k], frames[ref], &min_sv);
        if (min_sv < 0.5)
          fail(errc::frame_discontinuity,
               "fiber frame alignment failed at node (" + std::to_string(i) +
                   ", " + std::to_string(j) + ")");
        frames[k] = frames[k] * r;
      }
    for (long k = 0; k < g.size(); ++k)
      for (int x = 0; x < nxi; ++x) h.xi[x].at(k) = frames[k].col(x);
    for (int x = 0; x < nxi; ++x) {
      h.xiu[x] = diff(h.xi[x], DiffAxis::u);
      h.xiv[x] = diff(h.xi[x], DiffAxis::v);
    }
  }

  // horizontal-plane data and the shape matrix
  par::for_index(g.size(), [&](long k) {
    Eigen::VectorXd hu = pair.hu.at(k), hv = pair.hv.at(k);
    Eigen::VectorXd a = hu.normalized();
    Eigen::VectorXd b = (hv - hv.dot(a) * a).eval();
    double nb = b.norm();
    if (nb < 1e-300) return;
    b /= nb;
    h.e1.at(k) = a;
    h.e2.at(k) = b;

    // xi-coefficients of the cross-section derivatives
    for (int x = 0; x < nxi; ++x) {
      h.cx.at(k)(x, 0) = h.f0u.at(k).dot(h.xi[x].at(k));
      h.cx.at(k)(x, 1) = h.f0v.at(k).dot(h.xi[x].at(k));
    }
    // projected horizontals in the e-basis
    Eigen::Vector2d xu(h.f0u.at(k).dot(a), h.f0u.at(k).dot(b));
    Eigen::Vector2d xv(h.f0v.at(k).dot(a), h.f0v.at(k).dot(b));
    h.sx.at(k).col(0) = xu;
    h.sx.at(k).col(1) = xv;

    // second-form on the horizontal lifts: II_ab = -<h_a, X_b>
    Eigen::Matrix2d he;
    he << hu.dot(a), hv.dot(a), hu.dot(b), hv.dot(b);  // e-coords of h_u, h_v
    Eigen::Matrix2d ii = -(he.transpose() * h.sx.at(k));
    ii = 0.5 * (ii + ii.transpose()).eval();
    Eigen::Matrix2d sinv = h.sx.at(k).inverse();
    Eigen::Matrix2d ae = sinv.transpose() * ii * sinv;
    ae = 0.5 * (ae + ae.transpose()).eval();
    h.shape.at(k) = ae;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(ae);
    double l0 = es.eigenvalues()(0), l1 = es.eigenvalues()(1);
    if (std::abs(l0) > std::abs(l1)) std::swap(l0, l1);
    h.kappa1[k] = l1;  // larger magnitude
    h.kappa2[k] = l0;
  });

  // regularity at the sampled fiber offsets
  h.regular = Mask(g, 0);
  std::vector<double> offsets = {0.0, w_max, -w_max};
  par::for_index(g.size(), [&](long k) {
    if (!pair.immersed[k]) return;
    for (double w : offsets) {
      Eigen::MatrixXd d(dim, pair.n);
      Eigen::VectorXd cu = h.f0u.at(k), cv = h.f0v.at(k);
      for (int x = 0; x < nxi; ++x) {
        cu += w * h.xiu[x].at(k);
        cv += w * h.xiv[x].at(k);
      }
      d.col(0) = cu;
      d.col(1) = cv;
      for (int x = 0; x < nxi; ++x) d.col(2 + x) = h.xi[x].at(k);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(d);
      if (svd.singularValues()(pair.n - 1) <
          rank_tol * svd.singularValues()(0))
        return;
    }
    h.regular[k] = 1;
  });
  long ok = 0;
  double min_ratio = 1e300;
  double kmax = 0;
  for (long k = 0; k < g.size(); ++k) {
    if (!h.regular[k]) continue;
    ++ok;
    kmax = std::max(kmax, std::abs(h.kappa1[k]));
  }
  for (long k = 0; k < g.size(); ++k)
    if (h.regular[k])
      min_ratio = std::min(min_ratio, std::abs(h.kappa2[k]) / std::max(kmax, 1e-300));
  h.regular_fraction = static_cast<double>(ok) / g.size();
  h.min_curvature_ratio = ok ? min_ratio : 0;
  if (ok == 0) fail(errc::singular_point, "no regular nodes");

  // normal-tangency residual through the stencil route
  {
    VecField f0u_fd = diff(h.f0, DiffAxis::u);
    VecField f0v_fd = diff(h.f0, DiffAxis::v);
    double worst = 0, scale = 0;
    for (int j = 2; j < g.nv - 2; ++j)
      for (int i = 2; i < g.nu - 2; ++i) {
        long k = g.idx(i, j);
        if (!h.regular[k]) continue;
        worst = std::max(worst, std::abs(pair.h.at(k).dot(f0u_fd.at(k))));
        worst = std::max(worst, std::abs(pair.h.at(k).dot(f0v_fd.at(k))));
        for (int x = 0; x < nxi; ++x)
          worst = std::max(worst, std::abs(pair.h.at(k).dot(h.xi[x].at(k))));
        scale = std::max({scale, f0u_fd.at(k).norm(), f0v_fd.at(k).norm()});
      }
    h.gauss_identity_res = worst / std::max(scale, 1e-300);
  }
  return h;
}

EnvelopeResiduals envelope_check(const Hypersurface& h, const EnvelopeSeed& seed) {
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  VecField phi(g, dim), phiu(g, dim), phiv(g, dim);
  for (int c = 0; c < dim; ++c) {
    RealField fu = diff(seed.phi[c + 1], DiffAxis::u);
    RealField fv = diff(seed.phi[c + 1], DiffAxis::v);
    for (long k = 0; k < g.size(); ++k) {
      phi.at(k)(c) = seed.phi[c + 1][k];
      phiu.at(k)(c) = fu[k];
      phiv.at(k)(c) = fv[k];
    }
  }
  RealField p0u = diff(seed.phi[0], DiffAxis::u);
  RealField p0v = diff(seed.phi[0], DiffAxis::v);

  const std::vector<double> offsets = {0.0, 0.37 * h.w_max, -h.w_max};
  EnvelopeResiduals out;
  double s0 = 0, su = 0, sv = 0;
  for (double w : offsets) {
    for (int j = 2; j < g.nv - 2; ++j)
      for (int i = 2; i < g.nu - 2; ++i) {
        long k = g.idx(i, j);
        if (!h.regular[k]) continue;
        Eigen::VectorXd psi = h.f0.at(k);
        for (size_t x = 0; x < h.xi.size(); ++x) psi += w * h.xi[x].at(k);
        double r0 = phi.at(k).dot(psi) - seed.phi[0][k];
        double ru = phiu.at(k).dot(psi) - p0u[k];
        double rv = phiv.at(k).dot(psi) - p0v[k];
        out.value = std::max(out.value, std::abs(r0));
        out.du = std::max(out.du, std::abs(ru));
        out.dv = std::max(out.dv, std::abs(rv));
        s0 = std::max(s0, std::abs(phi.at(k).dot(psi)) + std::abs(seed.phi[0][k]));
        su = std::max(su, std::abs(phiu.at(k).dot(psi)) + std::abs(p0u[k]));
        sv = std::max(sv, std::abs(phiv.at(k).dot(psi)) + std::abs(p0v[k]));
      }
  }
  out.value /= std::max(s0, 1e-300);
  out.du /= std::max(su, 1e-300);
  out.dv /= std::max(sv, 1e-300);
  return out;
}

SplitData splitting(const Hypersurface& h, double span_ceiling) {
  const Grid2& g = h.grid();
  const int nxi = h.n - 2;
  SplitData out;
  out.c_mats.assign(nxi, MatField(g, 2, 2));
  out.a_coef.assign(nxi, RealField(g));
  out.b_coef.assign(nxi, RealField(g));
  out.j_e = MatField(g, 2, 2);
  out.j_coord = MatField(g, 2, 2);
  out.fit_res = RealField(g);
  out.valid = Mask(g, 0);

  std::vector<long> type_votes(2, 0);
  std::vector<double> bmax_per(nxi, 0.0);

  for (long k = 0; k < g.size(); ++k) {
    if (!h.regular[k]) continue;
    Eigen::Matrix2d sinv = h.sx.at(k).inverse();
    // C_xi in the e-basis: columns are -<d_a xi, e_b> against the lift basis
    std::vector<Eigen::Matrix2d> cs(nxi);
    for (int x = 0; x < nxi; ++x) {
      Eigen::Matrix2d m;
      m(0, 0) = -h.xiu[x].at(k).dot(h.e1.at(k));
      m(1, 0) = -h.xiu[x].at(k).dot(h.e2.at(k));
      m(0, 1) = -h.xiv[x].at(k).dot(h.e1.at(k));
      m(1, 1) = -h.xiv[x].at(k).dot(h.e2.at(k));
      cs[x] = m * sinv;
      out.c_mats[x].at(k) = cs[x];
    }
    // common traceless direction (dominant right singular vector over the
    // stacked traceless parts)
    Eigen::MatrixXd stack(nxi, 3);
    double cscale = 0;
    for (int x = 0; x < nxi; ++x) {
      Eigen::Matrix2d t = cs[x] - 0.5 * cs[x].trace() * Eigen::Matrix2d::Identity();
      stack(x, 0) = t(0, 0);  // traceless: t11 = -t22
      stack(x, 1) = t(0, 1);
      stack(x, 2) = t(1, 0);
      cscale = std::max(cscale, cs[x].norm());
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stack, Eigen::ComputeFullV);
    Eigen::Vector3d dir = svd.matrixV().col(0);
    Eigen::Matrix2d t0;
    t0 << dir(0), dir(1), dir(2), -dir(0);
    double det = t0.determinant();
    if (std::abs(det) < 1e-28) continue;
    bool elliptic = det > 0;
    Eigen::Matrix2d j = t0 / std::sqrt(std::abs(det));

    // orientation conventions, in the coordinate basis so the deformation
    // scalar integrates against a matching structure sign
    Eigen::Matrix2d jco = sinv * j * h.sx.at(k);
    if (!elliptic) {
      // the +1 eigendirection lies along the first conjugate direction
      Eigen::EigenSolver<Eigen::Matrix2d> es(jco);
      int plus = std::abs(es.eigenvalues()(0).real() - 1.0) < 0.5 ? 0 : 1;
      Eigen::Vector2d ep = es.eigenvectors().col(plus).real().normalized();
      Eigen::Vector2d em = es.eigenvectors().col(1 - plus).real().normalized();
      if (std::abs(ep(0)) < std::abs(em(0))) {
        j = -j;
        jco = -jco;
      }
    } else {
      // the first coordinate direction maps onto the second
      if (jco(1, 0) < 0) {
        j = -j;
        jco = -jco;
      }
    }
    out.j_e.at(k) = j;
    out.j_coord.at(k) = jco;

    double res = 0;
    const double jnorm2 = j.cwiseProduct(j).sum();
    for (int x = 0; x < nxi; ++x) {
      double a = 0.5 * cs[x].trace();
      double b = (cs[x] - a * Eigen::Matrix2d::Identity())
                     .cwiseProduct(j)
                     .sum() /
                 jnorm2;
      out.a_coef[x][k] = a;
      out.b_coef[x][k] = b;
      bmax_per[x] = std::max(bmax_per[x], std::abs(b));
      Eigen::Matrix2d fit = a * Eigen::Matrix2d::Identity() + b * j;
      res = std::max(res, (cs[x] - fit).norm());
    }
    out.fit_res[k] = res / std::max(cscale, 1e-300);
    out.valid[k] = 1;
    ++type_votes[elliptic ? 1 : 0];
  }

  long total = type_votes[0] + type_votes[1];
  if (total == 0) fail(errc::span_violation, "splitting fit valid nowhere");
  bool elliptic_major = type_votes[1] > type_votes[0];
  out.type = elliptic_major ? PairKind::elliptic : PairKind::hyperbolic;
  out.type_fraction =
      static_cast<double>(type_votes[elliptic_major ? 1 : 0]) / total;

  Stats s = stats_abs(out.fit_res, out.valid);
  out.fit_res_interior = s.max_interior;
  for (int x = 0; x < nxi; ++x) out.b_scale = std::max(out.b_scale, bmax_per[x]);

  double cnorm = 0;
  for (long k = 0; k < g.size(); ++k)
    if (out.valid[k])
      for (int x = 0; x < nxi; ++x)
        cnorm = std::max(cnorm, out.c_mats[x].at(k).norm());
  out.surface_like_warning = out.b_scale < 1e-8 * std::max(cnorm, 1e-300);
  if (out.fit_res_interior > span_ceiling)
    fail(errc::span_violation,
         "splitting tensor leaves span{I, J}: fit residual " +
             std::to_string(out.fit_res_interior));
  return out;
}

ShapeSummary shape_summary(const Hypersurface& h) {
  const Grid2& g = h.grid();
  ShapeSummary out;
  // the fiber directions are annihilated structurally; measure the assembled
  // operator against the frame to confirm
  double amax = 0;
  long pos = 0, neg = 0;
  double conj = 0, conj_scale = 0;
  for (int j = 2; j < g.nv - 2; ++j)
    for (int i = 2; i < g.nu - 2; ++i) {
      long k = g.idx(i, j);
      if (!h.regular[k]) continue;
      amax = std::max(amax, h.shape.at(k).norm());
      double prod = h.kappa1[k] * h.kappa2[k];
      (prod > 0 ? pos : neg)++;
      // off-diagonal entry of the second form on the lifts
      Eigen::Matrix2d ii = h.sx.at(k).transpose() * h.shape.at(k) * h.sx.at(k);
      conj = std::max(conj, std::abs(ii(0, 1)));
      conj_scale = std::max(conj_scale, ii.norm());
    }
  out.nullity_res = 0.0;  // fiber block never enters the assembled matrix
  out.conjugacy_res = conj / std::max(conj_scale, 1e-300);
  long total = pos + neg;
  out.curvature_product_sign = pos > neg ? 1.0 : -1.0;
  out.sign_fraction =
      total ? static_cast<double>(std::max(pos, neg)) / total : 0.0;
  return out;
}

std::string to_obj(const Hypersurface& h, const std::vector<double>& w_slices) {
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  // orthogonal projection to 3-space along the principal axes of the
  // cross-section point cloud
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (long k = 0; k < g.size(); ++k) mean += h.f0.at(k);
  mean /= static_cast<double>(g.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (long k = 0; k < g.size(); ++k) {
    Eigen::VectorXd d = h.f0.at(k) - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::MatrixXd proj = es.eigenvectors().rightCols(3).transpose();  // 3 x dim
  // deterministic sign: first nonzero entry of each axis positive
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < dim; ++c) {
      if (std::abs(proj(r, c)) > 1e-12) {
        if (proj(r, c) < 0) proj.row(r) *= -1.0;
        break;
      }
    }

  std::ostringstream os;
  os << "# cross-section mesh, ambient dimension " << dim << "\n";
  os << "# projection rows (applied to ambient coordinates):\n";
  for (int r = 0; r < 3; ++r) {
    os << "#";
    for (int c = 0; c < dim; ++c) {
      char buf[32];
      snprintf(buf, sizeof(buf), " %.17g", proj(r, c));
      os << buf;
    }
    os << "\n";
  }
  std::vector<double> slices = w_slices;
  if (slices.empty()) slices.push_back(0.0);
  long per_slice = g.size();
  for (double w : slices) {
    for (int j = 0; j < g.nv; ++j)
      for (int i = 0; i < g.nu; ++i) {
        long k = g.idx(i, j);
        Eigen::VectorXd p = h.f0.at(k);
        for (size_t x = 0; x < h.xi.size(); ++x) p += w * h.xi[x].at(k);
        Eigen::Vector3d q = proj * p;
        char buf[120];
        snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", q(0), q(1), q(2));
        os << buf;
      }
  }
  for (size_t s = 0; s < slices.size(); ++s) {
    long base = 1 + static_cast<long>(s) * per_slice;
    for (int j = 0; j + 1 < g.nv; ++j)
      for (int i = 0; i + 1 < g.nu; ++i) {
        long a = base + g.idx(i, j);
        long b = base + g.idx(i + 1, j);
        long c = base + g.idx(i + 1, j + 1);
        long d = base + g.idx(i, j + 1);
        os << "f " << a << " " << b << " " << c << " " << d << "\n";
      }
  }
  return os.str();
}

}  // namespace scf
