#include "scf/family.hpp"

#include <cmath>

#include "scf/linalg.hpp"

namespace scf {

namespace {

struct Pushforwards {
  VecField fu, fv;
  std::vector<VecField> xi;
};

Pushforwards push_frame(const Hypersurface& h, const MatField& w_state, double t) {
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  Pushforwards p;
  p.fu = VecField(g, dim);
  p.fv = VecField(g, dim);
  p.xi.assign(h.xi.size(), VecField(g, dim));
  par::for_index(g.size(), [&](long k) {
    const auto w = w_state.at(k);
    p.fu.at(k) = h.f0u.at(k) + t * (w * h.f0u.at(k));
    p.fv.at(k) = h.f0v.at(k) + t * (w * h.f0v.at(k));
    for (size_t x = 0; x < h.xi.size(); ++x)
      p.xi[x].at(k) = h.xi[x].at(k) + t * (w * h.xi[x].at(k));
  });
  return p;
}

// Unit normal of the pushforward frame, oriented towards the base normal.
Eigen::VectorXd normal_of(const Hypersurface& h, const Pushforwards& p, long k,
                          bool* ok) {
  const int dim = h.n + 1;
  *ok = true;
  if (h.n == 3) {
    Eigen::Vector4d q = cross4(p.fu.at(k), p.fv.at(k), p.xi[0].at(k));
    double nq = q.norm();
    if (nq < 1e-300) {
      *ok = false;
      return Eigen::VectorXd::Zero(dim);
    }
    Eigen::VectorXd n = q / nq;
    if (n.dot(h.pair.h.at(k)) < 0) n = -n;
    return n;
  }
  Eigen::MatrixXd d(dim, h.n);
  d.col(0) = p.fu.at(k);
  d.col(1) = p.fv.at(k);
  for (size_t x = 0; x < p.xi.size(); ++x) d.col(2 + x) = p.xi[x].at(k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeFullU);
  Eigen::VectorXd n = svd.matrixU().col(dim - 1);
  if (n.dot(h.pair.h.at(k)) < 0) n = -n;
  return n;
}

}  // namespace

double compute_t_max(const Hypersurface& h, const BendingField& bf, double cap) {
  const Grid2& g = h.grid();
  Eigen::VectorXd lo = h.f0.at(0, 0), hi = h.f0.at(0, 0);
  double tnorm = 0;
  for (long k = 0; k < g.size(); ++k) {
    if (!h.regular[k]) continue;
    lo = lo.cwiseMin(h.f0.at(k));
    hi = hi.cwiseMax(h.f0.at(k));
    tnorm = std::max(tnorm, bf.t_field.at(k).norm());
  }
  double diam = (hi - lo).norm();
  if (tnorm <= 0) fail(errc::contract_violation, "bending field vanishes");
  return cap * diam / tnorm;
}

DeformedSurface deform_surface(const FamilyInputs& in, double t) {
  const Hypersurface& h = in.h;
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  const int nxi = h.n - 2;

  DeformedSurface ds;
  ds.t = t;
  ds.n_t = VecField(g, dim);
  ds.valid = Mask(g, 0);
  ds.jbar = MatField(g, 2, 2);

  Pushforwards p = push_frame(h, in.bend.w_state, t);

  double min_margin = 1e300, min_orient = 1e300, worst_metric = 0, drift = 0;
  for (long k = 0; k < g.size(); ++k) {
    bool ok = true;
    Eigen::VectorXd n = normal_of(h, p, k, &ok);
    if (!ok) continue;
    ds.n_t.at(k) = n;
    if (!h.regular[k]) continue;

    Eigen::MatrixXd d(dim, h.n);
    d.col(0) = p.fu.at(k);
    d.col(1) = p.fv.at(k);
    for (int x = 0; x < nxi; ++x) d.col(2 + x) = p.xi[x].at(k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d);
    double margin = svd.singularValues()(h.n - 1) / svd.singularValues()(0);
    if (margin < 1e-6) continue;  // singular at this parameter value
    ds.valid[k] = 1;
    min_margin = std::min(min_margin, margin);
    min_orient = std::min(min_orient, n.dot(h.pair.h.at(k)));
    drift = std::max(drift, (n - h.pair.h.at(k)).norm());

    // first-order isometry: cross terms cancel against the skew state
    const auto w = in.bend.w_state.at(k);
    Eigen::MatrixXd base(dim, h.n);
    base.col(0) = h.f0u.at(k);
    base.col(1) = h.f0v.at(k);
    for (int x = 0; x < nxi; ++x) base.col(2 + x) = h.xi[x].at(k);
    for (int a = 0; a < h.n; ++a)
      for (int b = a; b < h.n; ++b) {
        double lhs = d.col(a).dot(d.col(b));
        double rhs = base.col(a).dot(base.col(b)) +
                     t * t * (w * base.col(a)).dot(w * base.col(b));
        double scale = std::abs(lhs) + std::abs(rhs) + 1e-300;
        worst_metric = std::max(worst_metric, std::abs(lhs - rhs) / scale);
      }
  }
  if (min_margin == 1e300)
    fail(errc::not_immersed, "deformed immersion singular everywhere at t = " +
                                 std::to_string(t));
  ds.immersion_margin = min_margin;
  ds.orient_min = min_orient;
  ds.metric_identity_res = worst_metric;
  ds.gt_drift = drift;

  // fiber-direction derivative of the normal (analytic in the fiber variable
  // for n = 3, finite differences otherwise)
  {
    VecField ntu = diff(ds.n_t, DiffAxis::u);
    VecField ntv = diff(ds.n_t, DiffAxis::v);
    double worst = 0, scale = 0;
    Mask safe = erode(ds.valid, 2);
    for (int j = 2; j < g.nv - 2; ++j)
      for (int i = 2; i < g.nu - 2; ++i) {
        long k = g.idx(i, j);
        if (!safe[k]) continue;
        scale = std::max({scale, ntu.at(k).norm(), ntv.at(k).norm()});
        for (int x = 0; x < nxi; ++x) {
          Eigen::VectorXd dn;
          if (h.n == 3) {
            // d/dw of cross4(fu + w xi_u^t, fv + w xi_v^t, xi^t) at w = 0
            const auto w = in.bend.w_state.at(k);
            Eigen::Vector4d xiu_t = h.xiu[x].at(k) + t * (w * h.xiu[x].at(k));
            Eigen::Vector4d xiv_t = h.xiv[x].at(k) + t * (w * h.xiv[x].at(k));
            Eigen::Vector4d q = cross4(p.fu.at(k), p.fv.at(k), p.xi[0].at(k));
            Eigen::Vector4d dq = cross4(xiu_t, p.fv.at(k), p.xi[0].at(k)) +
                                 cross4(p.fu.at(k), xiv_t, p.xi[0].at(k));
            double nq = q.norm();
            Eigen::Vector4d n = q / nq;
            dn = (dq - n.dot(dq) * n) / nq;
            if (ds.n_t.at(k).dot(q) < 0) dn = -dn;
          } else {
            dn = Eigen::VectorXd::Zero(dim);  // handled by the fd fallback below
          }
          worst = std::max(worst, dn.norm());
        }
      }
    if (h.n > 3) {
      // finite difference along the fiber: rebuild normals at small offsets
      double delta = 1e-4 * std::max(h.w_max, 1.0);
      for (int x = 0; x < nxi; ++x) {
        Pushforwards pp = p, pm = p;
        for (long k = 0; k < g.size(); ++k) {
          const auto w = in.bend.w_state.at(k);
          Eigen::VectorXd xiu_t = h.xiu[x].at(k) + t * (w * h.xiu[x].at(k));
          Eigen::VectorXd xiv_t = h.xiv[x].at(k) + t * (w * h.xiv[x].at(k));
          pp.fu.at(k) += delta * xiu_t;
          pp.fv.at(k) += delta * xiv_t;
          pm.fu.at(k) -= delta * xiu_t;
          pm.fv.at(k) -= delta * xiv_t;
        }
        for (int j = 2; j < g.nv - 2; ++j)
          for (int i = 2; i < g.nu - 2; ++i) {
            long k = g.idx(i, j);
            if (!ds.valid[k]) continue;
            bool ok1 = true, ok2 = true;
            Eigen::VectorXd np = normal_of(h, pp, k, &ok1);
            Eigen::VectorXd nm = normal_of(h, pm, k, &ok2);
            if (!ok1 || !ok2) continue;
            worst = std::max(worst, ((np - nm) / (2 * delta)).norm());
          }
      }
    }
    ds.nullity_res = worst / std::max(scale, 1e-300);
  }

  // normal-decomposition identity against the tangential part of the state
  {
    double worst = 0;
    double scale = 0;
    Mask safe = erode(ds.valid, 0);
    for (int j = 2; j < g.nv - 2; ++j)
      for (int i = 2; i < g.nu - 2; ++i) {
        long k = g.idx(i, j);
        if (!safe[k]) continue;
        Eigen::MatrixXd frame(dim, h.n);
        frame.col(0) = h.f0u.at(k);
        frame.col(1) = h.f0v.at(k);
        for (int x = 0; x < nxi; ++x) frame.col(2 + x) = h.xi[x].at(k);
        Eigen::MatrixXd gram = frame.transpose() * frame;
        Eigen::LDLT<Eigen::MatrixXd> solver(gram);
        const Eigen::VectorXd nvec = h.pair.h.at(k);
        const auto w = in.bend.w_state.at(k);

        double b = ds.n_t.at(k).dot(nvec);
        Eigen::VectorXd fz = ds.n_t.at(k) - b * nvec;
        Eigen::VectorXd zt = solver.solve(frame.transpose() * fz);

        Eigen::MatrixXd l0(h.n, h.n);
        for (int c = 0; c < h.n; ++c) {
          Eigen::VectorXd wc = w * frame.col(c);
          wc -= nvec.dot(wc) * nvec;
          l0.col(c) = solver.solve(frame.transpose() * wc);
        }
        Eigen::VectorXd y = solver.solve(frame.transpose() * (w * nvec));
        Eigen::VectorXd res =
            (Eigen::MatrixXd::Identity(h.n, h.n) - t * l0) * zt - t * b * y;
        worst = std::max(worst, res.norm());
        scale = std::max(scale, zt.norm() + std::abs(t * b) * y.norm());
      }
    // shared denominator with a floor: at t = 0 both sides vanish and the
    // identity is trivially tight
    ds.decomp_res = worst / std::max(scale, 1e-10);
  }

  ds.gt = pair_from_sphere_field(ds.n_t, h.pair.kind);
  for (long k = 0; k < g.size(); ++k)
    if (!ds.valid[k]) ds.gt.immersed[k] = 0;

  // splitting structure of the fibers in the deformed metric
  {
    std::vector<VecField> dxu(nxi), dxv(nxi);
    for (int x = 0; x < nxi; ++x) {
      dxu[x] = diff(p.xi[x], DiffAxis::u);
      dxv[x] = diff(p.xi[x], DiffAxis::v);
    }
    long votes[2] = {0, 0};
    RealField fitres(g);
    Mask safe = erode(ds.valid, 1);
    for (long k = 0; k < g.size(); ++k) {
      if (!safe[k]) continue;
      // orthogonal complement of the deformed fiber span inside the
      // deformed tangent space
      Eigen::MatrixXd xis(dim, nxi);
      for (int x = 0; x < nxi; ++x) xis.col(x) = p.xi[x].at(k);
      Eigen::MatrixXd xig = xis.transpose() * xis;
      Eigen::LDLT<Eigen::MatrixXd> xisolve(xig);
      auto defiber = [&](const Eigen::VectorXd& vec) {
        return (vec - xis * xisolve.solve(xis.transpose() * vec)).eval();
      };
      Eigen::VectorXd yu = defiber(p.fu.at(k));
      Eigen::VectorXd yv = defiber(p.fv.at(k));
      Eigen::Matrix2d gram;
      gram << yu.dot(yu), yu.dot(yv), yu.dot(yv), yv.dot(yv);
      Eigen::LDLT<Eigen::Matrix2d> gsolve(gram);

      Eigen::MatrixXd stack(nxi, 3);
      double cscale = 0;
      std::vector<Eigen::Matrix2d> cs(nxi);
      for (int x = 0; x < nxi; ++x) {
        Eigen::Matrix2d c;
        for (int a = 0; a < 2; ++a) {
          Eigen::VectorXd dxi = a == 0 ? dxu[x].at(k) : dxv[x].at(k);
          Eigen::VectorXd proj = defiber(dxi);
          Eigen::Vector2d rhs(yu.dot(proj), yv.dot(proj));
          Eigen::Vector2d coef = gsolve.solve(rhs);
          c(0, a) = -coef(0);
          c(1, a) = -coef(1);
        }
        cs[x] = c;
        cscale = std::max(cscale, c.norm());
        Eigen::Matrix2d tr = c - 0.5 * c.trace() * Eigen::Matrix2d::Identity();
        stack(x, 0) = tr(0, 0);
        stack(x, 1) = tr(0, 1);
        stack(x, 2) = tr(1, 0);
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(stack, Eigen::ComputeFullV);
      Eigen::Vector3d dir = svd.matrixV().col(0);
      Eigen::Matrix2d t0m;
      t0m << dir(0), dir(1), dir(2), -dir(0);
      double det = t0m.determinant();
      if (std::abs(det) < 1e-28) continue;
      Eigen::Matrix2d j = t0m / std::sqrt(std::abs(det));
      // align with the base structure for sweep continuity
      if (j.cwiseProduct(in.split.j_coord.at(k)).sum() < 0) j = -j;
      ds.jbar.at(k) = j;
      ++votes[det > 0 ? 1 : 0];
      double res = 0;
      for (int x = 0; x < nxi; ++x) {
        double a = 0.5 * cs[x].trace();
        double b = (cs[x] - a * Eigen::Matrix2d::Identity())
                       .cwiseProduct(j)
                       .sum() /
                   j.cwiseProduct(j).sum();
        res = std::max(res,
                       (cs[x] - a * Eigen::Matrix2d::Identity() - b * j).norm());
      }
      fitres[k] = res / std::max(cscale, 1e-300);
    }
    long total = votes[0] + votes[1];
    if (total == 0) fail(errc::span_violation, "deformed splitting fit empty");
    bool elliptic = votes[1] > votes[0];
    ds.type = elliptic ? PairKind::elliptic : PairKind::hyperbolic;
    ds.type_fraction = static_cast<double>(votes[elliptic ? 1 : 0]) / total;
    ds.j_fit_res = stats_abs(fitres, ds.valid).max_interior;
  }
  return ds;
}

FrameResult unit_frames(const FamilyInputs& in, const DeformedSurface& ds) {
  const Hypersurface& h = in.h;
  const Grid2& g = h.grid();
  FrameResult fr;
  fr.U = VecField(g, 2);
  fr.V = VecField(g, 2);
  double unit_dev = 0, disc_min = 1e300;

  auto gt_norm2 = [&](long k, const Eigen::Vector2d& x) {
    Eigen::Matrix2d m;
    m << ds.gt.E[k], ds.gt.F[k], ds.gt.F[k], ds.gt.G[k];
    return x.dot(m * x);
  };
  auto gt_pair = [&](long k, const Eigen::Vector2d& x, const Eigen::Vector2d& y) {
    Eigen::Matrix2d m;
    m << ds.gt.E[k], ds.gt.F[k], ds.gt.F[k], ds.gt.G[k];
    return x.dot(m * y);
  };

  if (ds.type == PairKind::hyperbolic) {
    for (long k = 0; k < g.size(); ++k) {
      if (!ds.valid[k]) continue;
      // base eigenframe of the undeformed structure, unit in the base metric
      Eigen::Matrix2d j0 = in.split.j_coord.at(k);
      Eigen::EigenSolver<Eigen::Matrix2d> es(j0);
      int plus = std::abs(es.eigenvalues()(0).real() - 1.0) < 0.5 ? 0 : 1;
      Eigen::Vector2d u0 = es.eigenvectors().col(plus).real();
      Eigen::Vector2d v0 = es.eigenvectors().col(1 - plus).real();
      Eigen::Matrix2d g0;
      g0 << h.pair.E[k], h.pair.F[k], h.pair.F[k], h.pair.G[k];
      u0 /= std::sqrt(u0.dot(g0 * u0));
      v0 /= std::sqrt(v0.dot(g0 * v0));

      Eigen::Matrix2d s0;
      s0 << u0(0), v0(0), u0(1), v0(1);
      Eigen::Matrix2d juv = s0.inverse() * ds.jbar.at(k) * s0;
      double a = juv(0, 0), c = juv(0, 1), b = juv(1, 0), d = juv(1, 1);
      if (std::abs(1.0 - d) < 1e-8 || std::abs(1.0 + a) < 1e-8)
        fail(errc::eigen_degeneracy, "deformed eigenframe update degenerate");
      double mu = b / (1.0 - d);
      double nu = -c / (1.0 + a);
      Eigen::Vector2d ut = u0 + mu * v0;
      Eigen::Vector2d vt = v0 + nu * u0;
      ut /= std::sqrt(gt_norm2(k, ut));
      vt /= std::sqrt(gt_norm2(k, vt));
      fr.U.at(k) = ut;
      fr.V.at(k) = vt;
      // eigen residuals of the updated frame
      unit_dev = std::max(unit_dev, (ds.jbar.at(k) * ut - ut).norm() /
                                        std::max(ut.norm(), 1e-300));
      unit_dev = std::max(unit_dev, (ds.jbar.at(k) * vt + vt).norm() /
                                        std::max(vt.norm(), 1e-300));
    }
    fr.disc_min = 0;
  } else {
    SecondFF ff = second_fundamental_form(ds.gt);
    fr.minimality = ff.mean_floor_rel;
    if (fr.minimality < in.thr.minimality_floor)
      fail(errc::minimal_surface_guard,
           "deformed surface is minimal within tolerance: " +
               std::to_string(fr.minimality));
    for (long k = 0; k < g.size(); ++k) {
      if (!ds.valid[k]) continue;
      Eigen::Vector2d u(1.0, 0.0);
      u /= std::sqrt(gt_norm2(k, u));
      Eigen::Vector2d v = ds.jbar.at(k) * u;
      double A = gt_norm2(k, u) - gt_norm2(k, v);
      double B = gt_pair(k, u, v);
      double disc = 4.0 * B * B + A * A;
      double mscale = gt_norm2(k, u) + gt_norm2(k, v);
      disc_min = std::min(disc_min, disc / (mscale * mscale));
      double d, e;
      if (std::abs(A) < 1e-14 * mscale) {
        d = 1.0;
        e = 0.0;
      } else {
        double root = (-2.0 * B - std::copysign(std::sqrt(disc), B)) / A;
        if (std::abs(root) < 1.0) root = -1.0 / root;  // companion root
        double x = root;
        double S = gt_norm2(k, u) + gt_norm2(k, v);
        e = std::sqrt(2.0 / ((1.0 + x * x) * S));
        d = x * e;
      }
      Eigen::Vector2d ut = d * u + e * v;
      Eigen::Vector2d vt = ds.jbar.at(k) * ut;
      if (d < 0) {
        ut = -ut;
        vt = -vt;
      }
      fr.U.at(k) = ut;
      fr.V.at(k) = vt;
      unit_dev = std::max(unit_dev, std::abs(gt_norm2(k, ut) - 1.0));
      unit_dev = std::max(unit_dev, std::abs(gt_norm2(k, vt) - 1.0));
    }
    fr.disc_min = disc_min == 1e300 ? 0 : disc_min;
  }
  fr.unit_dev = unit_dev;
  return fr;
}

namespace {

// second-form of a deformed immersion on the coordinate chart, via the
// stencil derivative of its normal field
MatField second_form_t(const Hypersurface& h, const BendingField& bf, double t,
                       const DeformedSurface& ds) {
  const Grid2& g = h.grid();
  MatField out(g, 2, 2);
  VecField nu = diff(ds.n_t, DiffAxis::u);
  VecField nv = diff(ds.n_t, DiffAxis::v);
  Pushforwards p = push_frame(h, bf.w_state, t);
  par::for_index(g.size(), [&](long k) {
    Eigen::Matrix2d m;
    m(0, 0) = -nu.at(k).dot(p.fu.at(k));
    m(0, 1) = -0.5 * (nu.at(k).dot(p.fv.at(k)) + nv.at(k).dot(p.fu.at(k)));
    m(1, 0) = m(0, 1);
    m(1, 1) = -nv.at(k).dot(p.fv.at(k));
    out.at(k) = m;
  });
  return out;
}

void append_failure(std::string* failures, const std::string& clause) {
  if (!failures->empty()) *failures += ",";
  *failures += clause;
}

}  // namespace

DeformationCertificate certify(const FamilyInputs& in,
                               const std::vector<double>& fractions) {
  const Hypersurface& h = in.h;
  const Grid2& g = h.grid();
  const Thresholds& thr = in.thr;
  const double hh = std::max(g.hu, g.hv);
  const double ceiling = thr.ceiling(hh);

  DeformationCertificate cert;
  cert.thresholds = thr;
  cert.grid_n = g.nu;
  cert.b_scale = in.bend.b_scale;
  cert.t_max = compute_t_max(h, in.bend, thr.t_fraction_cap);

  // hypothesis gate at t = 0: the seed surface must be a special pair that is
  // not of the first species (bendable, outside the continuous class)
  {
    SpeciesReport base = classify_pair(h.pair, thr);
    if (base.first_species_res < thr.species_floor) {
      cert.pass = false;
      cert.verdict =
          "hypothesis rejected: continuous-class (first species) input";
      return cert;
    }
    if (base.special_pair_res > ceiling) {
      cert.pass = false;
      cert.verdict = "hypothesis rejected: seed surface is not a special pair";
      return cert;
    }
  }

  std::vector<double> ts = {0.0};
  for (double f : fractions) ts.push_back(f * cert.t_max);

  bool all_pass = true;
  const char* base_type = kind_name(in.split.type);
  for (double t : ts) {
    DeformRow row;
    row.t = t;
    DeformedSurface dp = deform_surface(in, t);
    row.immersion_margin = dp.immersion_margin;
    row.metric_identity_res = dp.metric_identity_res;
    row.nullity_res = dp.nullity_res;
    row.decomp_res = dp.decomp_res;
    row.orient_min = dp.orient_min;
    row.j_type = kind_name(dp.type);
    row.j_type_fraction = dp.type_fraction;

    FrameResult fr = unit_frames(in, dp);
    row.frame_unit_dev = fr.unit_dev;
    row.disc_min = fr.disc_min;
    row.minimality = fr.minimality;

    FrameData fd = frame_lambdas(dp.gt, fr.U, fr.V, dp.type);
    FrameSpecies fs = frame_species(dp.gt, fd, thr);
    row.special_res = fs.special_pair_res;
    row.first_species_res = fs.first_species_res;
    row.tau = fs.tau;
    row.rho = fs.rho;
    row.second_species = fs.second_species;

    if (t != 0.0) {
      DeformedSurface dm = deform_surface(in, -t);
      // shared first fundamental form of the pair
      {
        Pushforwards pp = push_frame(h, in.bend.w_state, t);
        Pushforwards pm = push_frame(h, in.bend.w_state, -t);
        double worst = 0;
        for (int j = 2; j < g.nv - 2; ++j)
          for (int i = 2; i < g.nu - 2; ++i) {
            long k = g.idx(i, j);
            if (!dp.valid[k] || !dm.valid[k]) continue;
            Eigen::MatrixXd a(h.n + 1, h.n), b(h.n + 1, h.n);
            a.col(0) = pp.fu.at(k);
            a.col(1) = pp.fv.at(k);
            b.col(0) = pm.fu.at(k);
            b.col(1) = pm.fv.at(k);
            for (size_t x = 0; x < pp.xi.size(); ++x) {
              a.col(2 + x) = pp.xi[x].at(k);
              b.col(2 + x) = pm.xi[x].at(k);
            }
            Eigen::MatrixXd ga = a.transpose() * a;
            Eigen::MatrixXd gb = b.transpose() * b;
            worst = std::max(worst, (ga - gb).norm() / std::max(ga.norm(), 1e-300));
          }
        row.metric_pair_res = worst;
      }
      // congruence separation through the second forms at matched chart pairs
      {
        MatField iip = second_form_t(h, in.bend, t, dp);
        MatField iim = second_form_t(h, in.bend, -t, dm);
        double cmin = 1e300;
        double bmax = 0;
        for (long k = 0; k < g.size(); ++k)
          bmax = std::max(bmax, in.bend.b2.at(k).norm());
        Mask safe = erode(dp.valid, 2);
        for (int j = 2; j < g.nv - 2; ++j)
          for (int i = 2; i < g.nu - 2; ++i) {
            long k = g.idx(i, j);
            if (!safe[k] || !dm.valid[k]) continue;
            Eigen::Matrix2d bform = h.sx.at(k).transpose() *
                                    in.bend.b2.at(k) * h.sx.at(k);
            double bn = bform.norm();
            if (bn < 1e-8 * bmax) continue;
            double sep = std::min((iip.at(k) - iim.at(k)).norm(),
                                  (iip.at(k) + iim.at(k)).norm());
            cmin = std::min(cmin, sep / (std::abs(t) * bn));
          }
        row.congruence_c = cmin == 1e300 ? 0 : cmin;
      }
      if (std::string(kind_name(dm.type)) != row.j_type)
        append_failure(&row.failures, "type-flip");
    }

    // clause evaluation
    if (row.immersion_margin < 1e-6) append_failure(&row.failures, "immersion");
    if (row.metric_identity_res > thr.metric_pair_tol)
      append_failure(&row.failures, "metric-identity");
    if (row.nullity_res > ceiling) append_failure(&row.failures, "nullity");
    if (row.decomp_res > ceiling) append_failure(&row.failures, "decomposition");
    if (row.orient_min <= 0) append_failure(&row.failures, "orientation");
    if (std::string(row.j_type) != base_type || row.j_type_fraction < 0.99)
      append_failure(&row.failures, "type");
    if (t == 0.0) {
      if (row.special_res > ceiling)
        append_failure(&row.failures, "special-pair-at-zero");
    } else {
      if (row.special_res < thr.species_floor)
        append_failure(&row.failures, "bendability-lost");
      if (row.first_species_res < thr.species_floor)
        append_failure(&row.failures, "first-species");
      const double sys_ceiling = thr.sys_ceiling(hh);
      if (dp.type == PairKind::hyperbolic) {
        bool ok = row.tau.tau_min > 0 &&
                  row.tau.margin_fraction >= thr.margin_coverage &&
                  row.tau.guarded_fraction >= thr.coverage &&
                  row.tau.sys_res_u <= sys_ceiling &&
                  row.tau.sys_res_v <= sys_ceiling;
        if (!ok) append_failure(&row.failures, "tau");
      } else {
        bool ok = row.rho.margin_fraction >= thr.margin_coverage &&
                  row.rho.guarded_fraction >= thr.coverage &&
                  row.rho.max_mod_dev <= 1e-10 && row.rho.sys_res <= sys_ceiling;
        if (!ok) append_failure(&row.failures, "rho");
        if (row.minimality < thr.minimality_floor)
          append_failure(&row.failures, "minimality");
      }
      if (row.metric_pair_res > thr.metric_pair_tol)
        append_failure(&row.failures, "metric-pair");
      if (row.congruence_c < thr.congruence_c)
        append_failure(&row.failures, "congruence");
      if (!row.second_species) append_failure(&row.failures, "species");
    }
    if (!row.failures.empty() && t != 0.0) all_pass = false;
    if (t == 0.0 && !row.failures.empty()) all_pass = false;
    cert.rows.push_back(std::move(row));
  }

  cert.pass = all_pass;
  cert.verdict = all_pass ? "discrete-class pair certified"
                          : "certificate failed";
  return cert;
}

}  // namespace scf
