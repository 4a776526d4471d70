#include "scf/surfgeo.hpp"

#include <cmath>

#include "scf/linalg.hpp"

namespace scf {

namespace {

struct MaskedMax {
  double all = 0;
  double interior = 0;

  void add(const Grid2& g, int i, int j, double value) {
    all = std::max(all, value);
    if (g.interior(i, j)) interior = std::max(interior, value);
  }
};

}  // namespace

ChristoffelReal christoffel_from_metric(const RealField& E, const RealField& F,
                                        const RealField& G, const RealField& Eu,
                                        const RealField& Ev, const RealField& Fu,
                                        const RealField& Fv, const RealField& Gu,
                                        const RealField& Gv, const Mask& immersed) {
  const Grid2& g = E.grid();
  ChristoffelReal c;
  c.gamma1 = RealField(g);
  c.gamma2 = RealField(g);
  c.F = F;
  c.g1_11 = RealField(g);
  c.g2_11 = RealField(g);
  c.g1_22 = RealField(g);
  c.g2_22 = RealField(g);
  c.guarded = immersed;
  long bad = 0;
  for (long k = 0; k < g.size(); ++k) {
    double det = E[k] * G[k] - F[k] * F[k];
    if (!immersed[k] || !(det > 0)) {
      c.guarded[k] = 0;
      ++bad;
      continue;
    }
    double w = 0.5 / det;
    c.gamma1[k] = w * (G[k] * Ev[k] - F[k] * Gu[k]);
    c.gamma2[k] = w * (E[k] * Gu[k] - F[k] * Ev[k]);
    c.g1_11[k] = w * (G[k] * Eu[k] - 2.0 * F[k] * Fu[k] + F[k] * Ev[k]);
    c.g2_11[k] = w * (2.0 * E[k] * Fu[k] - E[k] * Ev[k] - F[k] * Eu[k]);
    c.g1_22[k] = w * (2.0 * G[k] * Fv[k] - G[k] * Gu[k] - F[k] * Gv[k]);
    c.g2_22[k] = w * (E[k] * Gv[k] - 2.0 * F[k] * Fv[k] + F[k] * Gu[k]);
  }
  if (bad == g.size()) fail(errc::degenerate_metric, "metric degenerate everywhere");
  return c;
}

ChristoffelReal christoffel_real(const GaussPair& p) {
  return christoffel_from_metric(p.E, p.F, p.G, p.Eu, p.Ev, p.Fu, p.Fv, p.Gu,
                                 p.Gv, p.immersed);
}

ChristoffelComplex christoffel_complex(const GaussPair& p) {
  ChristoffelReal r = christoffel_real(p);
  const Grid2& g = p.E.grid();
  ChristoffelComplex c;
  c.gamma = ComplexField(g);
  c.fz = RealField(g);
  c.guarded = r.guarded;
  for (long k = 0; k < g.size(); ++k) {
    c.gamma[k] = 0.25 * cplx(r.g1_11[k] + r.g1_22[k], r.g2_11[k] + r.g2_22[k]);
    c.fz[k] = 0.25 * (p.E[k] + p.G[k]);
  }
  return c;
}

NormalizedResidual conjugate_residual(const GaussPair& p, const ChristoffelReal& c) {
  const Grid2& g = p.h.grid();
  VecField hu = diff(p.h, DiffAxis::u);
  VecField hv = diff(p.h, DiffAxis::v);
  VecField huv = diff(p.h, DiffAxis::uv);
  MaskedMax res, scale;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (!c.guarded[k]) continue;
      Eigen::VectorXd r = huv.at(k) - c.gamma1[k] * hu.at(k) -
                          c.gamma2[k] * hv.at(k) + c.F[k] * p.h.at(k);
      res.add(g, i, j, r.norm());
      scale.add(g, i, j, huv.at(k).norm());
    }
  NormalizedResidual out;
  out.scale = std::max(scale.all, 1e-300);
  out.all = res.all / out.scale;
  out.interior = res.interior / out.scale;
  return out;
}

NormalizedResidual conjugate_residual(const GaussPair& p,
                                      const ChristoffelComplex& c) {
  const Grid2& g = p.h.grid();
  VecField hu = diff(p.h, DiffAxis::u);
  VecField hv = diff(p.h, DiffAxis::v);
  VecField huu = diff(p.h, DiffAxis::uu);
  VecField hvv = diff(p.h, DiffAxis::vv);
  MaskedMax res, scale;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (!c.guarded[k]) continue;
      // gamma h_z + conj(gamma) h_zbar collapses to Re(gamma) h_u + Im(gamma) h_v
      Eigen::VectorXd hzz = 0.25 * (huu.at(k) + hvv.at(k));
      Eigen::VectorXd r = hzz - c.gamma[k].real() * hu.at(k) -
                          c.gamma[k].imag() * hv.at(k) + c.fz[k] * p.h.at(k);
      res.add(g, i, j, r.norm());
      scale.add(g, i, j, hzz.norm());
    }
  NormalizedResidual out;
  out.scale = std::max(scale.all, 1e-300);
  out.all = res.all / out.scale;
  out.interior = res.interior / out.scale;
  return out;
}

namespace {

NormalizedResidual scalar_equation_residual(const Grid2& g, const Mask& guarded,
                                            const RealField& second,
                                            const RealField& fu,
                                            const RealField& fv,
                                            const RealField& c1,
                                            const RealField& c2,
                                            const RealField& pairing,
                                            const RealField& value) {
  MaskedMax res, scale;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (!guarded[k]) continue;
      double t1 = second[k];
      double t2 = c1[k] * fu[k];
      double t3 = c2[k] * fv[k];
      double t4 = pairing[k] * value[k];
      res.add(g, i, j, std::abs(t1 - t2 - t3 + t4));
      scale.add(g, i, j, std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4));
    }
  NormalizedResidual out;
  out.scale = std::max(scale.all, 1e-300);
  out.all = res.all / out.scale;
  out.interior = res.interior / out.scale;
  return out;
}

}  // namespace

NormalizedResidual gamma_residual(const GaussPair& p, const ChristoffelReal& c) {
  const Grid2& g = p.gamma.grid();
  RealField gu = diff(p.gamma, DiffAxis::u);
  RealField gv = diff(p.gamma, DiffAxis::v);
  RealField guv = diff(p.gamma, DiffAxis::uv);
  return scalar_equation_residual(g, c.guarded, guv, gu, gv, c.gamma1, c.gamma2,
                                  c.F, p.gamma);
}

NormalizedResidual gamma_residual(const GaussPair& p, const ChristoffelComplex& c) {
  const Grid2& g = p.gamma.grid();
  RealField gu = diff(p.gamma, DiffAxis::u);
  RealField gv = diff(p.gamma, DiffAxis::v);
  RealField guu = diff(p.gamma, DiffAxis::uu);
  RealField gvv = diff(p.gamma, DiffAxis::vv);
  RealField quarter_lap(g);
  RealField re(g), im(g);
  for (long k = 0; k < g.size(); ++k) {
    quarter_lap[k] = 0.25 * (guu[k] + gvv[k]);
    re[k] = c.gamma[k].real();
    im[k] = c.gamma[k].imag();
  }
  return scalar_equation_residual(g, c.guarded, quarter_lap, gu, gv, re, im, c.fz,
                                  p.gamma);
}

SecondFF second_fundamental_form(const GaussPair& p) {
  const Grid2& g = p.h.grid();
  const int dim = p.n + 1;
  SecondFF out;
  out.alpha_uu = VecField(g, dim);
  out.alpha_uv = VecField(g, dim);
  out.alpha_vv = VecField(g, dim);
  out.mean_norm = RealField(g);

  par::for_index(g.size(), [&](long k) {
    if (!p.immersed[k]) return;
    Eigen::MatrixXd tang(dim, 3);
    tang.col(0) = p.h.at(k);
    tang.col(1) = p.hu.at(k);
    tang.col(2) = p.hv.at(k);
    Eigen::MatrixXd nor = complement_basis(tang);  // dim x (n-2)
    auto project = [&](const Eigen::VectorXd& w) {
      return (nor * (nor.transpose() * w)).eval();
    };
    out.alpha_uu.at(k) = project(p.huu.at(k));
    out.alpha_uv.at(k) = project(p.huv.at(k));
    out.alpha_vv.at(k) = project(p.hvv.at(k));
    double det = p.E[k] * p.G[k] - p.F[k] * p.F[k];
    Eigen::VectorXd tr = (p.G[k] * out.alpha_uu.at(k) -
                          2.0 * p.F[k] * out.alpha_uv.at(k) +
                          p.E[k] * out.alpha_vv.at(k)) /
                         det;
    out.mean_norm[k] = tr.norm();
  });

  // The mean-curvature floor is scale free: the trace carries an inverse
  // metric, so compare against alpha over the metric scale.
  double alpha_scale = 0, min_mean = 1e300, metric_scale = 0;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (!p.immersed[k]) continue;
      double a = std::max({out.alpha_uu.at(k).norm(), out.alpha_uv.at(k).norm(),
                           out.alpha_vv.at(k).norm()});
      alpha_scale = std::max(alpha_scale, a);
      metric_scale = std::max(metric_scale, std::abs(p.E[k]) + std::abs(p.G[k]));
      if (g.interior(i, j)) min_mean = std::min(min_mean, out.mean_norm[k]);
    }
  out.alpha_scale = alpha_scale;
  out.mean_floor_rel = min_mean / std::max(alpha_scale / metric_scale, 1e-300);
  return out;
}

GaussPair pair_from_sphere_field(const VecField& h, PairKind kind,
                                 double immersion_tol) {
  const Grid2& g = h.grid();
  GaussPair p;
  p.kind = kind;
  p.n = h.dim() - 1;
  p.h = h;
  p.gamma = RealField(g);
  p.gamma_u = RealField(g);
  p.gamma_v = RealField(g);
  p.gamma_uu = RealField(g);
  p.gamma_uv = RealField(g);
  p.gamma_vv = RealField(g);
  p.hu = diff(h, DiffAxis::u);
  p.hv = diff(h, DiffAxis::v);
  p.huu = diff(h, DiffAxis::uu);
  p.huv = diff(h, DiffAxis::uv);
  p.hvv = diff(h, DiffAxis::vv);
  p.exact_derivatives = false;

  p.E = RealField(g);
  p.F = RealField(g);
  p.G = RealField(g);
  p.Eu = RealField(g);
  p.Ev = RealField(g);
  p.Fu = RealField(g);
  p.Fv = RealField(g);
  p.Gu = RealField(g);
  p.Gv = RealField(g);
  par::for_index(g.size(), [&](long k) {
    p.E[k] = p.hu.at(k).dot(p.hu.at(k));
    p.F[k] = p.hu.at(k).dot(p.hv.at(k));
    p.G[k] = p.hv.at(k).dot(p.hv.at(k));
    p.Eu[k] = 2.0 * p.huu.at(k).dot(p.hu.at(k));
    p.Ev[k] = 2.0 * p.huv.at(k).dot(p.hu.at(k));
    p.Fu[k] = p.huu.at(k).dot(p.hv.at(k)) + p.hu.at(k).dot(p.huv.at(k));
    p.Fv[k] = p.huv.at(k).dot(p.hv.at(k)) + p.hu.at(k).dot(p.hvv.at(k));
    p.Gu[k] = 2.0 * p.huv.at(k).dot(p.hv.at(k));
    p.Gv[k] = 2.0 * p.hvv.at(k).dot(p.hv.at(k));
  });

  p.immersed = Mask(g, 1);
  long ok = 0;
  double min_rel = 1e300, max_dev = 0;
  for (long k = 0; k < g.size(); ++k) {
    double det = p.E[k] * p.G[k] - p.F[k] * p.F[k];
    double tr = p.E[k] + p.G[k];
    double rel = det / std::max(tr * tr, 1e-300);
    min_rel = std::min(min_rel, rel);
    bool good = det > immersion_tol * tr * tr;
    p.immersed[k] = good ? 1 : 0;
    if (good) ++ok;
    max_dev = std::max(max_dev, std::abs(h.at(k).norm() - 1.0));
  }
  p.min_det_rel = min_rel;
  p.max_norm_dev = max_dev;
  p.immersed_fraction = static_cast<double>(ok) / g.size();
  return p;
}

}  // namespace scf
