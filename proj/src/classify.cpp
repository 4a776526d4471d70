#include "scf/classify.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace scf {

namespace {

struct ResAccum {
  double res_all = 0, res_int = 0, scale = 0;

  void add(const Grid2& g, int i, int j, double r, double s) {
    res_all = std::max(res_all, r);
    if (g.interior(i, j)) res_int = std::max(res_int, r);
    scale = std::max(scale, s);
  }

  double norm_interior() const { return res_int / std::max(scale, 1e-300); }
  double norm_all() const { return res_all / std::max(scale, 1e-300); }
};

RealField re(const ComplexField& f) {
  RealField out(f.grid());
  for (long k = 0; k < f.size(); ++k) out[k] = f[k].real();
  return out;
}

RealField im(const ComplexField& f) {
  RealField out(f.grid());
  for (long k = 0; k < f.size(); ++k) out[k] = f[k].imag();
  return out;
}

}  // namespace

RealField directional(const VecField& X, const RealField& s) {
  RealField su = diff(s, DiffAxis::u);
  RealField sv = diff(s, DiffAxis::v);
  RealField out(s.grid());
  for (long k = 0; k < s.size(); ++k)
    out[k] = X.at(k)(0) * su[k] + X.at(k)(1) * sv[k];
  return out;
}

ComplexField directional(const VecField& X, const ComplexField& s) {
  ComplexField su = diff(s, DiffAxis::u);
  ComplexField sv = diff(s, DiffAxis::v);
  ComplexField out(s.grid());
  for (long k = 0; k < s.size(); ++k)
    out[k] = X.at(k)(0) * su[k] + X.at(k)(1) * sv[k];
  return out;
}

double special_pair_residual(const ChristoffelReal& c) {
  const Grid2& g = c.gamma1.grid();
  RealField g1u = diff(c.gamma1, DiffAxis::u);
  RealField g2v = diff(c.gamma2, DiffAxis::v);
  Mask safe = erode(c.guarded, 2);
  ResAccum acc;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (!safe[k]) continue;
      acc.add(g, i, j, std::abs(g1u[k] - g2v[k]), std::abs(g1u[k]) + std::abs(g2v[k]));
    }
  return acc.norm_interior();
}

double special_pair_residual(const ChristoffelComplex& c) {
  const Grid2& g = c.gamma.grid();
  ComplexField gz = complex_diff(c.gamma, CDiffAxis::z);
  Mask safe = erode(c.guarded, 2);
  ResAccum acc;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (!safe[k]) continue;
      acc.add(g, i, j, std::abs(gz[k].imag()), std::abs(gz[k]));
    }
  return acc.norm_interior();
}

double first_species_residual(const ChristoffelReal& c) {
  const Grid2& g = c.gamma1.grid();
  RealField g1u = diff(c.gamma1, DiffAxis::u);
  RealField g2v = diff(c.gamma2, DiffAxis::v);
  Mask safe = erode(c.guarded, 2);
  ResAccum acc;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (!safe[k]) continue;
      double cross = 2.0 * c.gamma1[k] * c.gamma2[k];
      double r = std::abs(g1u[k] - cross) + std::abs(g2v[k] - cross);
      double s = std::abs(g1u[k]) + std::abs(g2v[k]) + 2.0 * std::abs(cross);
      acc.add(g, i, j, r, s);
    }
  return acc.norm_interior();
}

double first_species_residual(const ChristoffelComplex& c) {
  const Grid2& g = c.gamma.grid();
  ComplexField gz = complex_diff(c.gamma, CDiffAxis::z);
  Mask safe = erode(c.guarded, 2);
  ResAccum acc;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (!safe[k]) continue;
      cplx cross = 2.0 * c.gamma[k] * std::conj(c.gamma[k]);
      acc.add(g, i, j, std::abs(gz[k] - cross), std::abs(gz[k]) + std::abs(cross));
    }
  return acc.norm_interior();
}

namespace {

/// Shared tail of the hyperbolic tau analysis: guard the denominator, form
/// tau, and measure the residuals of its first-order system. num/den are the
/// integrability-defect fields; c2/c1 are the coefficients of the system
/// (coordinate route: the mixed Christoffels; frame route: the lambdas), and
/// du1/du2 produce the two directional derivatives of tau.
TauField tau_from_defect(const Grid2& g, const Mask& base, const RealField& num,
                         const RealField& den, const RealField& c_u,
                         const RealField& c_v,
                         const std::function<RealField(const RealField&)>& d_first,
                         const std::function<RealField(const RealField&)>& d_second,
                         const Thresholds& thr) {
  TauField out;
  out.tau = RealField(g);
  out.theta = RealField(g);
  out.guarded = Mask(g, 0);

  double scale = 0;
  for (long k = 0; k < g.size(); ++k)
    if (base[k]) scale = std::max(scale, std::abs(num[k]) + std::abs(den[k]));
  double guard = std::max(thr.guard_rel * scale, 1e-300);

  long kept = 0, total = 0;
  for (long k = 0; k < g.size(); ++k) {
    if (!base[k]) continue;
    ++total;
    if (std::abs(den[k]) >= guard) {
      out.guarded[k] = 1;
      out.tau[k] = num[k] / den[k];
      out.theta[k] = out.tau[k] > 0 ? std::sqrt(out.tau[k]) : 0.0;
      ++kept;
    }
  }
  out.guarded_fraction = total > 0 ? static_cast<double>(kept) / total : 0.0;
  if (kept == 0)
    fail(errc::denominator_degenerate, "tau denominator below guard everywhere");

  RealField tu = d_first(out.tau);
  RealField tv = d_second(out.tau);
  Mask safe = erode(out.guarded, 2);
  ResAccum acc_u, acc_v;
  double tmin = 1e300, tmax = -1e300, one_margin = 1e300;
  long above = 0, counted = 0;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (out.guarded[k] && g.interior(i, j)) {
        tmin = std::min(tmin, out.tau[k]);
        tmax = std::max(tmax, out.tau[k]);
        one_margin = std::min(one_margin, std::abs(out.tau[k] - 1.0));
        ++counted;
        if (std::abs(out.tau[k] - 1.0) >= thr.margin) ++above;
      }
      if (!safe[k]) continue;
      double t = out.tau[k];
      double ru = tu[k] - 2.0 * c_u[k] * t * (1.0 - t);
      double rv = tv[k] - 2.0 * c_v[k] * (1.0 - t);
      double su = std::abs(tu[k]) + std::abs(2.0 * c_u[k] * t * (1.0 - t));
      double sv = std::abs(tv[k]) + std::abs(2.0 * c_v[k] * (1.0 - t));
      // a flat tau field has zero system scale; fall back to the coefficient
      // scale so the residual stays meaningful
      su = std::max(su, std::abs(c_u[k]));
      sv = std::max(sv, std::abs(c_v[k]));
      acc_u.add(g, i, j, std::abs(ru), su);
      acc_v.add(g, i, j, std::abs(rv), sv);
    }
  out.sys_res_u = acc_u.norm_interior();
  out.sys_res_v = acc_v.norm_interior();
  out.tau_min = counted ? tmin : 0;
  out.tau_max = counted ? tmax : 0;
  out.one_margin = counted ? one_margin : 0;
  out.margin_fraction = counted ? static_cast<double>(above) / counted : 0;
  return out;
}

}  // namespace

TauField tau_coordinate(const ChristoffelReal& c, const Thresholds& thr) {
  const Grid2& g = c.gamma1.grid();
  RealField g1u = diff(c.gamma1, DiffAxis::u);
  RealField g2v = diff(c.gamma2, DiffAxis::v);
  RealField num(g), den(g);
  for (long k = 0; k < g.size(); ++k) {
    double cross = 2.0 * c.gamma1[k] * c.gamma2[k];
    num[k] = g1u[k] - cross;
    den[k] = g2v[k] - cross;
  }
  Mask base = erode(c.guarded, 2);
  auto du = [](const RealField& f) { return diff(f, DiffAxis::u); };
  auto dv = [](const RealField& f) { return diff(f, DiffAxis::v); };
  return tau_from_defect(g, base, num, den, c.gamma2, c.gamma1, du, dv, thr);
}

namespace {

/// Shared tail of the elliptic rho analysis: rho = w/|w| (the unit-modulus
/// solution of the reality constraint; for the frame route w is the
/// integrability defect and rho^2 = w / conj(w) since rho = w/|w| squares to
/// it). The sign is immaterial: both signs solve the evolution equation with
/// equal residual.
RhoField rho_from_defect(const Grid2& g, const Mask& base, const ComplexField& w,
                         const ComplexField& coeff,
                         const std::function<ComplexField(const ComplexField&)>& d_zbar,
                         const Thresholds& thr, bool conjugate_w) {
  RhoField out;
  out.rho = ComplexField(g);
  out.theta = RealField(g);
  out.guarded = Mask(g, 0);

  double scale = 0;
  for (long k = 0; k < g.size(); ++k)
    if (base[k]) scale = std::max(scale, std::abs(w[k]));
  double guard = std::max(thr.guard_rel * scale, 1e-300);

  long kept = 0, total = 0;
  for (long k = 0; k < g.size(); ++k) {
    if (!base[k]) continue;
    ++total;
    if (std::abs(w[k]) >= guard) {
      out.guarded[k] = 1;
      cplx r = conjugate_w ? std::conj(w[k]) / std::abs(w[k]) : w[k] / std::abs(w[k]);
      out.rho[k] = r;
      out.theta[k] = std::arg(r);
      ++kept;
    } else {
      out.rho[k] = 1.0;
    }
  }
  out.guarded_fraction = total > 0 ? static_cast<double>(kept) / total : 0.0;
  if (kept == 0)
    fail(errc::denominator_degenerate, "rho defect below guard everywhere");

  ComplexField rho_zbar = d_zbar(out.rho);
  Mask safe = erode(out.guarded, 2);
  ResAccum acc;
  double min_im = 1e300, mod_dev = 0;
  long above = 0, counted = 0;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      long k = g.idx(i, j);
      if (out.guarded[k] && g.interior(i, j)) {
        min_im = std::min(min_im, std::abs(out.rho[k].imag()));
        mod_dev = std::max(mod_dev, std::abs(std::abs(out.rho[k]) - 1.0));
        ++counted;
        if (std::abs(out.rho[k].imag()) >= thr.margin) ++above;
      }
      if (!safe[k]) continue;
      cplx r = rho_zbar[k] + coeff[k] * (out.rho[k] - std::conj(out.rho[k]));
      double s = std::abs(rho_zbar[k]) +
                 std::abs(coeff[k] * (out.rho[k] - std::conj(out.rho[k])));
      s = std::max(s, std::abs(coeff[k]));
      acc.add(g, i, j, std::abs(r), s);
    }
  out.sys_res = acc.norm_interior();
  out.min_abs_im = counted ? min_im : 0;
  out.max_mod_dev = mod_dev;
  out.margin_fraction = counted ? static_cast<double>(above) / counted : 0;
  return out;
}

}  // namespace

RhoField rho_coordinate(const ChristoffelComplex& c, const Thresholds& thr) {
  const Grid2& g = c.gamma.grid();
  ComplexField gz = complex_diff(c.gamma, CDiffAxis::z);
  ComplexField w(g);
  for (long k = 0; k < g.size(); ++k)
    w[k] = gz[k] - 2.0 * c.gamma[k] * std::conj(c.gamma[k]);
  Mask base = erode(c.guarded, 2);
  auto dzb = [](const ComplexField& f) { return complex_diff(f, CDiffAxis::zbar); };
  return rho_from_defect(g, base, w, c.gamma, dzb, thr, /*conjugate_w=*/true);
}

namespace {

SpeciesVerdict decide(PairKind kind, double first_species_res, const TauField& tau,
                      const RhoField& rho, const Thresholds& thr, double h,
                      std::string* note) {
  if (first_species_res < thr.species_floor) {
    *note = "integrability defect vanishes";
    return SpeciesVerdict::first_species;
  }
  double ceiling = thr.sys_ceiling(h);
  if (kind == PairKind::hyperbolic) {
    if (tau.guarded_fraction < thr.coverage) {
      *note = "tau coverage below threshold";
      return SpeciesVerdict::undetermined;
    }
    if (tau.tau_min > 0 && tau.margin_fraction >= thr.margin_coverage &&
        tau.sys_res_u <= ceiling && tau.sys_res_v <= ceiling) {
      *note = "tau positive, away from one, system residual at stencil level";
      return SpeciesVerdict::second_species;
    }
    if (tau.margin_fraction < thr.margin_coverage) {
      *note = "tau close to one (special pair: bendable, not Sbrana-Cartan)";
      return SpeciesVerdict::undetermined;
    }
    *note = "tau system residual above ceiling";
    return SpeciesVerdict::undetermined;
  }
  if (rho.guarded_fraction < thr.coverage) {
    *note = "rho coverage below threshold";
    return SpeciesVerdict::undetermined;
  }
  if (rho.margin_fraction >= thr.margin_coverage && rho.sys_res <= ceiling &&
      rho.max_mod_dev < 1e-10) {
    *note = "rho unit, non-real, system residual at stencil level";
    return SpeciesVerdict::second_species;
  }
  if (rho.margin_fraction < thr.margin_coverage) {
    *note = "rho nearly real (special pair: bendable, not Sbrana-Cartan)";
    return SpeciesVerdict::undetermined;
  }
  *note = "rho system residual above ceiling";
  return SpeciesVerdict::undetermined;
}

}  // namespace

SpeciesReport classify_pair(const GaussPair& p, const Thresholds& thr) {
  SpeciesReport rep;
  rep.kind = p.kind;
  rep.thresholds = thr;
  rep.h = std::max(p.h.grid().hu, p.h.grid().hv);
  if (p.kind == PairKind::hyperbolic) {
    ChristoffelReal c = christoffel_real(p);
    rep.special_pair_res = special_pair_residual(c);
    rep.first_species_res = first_species_residual(c);
    if (rep.first_species_res >= thr.species_floor) {
      try {
        rep.tau = tau_coordinate(c, thr);
      } catch (const Error&) {
        rep.verdict = SpeciesVerdict::undetermined;
        rep.note = "tau denominator degenerate";
        return rep;
      }
    }
    rep.verdict = decide(p.kind, rep.first_species_res, rep.tau, rep.rho, thr,
                         rep.h, &rep.note);
  } else {
    ChristoffelComplex c = christoffel_complex(p);
    rep.special_pair_res = special_pair_residual(c);
    rep.first_species_res = first_species_residual(c);
    if (rep.first_species_res >= thr.species_floor) {
      try {
        rep.rho = rho_coordinate(c, thr);
      } catch (const Error&) {
        rep.verdict = SpeciesVerdict::undetermined;
        rep.note = "rho defect degenerate";
        return rep;
      }
    }
    rep.verdict = decide(p.kind, rep.first_species_res, rep.tau, rep.rho, thr,
                         rep.h, &rep.note);
  }
  return rep;
}

FrameData frame_lambdas(const GaussPair& surf, const VecField& U,
                        const VecField& V, PairKind kind) {
  const Grid2& g = surf.h.grid();
  FrameData fd;
  fd.kind = kind;
  fd.U = U;
  fd.V = V;
  fd.pairing = RealField(g);
  fd.lam1 = ComplexField(g);
  fd.lam2 = ComplexField(g);
  fd.extract_res = RealField(g);
  fd.guarded = Mask(g, 0);

  const int dim = surf.h.dim();
  auto ambient = [&](const VecField& X) {
    VecField out(g, dim);
    par::for_index(g.size(), [&](long k) {
      out.at(k) = X.at(k)(0) * surf.hu.at(k) + X.at(k)(1) * surf.hv.at(k);
    });
    return out;
  };

  VecField Uamb = ambient(U);
  VecField Vamb = ambient(V);
  VecField dUu = diff(Uamb, DiffAxis::u), dUv = diff(Uamb, DiffAxis::v);
  VecField dVu = diff(Vamb, DiffAxis::u), dVv = diff(Vamb, DiffAxis::v);

  // nabla_X Y in coordinate components: tangential projection through the
  // metric Gram matrix
  auto covariant = [&](const VecField& X, const VecField& dYu, const VecField& dYv,
                       long k) {
    Eigen::VectorXd d = X.at(k)(0) * dYu.at(k) + X.at(k)(1) * dYv.at(k);
    Eigen::Matrix2d gram;
    gram << surf.E[k], surf.F[k], surf.F[k], surf.G[k];
    Eigen::Vector2d rhs(surf.hu.at(k).dot(d), surf.hv.at(k).dot(d));
    return Eigen::Vector2d(gram.ldlt().solve(rhs));
  };

  double unit_dev = 0;
  for (long k = 0; k < g.size(); ++k) {
    if (!surf.immersed[k]) continue;
    Eigen::Matrix2d frame;
    frame << U.at(k)(0), V.at(k)(0), U.at(k)(1), V.at(k)(1);
    double det = frame.determinant();
    double fscale = frame.norm();
    if (std::abs(det) < 1e-10 * fscale * fscale) continue;
    fd.guarded[k] = 1;

    Eigen::Matrix2d gram;
    gram << surf.E[k], surf.F[k], surf.F[k], surf.G[k];
    Eigen::Vector2d Uc(U.at(k)(0), U.at(k)(1)), Vc(V.at(k)(0), V.at(k)(1));
    fd.pairing[k] = Uc.dot(gram * Vc);
    unit_dev = std::max(unit_dev, std::abs(Uc.dot(gram * Uc) - 1.0));
    unit_dev = std::max(unit_dev, std::abs(Vc.dot(gram * Vc) - 1.0));

    Eigen::Vector2d cUV = covariant(U, dVu, dVv, k);
    Eigen::Vector2d cVU = covariant(V, dUu, dUv, k);

    if (kind == PairKind::hyperbolic) {
      Eigen::Vector2d pq = frame.fullPivLu().solve(cUV);
      Eigen::Vector2d pq2 = frame.fullPivLu().solve(cVU);
      fd.lam1[k] = pq(0);
      fd.lam2[k] = pq2(1);
      double scale = pq.norm() + pq2.norm() + 1e-300;
      double r1 = std::abs(pq(1) + pq(0) * fd.pairing[k]);
      double r2 = std::abs(pq2(0) + pq2(1) * fd.pairing[k]);
      fd.extract_res[k] = (r1 + r2) / scale;
    } else {
      Eigen::Vector2d cUU = covariant(U, dUu, dUv, k);
      Eigen::Vector2d cVV = covariant(V, dVu, dVv, k);
      Eigen::Vector2cd wc;
      wc(0) = 0.25 * cplx(cUU(0) + cVV(0), cUV(0) - cVU(0));
      wc(1) = 0.25 * cplx(cUU(1) + cVV(1), cUV(1) - cVU(1));
      Eigen::Vector2cd zc(0.5 * cplx(Uc(0), -Vc(0)), 0.5 * cplx(Uc(1), -Vc(1)));
      Eigen::Matrix2cd sys;
      sys << zc(0), std::conj(zc(0)), zc(1), std::conj(zc(1));
      Eigen::Vector2cd lam = sys.fullPivLu().solve(wc);
      fd.lam1[k] = lam(0);
      fd.lam2[k] = lam(1);
      fd.extract_res[k] = (sys * lam - wc).norm() / (wc.norm() + 1e-300);
    }
  }
  fd.unit_dev = unit_dev;

  long kept = 0;
  for (long k = 0; k < g.size(); ++k)
    if (fd.guarded[k]) ++kept;
  if (kept == 0) fail(errc::frame_degenerate, "frame determinant below guard everywhere");
  return fd;
}

FrameSpecies frame_species(const GaussPair& surf, const FrameData& fd,
                           const Thresholds& thr) {
  const Grid2& g = surf.h.grid();
  FrameSpecies out;
  Mask base = erode(fd.guarded, 2);

  if (fd.kind == PairKind::hyperbolic) {
    RealField l1 = re(fd.lam1), l2 = re(fd.lam2);
    RealField Ul1 = directional(fd.U, l1);
    RealField Vl2 = directional(fd.V, l2);
    RealField num(g), den(g);
    ResAccum sp, fs;
    for (int j = 0; j < g.nv; ++j)
      for (int i = 0; i < g.nu; ++i) {
        long k = g.idx(i, j);
        double a = Ul1[k] + fd.pairing[k] * l1[k] * l1[k];
        double b = Vl2[k] + fd.pairing[k] * l2[k] * l2[k];
        double prod = l1[k] * l2[k];
        num[k] = a - prod;
        den[k] = b - prod;
        if (!base[k]) continue;
        sp.add(g, i, j, std::abs(a - b), std::abs(a) + std::abs(b));
        fs.add(g, i, j, std::abs(a - prod) + std::abs(b - prod),
               std::abs(a) + std::abs(b) + 2.0 * std::abs(prod));
      }
    out.special_pair_res = sp.norm_interior();
    out.first_species_res = fs.norm_interior();
    if (out.first_species_res >= thr.species_floor) {
      auto dU = [&](const RealField& f) { return directional(fd.U, f); };
      auto dV = [&](const RealField& f) { return directional(fd.V, f); };
      out.tau = tau_from_defect(g, base, num, den, l2, l1, dU, dV, thr);
      out.second_species = out.tau.tau_min > 0 &&
                           out.tau.margin_fraction >= thr.margin_coverage &&
                           out.tau.guarded_fraction >= thr.coverage;
    }
  } else {
    ComplexField Zl1(g);
    {
      ComplexField Ul1 = directional(fd.U, fd.lam1);
      ComplexField Vl1 = directional(fd.V, fd.lam1);
      for (long k = 0; k < g.size(); ++k)
        Zl1[k] = 0.5 * (Ul1[k] - cplx(0, 1) * Vl1[k]);
    }
    ComplexField w(g);
    ResAccum sp, fs;
    for (int j = 0; j < g.nv; ++j)
      for (int i = 0; i < g.nu; ++i) {
        long k = g.idx(i, j);
        cplx l1 = fd.lam1[k], l2 = fd.lam2[k];
        w[k] = Zl1[k] - l1 * std::conj(l1) - l1 * l2;
        if (!base[k]) continue;
        double special = std::abs(std::imag(Zl1[k] - l1 * l2));
        sp.add(g, i, j, special, std::abs(Zl1[k]) + std::abs(l1 * l2));
        fs.add(g, i, j, std::abs(w[k]),
               std::abs(Zl1[k]) + std::abs(l1 * std::conj(l1)) + std::abs(l1 * l2));
      }
    out.special_pair_res = sp.norm_interior();
    out.first_species_res = fs.norm_interior();
    if (out.first_species_res >= thr.species_floor) {
      auto dzb = [&](const ComplexField& f) {
        ComplexField Uf = directional(fd.U, f);
        ComplexField Vf = directional(fd.V, f);
        ComplexField o(g);
        // Zbar(f) = (U(f) + i V(f))/2
        for (long k = 0; k < g.size(); ++k) o[k] = 0.5 * (Uf[k] + cplx(0, 1) * Vf[k]);
        return o;
      };
      // conjugate of the frame evolution identity: Zbar(rho) + lam1 (rho - conj rho) = 0
      out.rho = rho_from_defect(g, base, w, fd.lam1, dzb, thr, /*conjugate_w=*/false);
      out.second_species = out.rho.margin_fraction >= thr.margin_coverage &&
                           out.rho.guarded_fraction >= thr.coverage &&
                           out.rho.max_mod_dev < 1e-10;
    }
  }
  return out;
}

}  // namespace scf
