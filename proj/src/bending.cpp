#include "scf/bending.hpp"

#include <cmath>

namespace scf {

namespace {

// Fourth-order prefix quadrature along a sampled line: cumulative integrals
// at the nodes from node values alone (cubic-interpolatory increments).
template <class T, class Get>
void prefix_integral(int n, double h, const Get& f, std::vector<T>& out) {
  out[0] = f(0) * 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    T inc;
    if (i == 0)
      inc = (h / 24.0) * (9.0 * f(0) + 19.0 * f(1) - 5.0 * f(2) + f(3));
    else if (i == n - 2)
      inc = (h / 24.0) *
            (9.0 * f(n - 1) + 19.0 * f(n - 2) - 5.0 * f(n - 3) + f(n - 4));
    else
      inc = (h / 24.0) * (-f(i - 1) + 13.0 * f(i) + 13.0 * f(i + 1) - f(i + 2));
    out[i + 1] = out[i] + inc;
  }
}

// log-sigma by two sweep orders; returns the mismatch.
double integrate_log_sigma(const Grid2& g, const RealField& wu, const RealField& wv,
                           RealField* lam_out) {
  RealField a(g), b(g);
  std::vector<double> line(std::max(g.nu, g.nv));

  // column 0 then u-lines
  prefix_integral<double>(g.nv, g.hv, [&](int j) { return wv(0, j); }, line);
  for (int j = 0; j < g.nv; ++j) a(0, j) = line[j];
  for (int j = 0; j < g.nv; ++j) {
    prefix_integral<double>(g.nu, g.hu, [&](int i) { return wu(i, j); }, line);
    for (int i = 0; i < g.nu; ++i) a(i, j) = a(0, j) + line[i];
  }
  // row 0 then v-lines
  prefix_integral<double>(g.nu, g.hu, [&](int i) { return wu(i, 0); }, line);
  for (int i = 0; i < g.nu; ++i) b(i, 0) = line[i];
  for (int i = 0; i < g.nu; ++i) {
    prefix_integral<double>(g.nv, g.hv, [&](int j) { return wv(i, j); }, line);
    for (int j = 0; j < g.nv; ++j) b(i, j) = b(i, 0) + line[j];
  }

  double mismatch = 0;
  for (long k = 0; k < g.size(); ++k) mismatch = std::max(mismatch, std::abs(a[k] - b[k]));
  *lam_out = a;
  return mismatch;
}

}  // namespace

RealField sigma_field(const Hypersurface& h, double* path_res) {
  const Grid2& g = h.grid();
  RealField wu(g), wv(g);
  if (h.pair.kind == PairKind::hyperbolic) {
    ChristoffelReal c = christoffel_real(h.pair);
    for (long k = 0; k < g.size(); ++k) {
      wu[k] = -2.0 * c.gamma2[k];
      wv[k] = -2.0 * c.gamma1[k];
    }
  } else {
    ChristoffelComplex c = christoffel_complex(h.pair);
    for (long k = 0; k < g.size(); ++k) {
      wu[k] = -4.0 * c.gamma[k].real();
      wv[k] = -4.0 * c.gamma[k].imag();
    }
  }
  RealField lam(g);
  double mism = integrate_log_sigma(g, wu, wv, &lam);
  if (path_res) *path_res = mism;
  if (mism > 1e-2)
    fail(errc::not_special_pair,
         "integrating factor is path dependent: " + std::to_string(mism));
  RealField sigma(g);
  for (long k = 0; k < g.size(); ++k) sigma[k] = std::exp(lam[k]);
  return sigma;
}

double wedge_residual(const Hypersurface& h, const MatField& b2) {
  const Grid2& g = h.grid();
  double worst = 0;
  for (int j = 2; j < g.nv - 2; ++j)
    for (int i = 2; i < g.nu - 2; ++i) {
      long k = g.idx(i, j);
      if (!h.regular[k]) continue;
      Eigen::Matrix2d a = h.shape.at(k);
      Eigen::Matrix2d adj;
      adj << a(1, 1), -a(0, 1), -a(1, 0), a(0, 0);
      double r = std::abs((adj * b2.at(k)).trace());
      double s = adj.norm() * b2.at(k).norm();
      if (s > 1e-300) worst = std::max(worst, r / s);
    }
  return worst;
}

MatField build_b(const Hypersurface& h, const SplitData& s, const RealField& sigma,
                 double* wedge_res, double* sym_res) {
  const Grid2& g = h.grid();
  MatField b2(g, 2, 2);
  double sym_worst = 0, sym_scale = 0;
  for (long k = 0; k < g.size(); ++k) {
    if (!h.regular[k] || !s.valid[k]) continue;
    Eigen::Matrix2d m = h.shape.at(k) * s.j_e.at(k);
    sym_worst = std::max(sym_worst, (m - m.transpose()).norm());
    sym_scale = std::max(sym_scale, m.norm());
    b2.at(k) = sigma[k] * 0.5 * (m + m.transpose());
  }
  double bmax = 0;
  for (long k = 0; k < g.size(); ++k) bmax = std::max(bmax, b2.at(k).norm());
  if (bmax <= 0.0)
    fail(errc::contract_violation, "constructed B vanishes (trivial bending)");
  double w = wedge_residual(h, b2);
  if (w > 1e-8)
    fail(errc::contract_violation,
         "wedge identity violated: residual " + std::to_string(w));
  if (wedge_res) *wedge_res = w;
  if (sym_res) *sym_res = sym_worst / std::max(sym_scale, 1e-300);
  return b2;
}

namespace {

struct TWResult {
  VecField t;
  MatField w;
};

TWResult integrate_tw(const Hypersurface& h, const MatField& eta_u,
                      const MatField& eta_v, bool transposed,
                      const Eigen::MatrixXd* w0, const Eigen::VectorXd* t0) {
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  TWResult out;
  out.t = VecField(g, dim);
  out.w = MatField(g, dim, dim);
  Eigen::MatrixXd zero_m = Eigen::MatrixXd::Zero(dim, dim);

  std::vector<Eigen::MatrixXd> wline(std::max(g.nu, g.nv), zero_m);
  if (!transposed) {
    prefix_integral<Eigen::MatrixXd>(
        g.nv, g.hv, [&](int j) { return Eigen::MatrixXd(eta_v.at(0, j)); }, wline);
    for (int j = 0; j < g.nv; ++j) out.w.at(0, j) = wline[j];
    for (int j = 0; j < g.nv; ++j) {
      prefix_integral<Eigen::MatrixXd>(
          g.nu, g.hu, [&](int i) { return Eigen::MatrixXd(eta_u.at(i, j)); },
          wline);
      Eigen::MatrixXd base = out.w.at(0, j);
      for (int i = 0; i < g.nu; ++i) out.w.at(i, j) = base + wline[i];
    }
  } else {
    prefix_integral<Eigen::MatrixXd>(
        g.nu, g.hu, [&](int i) { return Eigen::MatrixXd(eta_u.at(i, 0)); }, wline);
    for (int i = 0; i < g.nu; ++i) out.w.at(i, 0) = wline[i];
    for (int i = 0; i < g.nu; ++i) {
      prefix_integral<Eigen::MatrixXd>(
          g.nv, g.hv, [&](int j) { return Eigen::MatrixXd(eta_v.at(i, j)); },
          wline);
      Eigen::MatrixXd base = out.w.at(i, 0);
      for (int j = 0; j < g.nv; ++j) out.w.at(i, j) = base + wline[j];
    }
  }
  if (w0)
    for (long k = 0; k < g.size(); ++k) out.w.at(k) += *w0;

  // second stage: dT = W f_* along the same sweep
  std::vector<Eigen::VectorXd> tline(std::max(g.nu, g.nv),
                                     Eigen::VectorXd::Zero(dim));
  auto gu = [&](int i, int j) {
    return Eigen::VectorXd(out.w.at(i, j) * h.f0u.at(i, j));
  };
  auto gv = [&](int i, int j) {
    return Eigen::VectorXd(out.w.at(i, j) * h.f0v.at(i, j));
  };
  if (!transposed) {
    prefix_integral<Eigen::VectorXd>(g.nv, g.hv, [&](int j) { return gv(0, j); },
                                     tline);
    for (int j = 0; j < g.nv; ++j) out.t.at(0, j) = tline[j];
    for (int j = 0; j < g.nv; ++j) {
      prefix_integral<Eigen::VectorXd>(g.nu, g.hu, [&](int i) { return gu(i, j); },
                                       tline);
      Eigen::VectorXd base = out.t.at(0, j);
      for (int i = 0; i < g.nu; ++i) out.t.at(i, j) = base + tline[i];
    }
  } else {
    prefix_integral<Eigen::VectorXd>(g.nu, g.hu, [&](int i) { return gu(i, 0); },
                                     tline);
    for (int i = 0; i < g.nu; ++i) out.t.at(i, 0) = tline[i];
    for (int i = 0; i < g.nu; ++i) {
      prefix_integral<Eigen::VectorXd>(g.nv, g.hv, [&](int j) { return gv(i, j); },
                                       tline);
      Eigen::VectorXd base = out.t.at(i, 0);
      for (int j = 0; j < g.nv; ++j) out.t.at(i, j) = base + tline[j];
    }
  }
  if (t0)
    for (long k = 0; k < g.size(); ++k) out.t.at(k) += *t0;
  return out;
}

void ambient_b_images(const Hypersurface& h, const MatField& b2, VecField* bxu,
                      VecField* bxv) {
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  *bxu = VecField(g, dim);
  *bxv = VecField(g, dim);
  par::for_index(g.size(), [&](long k) {
    Eigen::Vector2d yu = b2.at(k) * h.sx.at(k).col(0);
    Eigen::Vector2d yv = b2.at(k) * h.sx.at(k).col(1);
    bxu->at(k) = yu(0) * h.e1.at(k) + yu(1) * h.e2.at(k);
    bxv->at(k) = yv(0) * h.e1.at(k) + yv(1) * h.e2.at(k);
  });
}

double codazzi_residual(const Hypersurface& h, const VecField& bxu,
                        const VecField& bxv) {
  const Grid2& g = h.grid();
  VecField cu = diff(bxv, DiffAxis::u);
  VecField cv = diff(bxu, DiffAxis::v);
  Mask safe = erode(h.regular, 2);
  double worst = 0, scale = 0;
  for (int j = 2; j < g.nv - 2; ++j)
    for (int i = 2; i < g.nu - 2; ++i) {
      long k = g.idx(i, j);
      if (!safe[k]) continue;
      Eigen::VectorXd d = cu.at(k) - cv.at(k);
      d -= h.pair.h.at(k).dot(d) * h.pair.h.at(k);  // tangential part
      worst = std::max(worst, d.norm());
      scale = std::max(scale, cu.at(k).norm() + cv.at(k).norm());
    }
  return worst / std::max(scale, 1e-300);
}

}  // namespace

MatField extract_b(const Hypersurface& h, const VecField& t_field,
                   const MatField& w_state) {
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  const int nxi = h.n - 2;
  VecField pu = diff(t_field, DiffAxis::u);
  VecField pv = diff(t_field, DiffAxis::v);
  VecField duu = diff(pu, DiffAxis::u);
  VecField duv = diff(pv, DiffAxis::u);
  VecField dvv = diff(pv, DiffAxis::v);
  VecField f0uu = diff(h.f0, DiffAxis::uu);
  VecField f0uv = diff(h.f0, DiffAxis::uv);
  VecField f0vv = diff(h.f0, DiffAxis::vv);

  MatField out(g, 2, 2);
  par::for_index(g.size(), [&](long k) {
    if (!h.regular[k]) return;
    // frame Gram for expanding tangent vectors in {f0_u, f0_v, xi}
    Eigen::MatrixXd frame(dim, h.n);
    frame.col(0) = h.f0u.at(k);
    frame.col(1) = h.f0v.at(k);
    for (int x = 0; x < nxi; ++x) frame.col(2 + x) = h.xi[x].at(k);
    Eigen::MatrixXd gram = frame.transpose() * frame;
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);

    auto entry = [&](const Eigen::VectorXd& dP, const Eigen::VectorXd& f0ab) {
      Eigen::VectorXd tang = f0ab - h.pair.h.at(k).dot(f0ab) * h.pair.h.at(k);
      Eigen::VectorXd coef = solver.solve(frame.transpose() * tang);
      Eigen::VectorXd tstar =
          coef(0) * pu.at(k) + coef(1) * pv.at(k);
      for (int x = 0; x < nxi; ++x)
        tstar += coef(2 + x) * (w_state.at(k) * h.xi[x].at(k));
      return h.pair.h.at(k).dot(dP - tstar);
    };

    Eigen::Matrix2d form;
    form(0, 0) = entry(duu.at(k), f0uu.at(k));
    form(0, 1) = entry(duv.at(k), f0uv.at(k));
    form(1, 0) = form(0, 1);
    form(1, 1) = entry(dvv.at(k), f0vv.at(k));
    Eigen::Matrix2d sinv = h.sx.at(k).inverse();
    out.at(k) = sinv.transpose() * form * sinv;
  });
  return out;
}

VecField extend_fibers(const Hypersurface& h, const BendingField& bf, double w) {
  const Grid2& g = h.grid();
  VecField out(g, h.n + 1);
  par::for_index(g.size(), [&](long k) {
    Eigen::VectorXd lift = Eigen::VectorXd::Zero(h.n + 1);
    for (size_t x = 0; x < h.xi.size(); ++x) lift += w * h.xi[x].at(k);
    out.at(k) = bf.t_field.at(k) + bf.w_state.at(k) * lift;
  });
  return out;
}

double bending_identity_fd(const Hypersurface& h, const BendingField& bf, double w) {
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  VecField tw = w == 0.0 ? bf.t_field : extend_fibers(h, bf, w);
  VecField psi(g, dim);
  par::for_index(g.size(), [&](long k) {
    Eigen::VectorXd p = h.f0.at(k);
    for (size_t x = 0; x < h.xi.size(); ++x) p += w * h.xi[x].at(k);
    psi.at(k) = p;
  });
  VecField pu = diff(tw, DiffAxis::u);
  VecField pv = diff(tw, DiffAxis::v);
  VecField su = diff(psi, DiffAxis::u);
  VecField sv = diff(psi, DiffAxis::v);

  double worst = 0, pscale = 0, fscale = 0;
  for (int j = 2; j < g.nv - 2; ++j)
    for (int i = 2; i < g.nu - 2; ++i) {
      long k = g.idx(i, j);
      if (!h.regular[k]) continue;
      double ruu = 2.0 * pu.at(k).dot(su.at(k));
      double ruv = pu.at(k).dot(sv.at(k)) + su.at(k).dot(pv.at(k));
      double rvv = 2.0 * pv.at(k).dot(sv.at(k));
      worst = std::max({worst, std::abs(ruu), std::abs(ruv), std::abs(rvv)});
      for (size_t x = 0; x < h.xi.size(); ++x) {
        Eigen::VectorXd wxi = bf.w_state.at(k) * h.xi[x].at(k);
        double r = pu.at(k).dot(h.xi[x].at(k)) + su.at(k).dot(wxi);
        double r2 = pv.at(k).dot(h.xi[x].at(k)) + sv.at(k).dot(wxi);
        worst = std::max({worst, std::abs(r), std::abs(r2)});
      }
      pscale = std::max({pscale, pu.at(k).norm(), pv.at(k).norm()});
      fscale = std::max({fscale, su.at(k).norm(), sv.at(k).norm()});
    }
  return worst / std::max(pscale * fscale, 1e-300);
}

BendingField compute_bending(const Hypersurface& h, const SplitData& s,
                             const Thresholds& thr) {
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  BendingField bf;
  bf.sigma = sigma_field(h, &bf.sigma_path_res);
  bf.b2 = build_b(h, s, bf.sigma, &bf.wedge_res, &bf.sym_compat_res);
  for (long k = 0; k < g.size(); ++k)
    bf.b_scale = std::max(bf.b_scale, bf.b2.at(k).norm());
  ambient_b_images(h, bf.b2, &bf.b_xu, &bf.b_xv);
  bf.codazzi_res = codazzi_residual(h, bf.b_xu, bf.b_xv);
  if (bf.codazzi_res > 0.05)
    fail(errc::contract_violation,
         "constructed B is not Codazzi: residual " + std::to_string(bf.codazzi_res));

  // structure 1-form of the derivative state
  MatField eta_u(g, dim, dim), eta_v(g, dim, dim);
  par::for_index(g.size(), [&](long k) {
    Eigen::VectorXd n = h.pair.h.at(k);
    eta_u.at(k) = n * bf.b_xu.at(k).transpose() - bf.b_xu.at(k) * n.transpose();
    eta_v.at(k) = n * bf.b_xv.at(k).transpose() - bf.b_xv.at(k) * n.transpose();
  });

  TWResult a = integrate_tw(h, eta_u, eta_v, false, nullptr, nullptr);
  TWResult b = integrate_tw(h, eta_u, eta_v, true, nullptr, nullptr);
  double tmax = 0, wmax = 0, dt = 0, dw = 0;
  for (long k = 0; k < g.size(); ++k) {
    tmax = std::max(tmax, a.t.at(k).norm());
    wmax = std::max(wmax, a.w.at(k).norm());
    dt = std::max(dt, (a.t.at(k) - b.t.at(k)).norm());
    dw = std::max(dw, (a.w.at(k) - b.w.at(k)).norm());
  }
  bf.path_res = std::max(dt / std::max(tmax, 1e-300), dw / std::max(wmax, 1e-300));
  if (bf.path_res > 1e-3)
    fail(errc::path_dependence,
         "bending integration is path dependent: " + std::to_string(bf.path_res));
  bf.t_field = a.t;
  bf.w_state = a.w;

  double skew = 0;
  for (long k = 0; k < g.size(); ++k)
    skew = std::max(skew,
                    (a.w.at(k) + a.w.at(k).transpose()).norm() /
                        std::max(wmax, 1e-300));
  bf.eq1_res = skew;
  bf.eq1_fd_res = bending_identity_fd(h, bf, 0.0);

  MatField rt = extract_b(h, bf.t_field, bf.w_state);
  double dworst = 0;
  Mask safe = erode(h.regular, 2);
  for (int j = 2; j < g.nv - 2; ++j)
    for (int i = 2; i < g.nu - 2; ++i) {
      long k = g.idx(i, j);
      if (!safe[k]) continue;
      dworst = std::max(dworst, (rt.at(k) - bf.b2.at(k)).norm());
    }
  bf.roundtrip_res = dworst / std::max(bf.b_scale, 1e-300);

  (void)thr;
  return bf;
}

GaugeCheck gauge_uniqueness(const Hypersurface& h, const BendingField& bf,
                            const Eigen::MatrixXd& w0, const Eigen::VectorXd& t0) {
  const Grid2& g = h.grid();
  const int dim = h.n + 1;
  MatField eta_u(g, dim, dim), eta_v(g, dim, dim);
  par::for_index(g.size(), [&](long k) {
    Eigen::VectorXd n = h.pair.h.at(k);
    eta_u.at(k) = n * bf.b_xu.at(k).transpose() - bf.b_xu.at(k) * n.transpose();
    eta_v.at(k) = n * bf.b_xv.at(k).transpose() - bf.b_xv.at(k) * n.transpose();
  });
  TWResult alt = integrate_tw(h, eta_u, eta_v, false, &w0, &t0);

  GaugeCheck out;
  for (long k = 0; k < g.size(); ++k)
    out.w_drift = std::max(
        out.w_drift, (alt.w.at(k) - bf.w_state.at(k) - w0).norm());

  // fit Delta T = D f0 + c with D skew
  const int nskew = dim * (dim - 1) / 2;
  const int nunk = nskew + dim;
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(nunk, nunk);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(nunk);
  auto rows_for = [&](long k) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(dim, nunk);
    int c = 0;
    for (int p = 0; p < dim; ++p)
      for (int q = p + 1; q < dim; ++q) {
        // basis skew matrix E_pq - E_qp applied to f0
        rows(p, c) = h.f0.at(k)(q);
        rows(q, c) = -h.f0.at(k)(p);
        ++c;
      }
    for (int p = 0; p < dim; ++p) rows(p, nskew + p) = 1.0;
    return rows;
  };
  for (long k = 0; k < g.size(); ++k) {
    Eigen::MatrixXd rows = rows_for(k);
    Eigen::VectorXd delta = alt.t.at(k) - bf.t_field.at(k);
    ata += rows.transpose() * rows;
    atb += rows.transpose() * delta;
  }
  Eigen::VectorXd sol = ata.ldlt().solve(atb);
  double worst = 0, scale = 0;
  for (long k = 0; k < g.size(); ++k) {
    Eigen::VectorXd delta = alt.t.at(k) - bf.t_field.at(k);
    Eigen::VectorXd fitres = delta - rows_for(k) * sol;
    worst = std::max(worst, fitres.norm());
    scale = std::max(scale, delta.norm());
  }
  out.misfit = worst / std::max(scale, 1e-300);
  return out;
}

}  // namespace scf
