#include "scf/seed.hpp"

#include <cmath>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace scf {

namespace {

RealField eval_field(const Expr& e, const Grid2& g) {
  return RealField::build(g, [&](int i, int j) { return e.eval(g.u(i), g.v(j)); });
}

ExprPtr add_exprs(ExprPtr a, ExprPtr b) {
  if (!b) return a;
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::add;
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

}  // namespace

RealField goursat_solve(const RealField& m, const Expr& a, const Expr& b,
                        int refine_passes) {
  const Grid2& g = m.grid();
  const double corner_a = a.eval(g.u0, g.v0);
  const double corner_b = b.eval(g.u0, g.v0);
  const double scale = std::max({1.0, std::abs(corner_a), std::abs(corner_b)});
  if (std::abs(corner_a - corner_b) > 1e-12 * scale)
    fail(errc::incompatible_corner,
         "characteristic data disagree at the corner: a=" + std::to_string(corner_a) +
             " b=" + std::to_string(corner_b));

  const double cell = g.hu * g.hv / 4.0;

  auto march = [&](const RealField* prev) {
    RealField phi(g);
    for (int i = 0; i < g.nu; ++i) phi(i, 0) = a.eval(g.u(i), g.v0);
    for (int j = 0; j < g.nv; ++j) phi(0, j) = b.eval(g.u0, g.v(j));

    // Deferred-correction source from the previous pass: the trapezoidal
    // cell error is (hu^3 hv/12) (M phi)_uu + (hu hv^3/12) (M phi)_vv.
    RealField psi_uu, psi_vv;
    if (prev) {
      RealField psi = RealField::build(
          g, [&](int i, int j) { return m(i, j) * (*prev)(i, j); });
      psi_uu = diff(psi, DiffAxis::uu);
      psi_vv = diff(psi, DiffAxis::vv);
    }

    for (int j = 0; j + 1 < g.nv; ++j) {
      for (int i = 0; i + 1 < g.nu; ++i) {
        double rhs = phi(i + 1, j) + phi(i, j + 1) - phi(i, j) -
                     cell * (m(i, j) * phi(i, j) + m(i + 1, j) * phi(i + 1, j) +
                             m(i, j + 1) * phi(i, j + 1));
        if (prev) {
          double cuu = 0.25 * (psi_uu(i, j) + psi_uu(i + 1, j) + psi_uu(i, j + 1) +
                               psi_uu(i + 1, j + 1));
          double cvv = 0.25 * (psi_vv(i, j) + psi_vv(i + 1, j) + psi_vv(i, j + 1) +
                               psi_vv(i + 1, j + 1));
          rhs += (g.hu * g.hu * g.hu * g.hv / 12.0) * cuu +
                 (g.hu * g.hv * g.hv * g.hv / 12.0) * cvv;
        }
        double denom = 1.0 + cell * m(i + 1, j + 1);
        if (std::abs(denom) < 1e-14)
          fail(errc::singular_operator, "goursat corner update degenerate");
        phi(i + 1, j + 1) = rhs / denom;
      }
    }
    return phi;
  };

  RealField phi = march(nullptr);
  for (int p = 0; p < refine_passes; ++p) phi = march(&phi);
  require_finite(phi, "goursat solution");
  return phi;
}

RealField helmholtz_solve(const RealField& m, const Expr& boundary) {
  const Grid2& g = m.grid();
  const int nu = g.nu, nv = g.nv;
  const long n_int = static_cast<long>(nu - 2) * (nv - 2);
  auto unk = [&](int i, int j) {
    return static_cast<long>(j - 1) * (nu - 2) + (i - 1);
  };

  RealField phi(g);
  for (int i = 0; i < nu; ++i) {
    phi(i, 0) = boundary.eval(g.u(i), g.v0);
    phi(i, nv - 1) = boundary.eval(g.u(i), g.v(nv - 1));
  }
  for (int j = 0; j < nv; ++j) {
    phi(0, j) = boundary.eval(g.u0, g.v(j));
    phi(nu - 1, j) = boundary.eval(g.u(nu - 1), g.v(j));
  }

  const double cu = 1.0 / (g.hu * g.hu);
  const double cv = 1.0 / (g.hv * g.hv);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(5 * n_int);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_int);
  for (int j = 1; j < nv - 1; ++j) {
    for (int i = 1; i < nu - 1; ++i) {
      long row = unk(i, j);
      trips.emplace_back(row, row, -2.0 * cu - 2.0 * cv + 4.0 * m(i, j));
      auto couple = [&](int ii, int jj, double w) {
        if (ii == 0 || ii == nu - 1 || jj == 0 || jj == nv - 1)
          rhs(row) -= w * phi(ii, jj);
        else
          trips.emplace_back(row, unk(ii, jj), w);
      };
      couple(i - 1, j, cu);
      couple(i + 1, j, cu);
      couple(i, j - 1, cv);
      couple(i, j + 1, cv);
    }
  }

  Eigen::SparseMatrix<double> A(n_int, n_int);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success)
    fail(errc::singular_operator,
         "discrete operator factorization failed (M near an eigenvalue of the "
         "negative quarter-Laplacian)");

  Eigen::VectorXd x = lu.solve(rhs);

  // Direct solve should leave a tiny algebraic residual; a large one means
  // the operator is effectively singular. Report its smallest singular value
  // from a few inverse-power steps (A is symmetric).
  double rel_res = (A * x - rhs).norm() / std::max(1e-300, rhs.norm());
  if (rel_res > 1e-8) {
    Eigen::VectorXd y = Eigen::VectorXd::Ones(n_int).normalized();
    double sigma = 0;
    for (int it = 0; it < 40; ++it) {
      y = lu.solve(y);
      sigma = 1.0 / y.norm();
      y.normalize();
    }
    fail(errc::singular_operator,
         "discrete operator near-singular: smallest singular value ~ " +
             std::to_string(sigma));
  }

  for (int j = 1; j < nv - 1; ++j)
    for (int i = 1; i < nu - 1; ++i) phi(i, j) = x(unk(i, j));
  require_finite(phi, "helmholtz solution");
  return phi;
}

PdeResidual pde_residual(const EnvelopeSeed& seed) {
  PdeResidual out;
  const Grid2& g = seed.m.grid();
  for (size_t p = 0; p < seed.phi.size(); ++p) {
    const RealField& f = seed.phi[p];
    double scale = std::max(max_abs(f), 1e-300);

    RealField res_fd(g);
    if (seed.kind == PairKind::hyperbolic) {
      RealField fuv = diff(f, DiffAxis::uv);
      res_fd = RealField::build(
          g, [&](int i, int j) { return fuv(i, j) + seed.m(i, j) * f(i, j); });
    } else {
      RealField fuu = diff(f, DiffAxis::uu);
      RealField fvv = diff(f, DiffAxis::vv);
      res_fd = RealField::build(g, [&](int i, int j) {
        return 0.25 * (fuu(i, j) + fvv(i, j)) + seed.m(i, j) * f(i, j);
      });
    }
    double fd = max_abs(res_fd) / scale;
    out.per_phi_fd.push_back(fd);

    if (seed.exprs[p]) {
      const Expr& e = *seed.exprs[p];
      double worst = 0;
      for (int j = 0; j < g.nv; ++j)
        for (int i = 0; i < g.nu; ++i) {
          Jet2 jet = e.eval_jet(g.u(i), g.v(j));
          double r = seed.kind == PairKind::hyperbolic
                         ? jet.duv + seed.m(i, j) * jet.v
                         : 0.25 * (jet.duu + jet.dvv) + seed.m(i, j) * jet.v;
          worst = std::max(worst, std::abs(r));
        }
      out.per_phi.push_back(worst / scale);
    } else {
      out.per_phi.push_back(fd);
    }
  }
  for (double r : out.per_phi) out.worst = std::max(out.worst, r);
  for (double r : out.per_phi_fd) out.worst_fd = std::max(out.worst_fd, r);
  return out;
}

double continuous_class_test(const EnvelopeSeed& seed) {
  const Grid2& g = seed.m.grid();
  bool analytic = true;
  for (size_t p = 1; p < seed.phi.size(); ++p)
    if (!seed.exprs[p]) analytic = false;

  RealField r2 = RealField(g);
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      double s = 0;
      for (size_t p = 1; p < seed.phi.size(); ++p) s += seed.phi[p](i, j) * seed.phi[p](i, j);
      r2(i, j) = s;
    }
  double scale = std::max(max_abs(r2), 1e-300);

  if (analytic) {
    double worst = 0;
    for (int j = 0; j < g.nv; ++j)
      for (int i = 0; i < g.nu; ++i) {
        Jet2 s = Jet2::constant(0.0);
        for (size_t p = 1; p < seed.phi.size(); ++p) {
          Jet2 f = seed.exprs[p]->eval_jet(g.u(i), g.v(j));
          s = s + f * f;
        }
        double r = seed.kind == PairKind::hyperbolic ? s.duv : 0.25 * (s.duu + s.dvv);
        worst = std::max(worst, std::abs(r));
      }
    return worst / scale;
  }

  RealField d = seed.kind == PairKind::hyperbolic
                    ? diff(r2, DiffAxis::uv)
                    : RealField();
  if (seed.kind == PairKind::elliptic) {
    RealField duu = diff(r2, DiffAxis::uu);
    RealField dvv = diff(r2, DiffAxis::vv);
    d = RealField::build(
        g, [&](int i, int j) { return 0.25 * (duu(i, j) + dvv(i, j)); });
  }
  return max_abs(d) / scale;
}

GaussPair extract_pair(const EnvelopeSeed& seed, double immersion_tol,
                       double min_coverage) {
  const Grid2& g = seed.m.grid();
  const int dim = seed.n + 1;
  GaussPair p;
  p.kind = seed.kind;
  p.n = seed.n;
  p.h = VecField(g, dim);
  p.hu = VecField(g, dim);
  p.hv = VecField(g, dim);
  p.huu = VecField(g, dim);
  p.huv = VecField(g, dim);
  p.hvv = VecField(g, dim);
  p.gamma = RealField(g);
  p.gamma_u = RealField(g);
  p.gamma_v = RealField(g);
  p.gamma_uu = RealField(g);
  p.gamma_uv = RealField(g);
  p.gamma_vv = RealField(g);

  bool analytic = true;
  for (const auto& e : seed.exprs)
    if (!e) analytic = false;
  p.exact_derivatives = analytic;

  if (analytic) {
    par::for_index(g.size(), [&](long k) {
      int i = static_cast<int>(k % g.nu);
      int j = static_cast<int>(k / g.nu);
      double u = g.u(i), v = g.v(j);
      std::vector<Jet2> f(dim + 1);
      for (int c = 0; c <= dim; ++c) f[c] = seed.exprs[c]->eval_jet(u, v);
      Jet2 s = Jet2::constant(0.0);
      for (int c = 1; c <= dim; ++c) s = s + f[c] * f[c];
      if (!(s.v > 0.0)) fail(errc::domain_error, "||phi|| vanishes at a node");
      Jet2 r = jet_sqrt(s);
      for (int c = 1; c <= dim; ++c) {
        Jet2 hc = f[c] / r;
        p.h.at(k)(c - 1) = hc.v;
        p.hu.at(k)(c - 1) = hc.du;
        p.hv.at(k)(c - 1) = hc.dv;
        p.huu.at(k)(c - 1) = hc.duu;
        p.huv.at(k)(c - 1) = hc.duv;
        p.hvv.at(k)(c - 1) = hc.dvv;
      }
      Jet2 ga = f[0] / r;
      if (seed.gamma_perturb) ga = ga + seed.gamma_perturb->eval_jet(u, v);
      p.gamma[k] = ga.v;
      p.gamma_u[k] = ga.du;
      p.gamma_v[k] = ga.dv;
      p.gamma_uu[k] = ga.duu;
      p.gamma_uv[k] = ga.duv;
      p.gamma_vv[k] = ga.dvv;
    });
  } else {
    par::for_index(g.size(), [&](long k) {
      double s = 0;
      for (int c = 1; c <= dim; ++c) s += seed.phi[c][k] * seed.phi[c][k];
      if (!(s > 0.0)) fail(errc::domain_error, "||phi|| vanishes at a node");
      double r = std::sqrt(s);
      for (int c = 1; c <= dim; ++c) p.h.at(k)(c - 1) = seed.phi[c][k] / r;
      p.gamma[k] = seed.phi[0][k] / r;
    });
    if (seed.gamma_perturb) {
      par::for_index(g.size(), [&](long k) {
        int i = static_cast<int>(k % g.nu);
        int j = static_cast<int>(k / g.nu);
        p.gamma[k] += seed.gamma_perturb->eval(g.u(i), g.v(j));
      });
    }
    p.hu = diff(p.h, DiffAxis::u);
    p.hv = diff(p.h, DiffAxis::v);
    p.huu = diff(p.h, DiffAxis::uu);
    p.huv = diff(p.h, DiffAxis::uv);
    p.hvv = diff(p.h, DiffAxis::vv);
    p.gamma_u = diff(p.gamma, DiffAxis::u);
    p.gamma_v = diff(p.gamma, DiffAxis::v);
    p.gamma_uu = diff(p.gamma, DiffAxis::uu);
    p.gamma_uv = diff(p.gamma, DiffAxis::uv);
    p.gamma_vv = diff(p.gamma, DiffAxis::vv);
  }

  auto dot = [&](const VecField& a, const VecField& b, long k) {
    return a.at(k).dot(b.at(k));
  };
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
    p.E[k] = dot(p.hu, p.hu, k);
    p.F[k] = dot(p.hu, p.hv, k);
    p.G[k] = dot(p.hv, p.hv, k);
    p.Eu[k] = 2.0 * dot(p.huu, p.hu, k);
    p.Ev[k] = 2.0 * dot(p.huv, p.hu, k);
    p.Fu[k] = dot(p.huu, p.hv, k) + dot(p.hu, p.huv, k);
    p.Fv[k] = dot(p.huv, p.hv, k) + dot(p.hu, p.hvv, k);
    p.Gu[k] = 2.0 * dot(p.huv, p.hv, k);
    p.Gv[k] = 2.0 * dot(p.hvv, p.hv, k);
  });

  p.immersed = Mask(g, 1);
  long ok = 0;
  double min_det_rel = 1e300, max_dev = 0;
  for (long k = 0; k < g.size(); ++k) {
    double det = p.E[k] * p.G[k] - p.F[k] * p.F[k];
    double trace = p.E[k] + p.G[k];
    double rel = det / std::max(trace * trace, 1e-300);
    min_det_rel = std::min(min_det_rel, rel);
    bool good = det > immersion_tol * trace * trace;
    p.immersed[k] = good ? 1 : 0;
    if (good) ++ok;
    max_dev = std::max(max_dev, std::abs(p.h.at(k).norm() - 1.0));
  }
  p.min_det_rel = min_det_rel;
  p.max_norm_dev = max_dev;
  p.immersed_fraction = static_cast<double>(ok) / g.size();
  if (p.immersed_fraction < min_coverage)
    fail(errc::not_immersed,
         "map has rank below 2 on " +
             std::to_string(100.0 * (1.0 - p.immersed_fraction)) +
             "% of nodes");
  return p;
}

EnvelopeSeed build_seed(const SeedSpec& spec, const Grid2& grid) {
  if (static_cast<int>(spec.phi.size()) != spec.n + 2)
    fail(errc::config_error, "seed needs n+2 phi entries");
  if (spec.n < 3) fail(errc::config_error, "ambient dimension n must be >= 3");

  EnvelopeSeed seed;
  seed.kind = spec.kind;
  seed.n = spec.n;
  seed.name = spec.name;
  seed.m = eval_field(*spec.m_expr, grid);
  seed.gamma_perturb = spec.gamma_perturb;

  for (const PhiSpec& ps : spec.phi) {
    RealField f;
    ExprPtr effective;
    switch (ps.source) {
      case PhiSource::analytic: {
        effective = add_exprs(ps.expr, ps.perturb);
        f = eval_field(*effective, grid);
        break;
      }
      case PhiSource::goursat: {
        if (spec.kind != PairKind::hyperbolic)
          fail(errc::config_error, "goursat data only fits hyperbolic seeds");
        f = goursat_solve(seed.m, *ps.a, *ps.b);
        break;
      }
      case PhiSource::dirichlet: {
        if (spec.kind != PairKind::elliptic)
          fail(errc::config_error, "dirichlet data only fits elliptic seeds");
        f = helmholtz_solve(seed.m, *ps.boundary);
        break;
      }
    }
    if (ps.source != PhiSource::analytic && ps.perturb) {
      const Grid2& g = grid;
      for (int j = 0; j < g.nv; ++j)
        for (int i = 0; i < g.nu; ++i) f(i, j) += ps.perturb->eval(g.u(i), g.v(j));
    }
    seed.phi.push_back(std::move(f));
    seed.provenance.push_back(ps.source);
    seed.exprs.push_back(effective);
  }
  return seed;
}

SeedSpec reference_seed_h1() {
  SeedSpec s;
  s.name = "seed-h1";
  s.kind = PairKind::hyperbolic;
  s.n = 3;
  s.m_expr = parse_expr("-1");
  auto phi = [&](const std::string& e) {
    PhiSpec p;
    p.expr = parse_expr(e);
    return p;
  };
  s.phi = {phi("exp(3*u + v/3)"), phi("exp(u + v)"), phi("exp(-u - v)"),
           phi("exp(2*u + v/2)"), phi("exp(-2*u - v/2)")};
  return s;
}

SeedSpec reference_seed_e1() {
  SeedSpec s;
  s.name = "seed-e1";
  s.kind = PairKind::elliptic;
  s.n = 3;
  s.m_expr = parse_expr("0.25");
  auto phi = [&](const std::string& e) {
    PhiSpec p;
    p.expr = parse_expr(e);
    return p;
  };
  s.phi = {phi("sin((u + 2*v)/sqrt(5))"), phi("sin(u)"), phi("cos(u)"),
           phi("sin((u + v)/sqrt(2))"), phi("sin((u - v)/sqrt(2))")};
  return s;
}

SeedSpec first_species_seed() {
  SeedSpec s;
  s.name = "first-species";
  s.kind = PairKind::hyperbolic;
  s.n = 3;
  s.m_expr = parse_expr("0");
  auto phi = [&](const std::string& e) {
    PhiSpec p;
    p.expr = parse_expr(e);
    return p;
  };
  // ||phi||^2 separates as a(u) + b(v), which is exactly the continuous class.
  s.phi = {phi("u^2 + v"), phi("u"), phi("u^2/2 + 1"), phi("v"), phi("v^2/2 + 1")};
  return s;
}

}  // namespace scf
