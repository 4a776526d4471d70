#include "doctest.h"

#include <cstdio>

#include "scf/seed.hpp"
#include "support/testutil.hpp"

using namespace scf;
using scf::test::max_err_vs;
using scf::test::unit_grid;

namespace {

RealField const_field(const Grid2& g, double c) { return RealField(g, c); }

}  // namespace

TEST_CASE("goursat with M = 0 telescopes separated data exactly") {
  Grid2 g = unit_grid(33);
  RealField m = const_field(g, 0.0);
  RealField phi = goursat_solve(m, *parse_expr("u^2"), *parse_expr("v^3"), 0);
  CHECK(max_err_vs(phi, [](double u, double v) { return u * u + v * v * v; }) <
        1e-12);
}

TEST_CASE("goursat corner compatibility is enforced") {
  Grid2 g = unit_grid(17);
  RealField m = const_field(g, 0.0);
  CHECK_THROWS_AS(goursat_solve(m, *parse_expr("u + 1"), *parse_expr("v"), 0),
                  Error);
}

TEST_CASE("goursat reproduces exp(u+v) for M = -1 at order 2") {
  auto oracle = [](double u, double v) { return std::exp(u + v); };
  double prev = 0;
  int idx = 0;
  for (int n : {65, 129, 257}) {
    Grid2 g = unit_grid(n);
    RealField m = const_field(g, -1.0);
    RealField phi = goursat_solve(m, *parse_expr("exp(u)"), *parse_expr("exp(v)"), 0);
    double err = max_err_vs(phi, oracle);
    printf("[goursat M=-1 base]   n=%3d err=%.3e\n", n, err);
    if (idx > 0) {
      double ratio = prev / err;
      CHECK(ratio > 3.2);
      CHECK(ratio < 4.8);
    }
    prev = err;
    ++idx;
  }
}

TEST_CASE("goursat deferred correction reaches 1e-6 on the closed forms") {
  for (int n : {65, 129, 257}) {
    Grid2 g = unit_grid(n);
    RealField m1 = const_field(g, -1.0);
    RealField a = goursat_solve(m1, *parse_expr("exp(u)"), *parse_expr("exp(v)"));
    double err1 = max_err_vs(a, [](double u, double v) { return std::exp(u + v); });

    RealField m2 = const_field(g, 1.0);
    RealField b = goursat_solve(m2, *parse_expr("exp(u)"), *parse_expr("exp(-v)"));
    double err2 = max_err_vs(b, [](double u, double v) { return std::exp(u - v); });
    printf("[goursat refined]     n=%3d err(exp(u+v))=%.3e err(exp(u-v))=%.3e\n", n,
           err1, err2);
    if (n == 257) {
      CHECK(err1 < 1e-6);
      CHECK(err2 < 1e-6);
    }
  }
}

TEST_CASE("helmholtz reproduces closed forms") {
  // M = 1/4 with boundary sin(u): Laplacian of sin(u) is -sin(u).
  double prev = 0;
  int idx = 0;
  for (int n : {65, 129, 257}) {
    Grid2 g = unit_grid(n);
    RealField m = const_field(g, 0.25);
    RealField phi = helmholtz_solve(m, *parse_expr("sin(u)"));
    double err = max_err_vs(phi, [](double u, double) { return std::sin(u); });
    printf("[helmholtz sin(u)]    n=%3d err=%.3e\n", n, err);
    if (idx > 0) {
      double ratio = prev / err;
      CHECK(ratio > 3.2);
      CHECK(ratio < 4.8);
    }
    if (n == 257) CHECK(err < 1e-6);
    prev = err;
    ++idx;
  }

  // harmonic bilinear data is reproduced to stencil exactness
  Grid2 g = unit_grid(65);
  RealField m0 = const_field(g, 0.0);
  RealField phi = helmholtz_solve(m0, *parse_expr("u*v"));
  CHECK(max_err_vs(phi, [](double u, double v) { return u * v; }) < 1e-10);

  // oblique plane wave with |k| = 1
  RealField m = const_field(g, 0.25);
  RealField w = helmholtz_solve(m, *parse_expr("sin((u + 2*v)/sqrt(5))"));
  CHECK(max_err_vs(w, [](double u, double v) {
          return std::sin((u + 2 * v) / std::sqrt(5.0));
        }) < 1e-5);
}

TEST_CASE("helmholtz flags a near-singular operator") {
  // Constant M tuned to the lowest eigenvalue of the DISCRETE quarter
  // Laplacian on the unit square, so the assembled operator is singular to
  // rounding.
  Grid2 g = unit_grid(65);
  double s = std::sin(M_PI * g.hu / 2.0);
  double lambda = 2.0 * (4.0 / (g.hu * g.hu)) * s * s;
  RealField m = const_field(g, lambda / 4.0);
  try {
    helmholtz_solve(m, *parse_expr("u + v"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::singular_operator);
    CHECK(std::string(e.what()).find("singular value") != std::string::npos);
  }
}

TEST_CASE("pde residual: analytic, solver output, corrupted") {
  Grid2 g129 = unit_grid(129);

  SeedSpec h1 = reference_seed_h1();
  EnvelopeSeed seed = build_seed(h1, g129);
  PdeResidual r = pde_residual(seed);
  for (double x : r.per_phi) CHECK(x < 1e-8);  // exact derivatives

  // goursat-made phi has an O(h^2)-level residual under the stencil route
  SeedSpec hs = reference_seed_h1();
  hs.phi[1] = PhiSpec{PhiSource::goursat, nullptr, parse_expr("exp(u)"),
                      parse_expr("exp(v)"), nullptr};
  double prev = 0;
  int idx = 0;
  for (int n : {65, 129}) {
    EnvelopeSeed s = build_seed(hs, unit_grid(n));
    double res = pde_residual(s).per_phi_fd[1];
    if (idx > 0) {
      double ratio = prev / res;
      CHECK(ratio > 3.2);
      CHECK(ratio < 4.8);
    }
    prev = res;
    ++idx;
  }

  // deliberate corruption trips the detector
  SeedSpec bad = reference_seed_h1();
  bad.phi[2].perturb = parse_expr("0.01*u^3");
  EnvelopeSeed bs = build_seed(bad, g129);
  CHECK(pde_residual(bs).worst > 1e-3);
}

TEST_CASE("continuous class test separates the classes") {
  Grid2 g = unit_grid(65);

  // reference hyperbolic seed: each squared term gains the factor 4
  EnvelopeSeed h1 = build_seed(reference_seed_h1(), g);
  double res = continuous_class_test(h1);
  CHECK(res == doctest::Approx(4.0).epsilon(0.05));

  // separated-variables seed sits in the continuous class
  EnvelopeSeed fs = build_seed(first_species_seed(), g);
  CHECK(continuous_class_test(fs) < 1e-10);

  // elliptic reference seed is bounded away from zero
  EnvelopeSeed e1 = build_seed(reference_seed_e1(), g);
  CHECK(continuous_class_test(e1) > 0.1);
}

TEST_CASE("extract pair: normalization, immersion, degenerate map") {
  Grid2 g = unit_grid(65);
  EnvelopeSeed h1 = build_seed(reference_seed_h1(), g);
  GaussPair p = extract_pair(h1);
  CHECK(p.max_norm_dev < 1e-12);
  CHECK(p.immersed_fraction == doctest::Approx(1.0));
  CHECK(p.min_det_rel > 1e-8);

  EnvelopeSeed e1 = build_seed(reference_seed_e1(), g);
  GaussPair pe = extract_pair(e1);
  CHECK(pe.max_norm_dev < 1e-12);
  CHECK(pe.immersed_fraction == doctest::Approx(1.0));

  // constant map has rank 0 everywhere
  SeedSpec degen = reference_seed_h1();
  for (auto& ps : degen.phi) ps.expr = parse_expr("1");
  EnvelopeSeed ds = build_seed(degen, g);
  CHECK_THROWS_AS(extract_pair(ds), Error);
}

TEST_CASE("solver-built seed converges to the analytic pair") {
  // reference hyperbolic seed with every phi re-made by the goursat solver
  SeedSpec spec = reference_seed_h1();
  const char* as[5] = {"exp(3*u)", "exp(u)", "exp(-u)", "exp(2*u)", "exp(-2*u)"};
  const char* bs[5] = {"exp(v/3)", "exp(v)", "exp(-v)", "exp(v/2)", "exp(-v/2)"};
  for (int p = 0; p < 5; ++p) {
    spec.phi[p].source = PhiSource::goursat;
    spec.phi[p].a = parse_expr(as[p]);
    spec.phi[p].b = parse_expr(bs[p]);
    spec.phi[p].expr = nullptr;
  }
  Grid2 g = unit_grid(65);
  EnvelopeSeed solved = build_seed(spec, g);
  EnvelopeSeed exact = build_seed(reference_seed_h1(), g);
  double worst = 0;
  for (int p = 0; p < 5; ++p)
    for (long k = 0; k < g.size(); ++k)
      worst = std::max(worst,
                       std::abs(solved.phi[p][k] - exact.phi[p][k]) /
                           std::max(1.0, std::abs(exact.phi[p][k])));
  CHECK(worst < 1e-6);
}
