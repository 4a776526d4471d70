#include "doctest.h"

#include "scf/expr.hpp"
#include "scf/grid.hpp"
#include "support/testutil.hpp"

using namespace scf;
using scf::test::max_err_vs;
using scf::test::order_of;
using scf::test::unit_grid;

namespace {

RealField sample(const Grid2& g, const Expr& e) {
  return RealField::build(g, [&](int i, int j) { return e.eval(g.u(i), g.v(j)); });
}

}  // namespace

TEST_CASE("grid construction and guards") {
  Grid2 g = unit_grid(65);
  CHECK(g.hu == doctest::Approx(1.0 / 64));
  CHECK_THROWS_AS(Grid2(0, 1, 0, 1, 5, 65), Error);
  CHECK_THROWS_AS(Grid2(1, 0, 0, 1, 65, 65), Error);
}

TEST_CASE("quadratic exactness of the stencils") {
  Grid2 g = unit_grid(33);
  RealField f = sample(g, *parse_expr("u^2"));
  RealField fu = diff(f, DiffAxis::u);
  double worst = 0;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 1; i < g.nu - 1; ++i)
      worst = std::max(worst, std::abs(fu(i, j) - 2 * g.u(i)));
  CHECK(worst < 1e-12);

  // mixed derivative of u*v is 1 everywhere, boundary nodes included
  RealField fuv = diff(sample(g, *parse_expr("u*v")), DiffAxis::uv);
  CHECK(max_err_vs(fuv, [](double, double) { return 1.0; }) < 1e-11);
}

TEST_CASE("refinement against the jet oracle shrinks errors at order 2") {
  ExprPtr e = parse_expr("sin(u)*exp(v)");
  double prev[5];
  int idx = 0;
  for (int n : {65, 129, 257}) {
    Grid2 g = unit_grid(n);
    RealField f = sample(g, *e);
    DiffAxis axes[5] = {DiffAxis::u, DiffAxis::v, DiffAxis::uu, DiffAxis::vv,
                        DiffAxis::uv};
    double errs[5];
    for (int a = 0; a < 5; ++a) {
      RealField d = diff(f, axes[a]);
      double worst = 0;
      for (int j = 0; j < g.nv; ++j)
        for (int i = 0; i < g.nu; ++i) {
          Jet2 jet = e->eval_jet(g.u(i), g.v(j));
          double exact = 0;
          switch (axes[a]) {
            case DiffAxis::u: exact = jet.du; break;
            case DiffAxis::v: exact = jet.dv; break;
            case DiffAxis::uu: exact = jet.duu; break;
            case DiffAxis::vv: exact = jet.dvv; break;
            case DiffAxis::uv: exact = jet.duv; break;
          }
          worst = std::max(worst, std::abs(d(i, j) - exact));
        }
      errs[a] = worst;
    }
    if (idx > 0) {
      for (int a = 0; a < 5; ++a) {
        double ratio = prev[a] / errs[a];
        CHECK(ratio > 3.2);
        CHECK(ratio < 4.8);
        double order = order_of(prev[a], errs[a]);
        CHECK(order > 1.7);
        CHECK(order < 2.3);
      }
    }
    for (int a = 0; a < 5; ++a) prev[a] = errs[a];
    ++idx;
  }
}

TEST_CASE("complex derivative on holomorphic and anti-holomorphic fields") {
  Grid2 g = unit_grid(33);
  ComplexField z(g);
  ComplexField zbar(g);
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      z(i, j) = cplx(g.u(i), g.v(j));
      zbar(i, j) = cplx(g.u(i), -g.v(j));
    }
  ComplexField dz = complex_diff(z, CDiffAxis::z);
  ComplexField dzb = complex_diff(z, CDiffAxis::zbar);
  ComplexField dz2 = complex_diff(zbar, CDiffAxis::z);
  ComplexField dzb2 = complex_diff(zbar, CDiffAxis::zbar);
  double worst = 0;
  for (long k = 0; k < g.size(); ++k) {
    worst = std::max(worst, std::abs(dz[k] - cplx(1, 0)));
    worst = std::max(worst, std::abs(dzb[k]));
    worst = std::max(worst, std::abs(dz2[k]));
    worst = std::max(worst, std::abs(dzb2[k] - cplx(1, 0)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("conjugation identity for real fields") {
  Grid2 g = unit_grid(17);
  RealField f = sample(g, *parse_expr("sin(u + 2*v) + u^2"));
  ComplexField dz = complex_diff(f, CDiffAxis::z);
  ComplexField dzb = complex_diff(f, CDiffAxis::zbar);
  for (long k = 0; k < g.size(); ++k)
    CHECK(std::abs(dzb[k] - std::conj(dz[k])) < 1e-14);
}

TEST_CASE("mixed-derivative symmetry is measured small") {
  Grid2 g = unit_grid(65);
  RealField f = sample(g, *parse_expr("exp(u)*sin(v) + u^3*v"));
  RealField a = diff(diff(f, DiffAxis::u), DiffAxis::v);
  RealField b = diff(f, DiffAxis::uv);
  RealField c = diff(diff(f, DiffAxis::v), DiffAxis::u);
  double d_ab = 0, d_cb = 0;
  for (long k = 0; k < g.size(); ++k) {
    d_ab = std::max(d_ab, std::abs(a[k] - b[k]));
    d_cb = std::max(d_cb, std::abs(c[k] - b[k]));
  }
  CHECK(d_ab < 1e-12);                    // uv is the composition by definition
  CHECK(d_cb < 64 * g.hu * g.hu);         // transposed order agrees to O(h^2)
}

TEST_CASE("finite-value guard") {
  Grid2 g = unit_grid(9);
  RealField f(g, 1.0);
  f(3, 3) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(require_finite(f, "f"), Error);
}

TEST_CASE("grid too small for stencils") {
  // Grid2 itself enforces >= 9 nodes, which is above the stencil minimum,
  // so diff succeeds on any constructible grid.
  Grid2 g = unit_grid(9);
  RealField f(g, 1.0);
  CHECK_NOTHROW(diff(f, DiffAxis::uu));
}

TEST_CASE("parallel kernels match the serial reference bit for bit") {
  Grid2 g = unit_grid(129);
  RealField f = sample(g, *parse_expr("sin(3*u)*exp(v) + u*v^2"));
  for (DiffAxis a : {DiffAxis::u, DiffAxis::v, DiffAxis::uu, DiffAxis::vv,
                     DiffAxis::uv}) {
    RealField p = diff(f, a);
    RealField s = ref::diff(f, a);
    for (long k = 0; k < g.size(); ++k) CHECK(p[k] == s[k]);
  }
  ComplexField pz = complex_diff(f, CDiffAxis::z);
  ComplexField sz = ref::complex_diff(f, CDiffAxis::z);
  for (long k = 0; k < g.size(); ++k) CHECK(pz[k] == sz[k]);
}

TEST_CASE("csv dump carries header and node-major layout") {
  Grid2 g = unit_grid(9);
  RealField f = sample(g, *parse_expr("u + 10*v"));
  std::string csv = to_csv(f, "f");
  CHECK(csv.rfind("i,j,u,v,f\n", 0) == 0);
  CHECK(csv.find("\n1,0,") != std::string::npos);
}
