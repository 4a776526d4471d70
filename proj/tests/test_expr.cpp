#include "doctest.h"

#include <random>

#include "scf/errors.hpp"
#include "scf/expr.hpp"
#include "support/testutil.hpp"

using namespace scf;
using scf::test::approx;
using scf::test::Poly4;

TEST_CASE("parser accepts the grammar and rejects juxtaposition") {
  CHECK(parse_expr("sin(u)*exp(v)")->kind == Expr::Kind::mul);
  CHECK(parse_expr("u^2 + 2*u*v")->kind == Expr::Kind::add);
  CHECK_THROWS_AS(parse_expr("2u"), Error);
  CHECK_THROWS_AS(parse_expr(""), Error);
  CHECK_THROWS_AS(parse_expr("u +"), Error);
  CHECK_THROWS_AS(parse_expr("(u"), Error);
  CHECK_THROWS_AS(parse_expr("w + 1"), Error);
  CHECK_THROWS_AS(parse_expr("foo(u)"), Error);

  try {
    parse_expr("u * #");
  } catch (const Error& e) {
    CHECK(e.code() == errc::syntax_error);
    CHECK(std::string(e.what()).find("position") != std::string::npos);
  }
}

TEST_CASE("precedence and associativity") {
  // 1 + 2*3^2 = 19
  CHECK(parse_expr("1 + 2*3^2")->eval(0, 0) == doctest::Approx(19.0));
  // right-assoc power: 2^3^2 = 512
  CHECK(parse_expr("2^3^2")->eval(0, 0) == doctest::Approx(512.0));
  CHECK(parse_expr("-u^2")->eval(3, 0) == doctest::Approx(-9.0));
  CHECK(parse_expr("(-u)^2")->eval(3, 0) == doctest::Approx(9.0));
  CHECK(parse_expr("pi")->eval(0, 0) == doctest::Approx(M_PI));
}

TEST_CASE("print then parse round-trips the tree") {
  const char* sources[] = {
      "sin(u)*exp(v)", "u^2 + 2*u*v", "-u/(v + 3)", "sqrt(u + 2)^(v/2)",
      "log(exp(u)) - cos(v)*sin(u + v)"};
  for (const char* s : sources) {
    ExprPtr e = parse_expr(s);
    ExprPtr r = parse_expr(e->print());
    CHECK(e->same_structure(*r));
  }
}

TEST_CASE("jet values on pinned cases") {
  // product rule
  Jet2 j = parse_expr("u*v")->eval_jet(2, 3);
  CHECK(j.v == doctest::Approx(6));
  CHECK(j.du == doctest::Approx(3));
  CHECK(j.dv == doctest::Approx(2));
  CHECK(j.duv == doctest::Approx(1));
  CHECK(j.duu == doctest::Approx(0));

  j = parse_expr("sin(u)")->eval_jet(0, 0.77);
  CHECK(j.v == doctest::Approx(0));
  CHECK(j.du == doctest::Approx(1));
  CHECK(j.duu == doctest::Approx(0));

  j = parse_expr("exp(u + v)")->eval_jet(0, 0);
  CHECK(j.v == doctest::Approx(1));
  CHECK(j.du == doctest::Approx(1));
  CHECK(j.dv == doctest::Approx(1));
  CHECK(j.duu == doctest::Approx(1));
  CHECK(j.duv == doctest::Approx(1));
  CHECK(j.dvv == doctest::Approx(1));
}

TEST_CASE("domain errors instead of silent non-finite values") {
  CHECK_THROWS_AS(parse_expr("1/u")->eval_jet(0, 0), Error);
  CHECK_THROWS_AS(parse_expr("log(u)")->eval_jet(-1, 0), Error);
  CHECK_THROWS_AS(parse_expr("log(u)")->eval_jet(0, 0), Error);
  CHECK_THROWS_AS(parse_expr("sqrt(u)")->eval_jet(-2, 0), Error);
  CHECK_THROWS_AS(parse_expr("u^v")->eval_jet(-2.0, 0.5), Error);
  // integer powers of negative bases are fine
  CHECK(parse_expr("u^3")->eval_jet(-2, 0).v == doctest::Approx(-8));
  CHECK(parse_expr("u^(-2)")->eval_jet(-2, 0).v == doctest::Approx(0.25));
}

TEST_CASE("jets match symbolically differentiated random polynomials") {
  std::mt19937 rng(20240811);
  for (int trial = 0; trial < 25; ++trial) {
    Poly4 p = Poly4::random(rng);
    ExprPtr e = parse_expr(p.print());
    Poly4 pu = p.du(), pv = p.dv();
    Poly4 puu = pu.du(), puv = pu.dv(), pvv = pv.dv();
    std::uniform_real_distribution<double> pts(-1.5, 1.5);
    for (int s = 0; s < 8; ++s) {
      double u = pts(rng), v = pts(rng);
      Jet2 j = e->eval_jet(u, v);
      CHECK(approx(j.v, p.eval(u, v), 1e-12));
      CHECK(approx(j.du, pu.eval(u, v), 1e-12));
      CHECK(approx(j.dv, pv.eval(u, v), 1e-12));
      CHECK(approx(j.duu, puu.eval(u, v), 1e-12));
      CHECK(approx(j.duv, puv.eval(u, v), 1e-12));
      CHECK(approx(j.dvv, pvv.eval(u, v), 1e-12));
    }
  }
}

TEST_CASE("jet evaluation is linear") {
  std::mt19937 rng(7);
  ExprPtr e1 = parse_expr("sin(u)*exp(v) + u^3");
  ExprPtr e2 = parse_expr("cos(u + v)/(2 + u^2)");
  std::uniform_real_distribution<double> pts(-1.0, 1.0);
  for (int s = 0; s < 10; ++s) {
    double u = pts(rng), v = pts(rng), a = pts(rng) * 3;
    char buf[256];
    snprintf(buf, sizeof(buf), "%.17g*(sin(u)*exp(v) + u^3) + cos(u + v)/(2 + u^2)", a);
    Jet2 lhs = parse_expr(buf)->eval_jet(u, v);
    Jet2 j1 = e1->eval_jet(u, v);
    Jet2 j2 = e2->eval_jet(u, v);
    Jet2 rhs = a * j1 + j2;
    CHECK(approx(lhs.v, rhs.v, 1e-12));
    CHECK(approx(lhs.du, rhs.du, 1e-12));
    CHECK(approx(lhs.duv, rhs.duv, 1e-12));
    CHECK(approx(lhs.dvv, rhs.dvv, 1e-12));
  }
}
