#include "doctest.h"

#include "scf/classify.hpp"
#include "support/testutil.hpp"

using namespace scf;
using scf::test::unit_grid;

namespace {

ChristoffelReal synthetic_real(const Grid2& g, const Expr& e1, const Expr& e2) {
  ChristoffelReal c;
  c.gamma1 = RealField::build(g, [&](int i, int j) { return e1.eval(g.u(i), g.v(j)); });
  c.gamma2 = RealField::build(g, [&](int i, int j) { return e2.eval(g.u(i), g.v(j)); });
  c.F = RealField(g, 0.0);
  c.g1_11 = RealField(g, 0.0);
  c.g2_11 = RealField(g, 0.0);
  c.g1_22 = RealField(g, 0.0);
  c.g2_22 = RealField(g, 0.0);
  c.guarded = Mask(g, 1);
  return c;
}

}  // namespace

TEST_CASE("special pair residual on synthetic symbols") {
  Grid2 g = unit_grid(65);
  // gamma1 = u gives d_u gamma1 = 1 against d_v gamma2 = 0
  ChristoffelReal c = synthetic_real(g, *parse_expr("u"), *parse_expr("0"));
  CHECK(special_pair_residual(c) == doctest::Approx(1.0).epsilon(1e-9));

  // symbols of a genuine special pair: gamma1 = v, gamma2 = u has
  // d_u gamma1 = 0 = d_v gamma2? no: d_u(v)=0 and d_v(u)=0.
  ChristoffelReal c2 = synthetic_real(g, *parse_expr("v"), *parse_expr("u"));
  CHECK(special_pair_residual(c2) < 1e-12);
}

TEST_CASE("first species residual vanishes on the closed-form solution") {
  Grid2 g = unit_grid(65);
  // gamma1 = gamma2 = -1/(2(u+v+1)) satisfies the first-species identities
  ChristoffelReal c = synthetic_real(g, *parse_expr("-1/(2*(u + v + 1))"),
                                     *parse_expr("-1/(2*(u + v + 1))"));
  CHECK(first_species_residual(c) < 100 * g.hu * g.hu);

  // zero symbols are trivially first species
  ChristoffelReal z = synthetic_real(g, *parse_expr("0"), *parse_expr("0"));
  CHECK(first_species_residual(z) == 0.0);
}

TEST_CASE("tau with exactly vanishing defect is denominator-degenerate") {
  Grid2 g = unit_grid(33);
  Thresholds thr;
  ChristoffelReal z = synthetic_real(g, *parse_expr("0"), *parse_expr("0"));
  CHECK_THROWS_AS(tau_coordinate(z, thr), Error);
}

TEST_CASE("rho with exactly vanishing defect is denominator-degenerate") {
  Grid2 g = unit_grid(33);
  Thresholds thr;
  ChristoffelComplex c;
  c.gamma = ComplexField(g, cplx(0, 0));
  c.fz = RealField(g, 0.5);
  c.guarded = Mask(g, 1);
  CHECK_THROWS_AS(rho_coordinate(c, thr), Error);
}

TEST_CASE("corrupted symbols raise the tau system residual by an order") {
  Grid2 g = unit_grid(129);
  Thresholds thr;
  // a second-species synthetic: gamma1 = u, gamma2 = v (defect fields differ)
  ChristoffelReal c = synthetic_real(g, *parse_expr("u + v^2"), *parse_expr("v"));
  TauField t = tau_coordinate(c, thr);
  ChristoffelReal bad = c;
  for (long k = 0; k < g.size(); ++k) {
    int i = static_cast<int>(k % g.nu);
    bad.gamma1[k] += 0.01 * g.u(i);
  }
  TauField tb = tau_coordinate(bad, thr);
  CHECK(tb.sys_res_u + tb.sys_res_v > 5.0 * (t.sys_res_u + t.sys_res_v));
}

TEST_CASE("classify reference seeds at t = 0: special pair, not second species") {
  Thresholds thr;
  GaussPair ph = extract_pair(build_seed(reference_seed_h1(), unit_grid(129)));
  SpeciesReport rh = classify_pair(ph, thr);
  CHECK(rh.special_pair_res < thr.ceiling(rh.h));
  CHECK(rh.first_species_res > thr.species_floor);
  CHECK(rh.verdict == SpeciesVerdict::undetermined);
  // tau exists and hugs 1
  CHECK(rh.tau.guarded_fraction > 0.99);
  CHECK(rh.tau.tau_min > 0.9);
  CHECK(rh.tau.tau_max < 1.1);
  CHECK(rh.tau.margin_fraction < 0.01);

  GaussPair pe = extract_pair(build_seed(reference_seed_e1(), unit_grid(129)));
  SpeciesReport re = classify_pair(pe, thr);
  CHECK(re.special_pair_res < thr.ceiling(re.h));
  CHECK(re.first_species_res > thr.species_floor);
  CHECK(re.verdict == SpeciesVerdict::undetermined);
  CHECK(re.rho.max_mod_dev < 1e-12);
  CHECK(re.rho.margin_fraction < 0.01);
}

TEST_CASE("first-species seed classifies as continuous class") {
  Thresholds thr;
  GaussPair p = extract_pair(build_seed(first_species_seed(), unit_grid(65)));
  SpeciesReport r = classify_pair(p, thr);
  CHECK(r.verdict == SpeciesVerdict::first_species);
  CHECK(r.first_species_res < thr.species_floor);
  // special-pair condition also holds for this seed
  CHECK(r.special_pair_res < thr.ceiling(r.h));
}

TEST_CASE("frame lambdas vanish on a flat synthetic patch") {
  Grid2 g = unit_grid(33);
  VecField plane(g, 4);
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i)
      plane.at(i, j) << g.u(i), g.v(j), 1.0, 0.0;
  GaussPair p = pair_from_sphere_field(plane, PairKind::hyperbolic);
  VecField U(g, 2), V(g, 2);
  for (long k = 0; k < g.size(); ++k) {
    U.at(k) << 1.0, 0.0;
    V.at(k) << 0.0, 1.0;
  }
  FrameData fd = frame_lambdas(p, U, V, PairKind::hyperbolic);
  CHECK(max_abs(fd.extract_res) < 1e-10);
  double lmax = 0;
  for (long k = 0; k < g.size(); ++k)
    lmax = std::max({lmax, std::abs(fd.lam1[k]), std::abs(fd.lam2[k])});
  CHECK(lmax < 1e-10);
  CHECK(fd.unit_dev < 1e-12);

  Thresholds thr;
  FrameSpecies fs = frame_species(p, fd, thr);
  CHECK(fs.first_species_res == 0.0);
  CHECK_FALSE(fs.second_species);
}

TEST_CASE("verdict names") {
  CHECK(std::string(verdict_name(SpeciesVerdict::first_species)) ==
        "first-species (continuous class)");
  CHECK(std::string(verdict_name(SpeciesVerdict::second_species)) ==
        "second-species (discrete class)");
}
