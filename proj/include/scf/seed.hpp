#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scf/expr.hpp"
#include "scf/grid.hpp"

namespace scf {

enum class PairKind { hyperbolic, elliptic };

inline const char* kind_name(PairKind k) {
  return k == PairKind::hyperbolic ? "hyperbolic" : "elliptic";
}

enum class PhiSource { analytic, goursat, dirichlet };

/// Recipe for one solution of the seed equation: either a closed form, or
/// data for one of the two solvers. An optional additive perturbation term
/// models a corrupted input.
struct PhiSpec {
  PhiSource source = PhiSource::analytic;
  ExprPtr expr;      // analytic
  ExprPtr a, b;      // goursat data on v = v0 and u = u0
  ExprPtr boundary;  // dirichlet data
  ExprPtr perturb;   // optional corruption, added to the solution
};

struct SeedSpec {
  std::string name;
  PairKind kind = PairKind::hyperbolic;
  int n = 3;
  double u0 = 0, u1 = 1, v0 = 0, v1 = 1;
  ExprPtr m_expr;
  std::vector<PhiSpec> phi;  // n+2 entries; [0] is the support component
  ExprPtr gamma_perturb;     // optional corruption of the support function
};

/// The data of a two-parameter family of affine hyperplanes: M and the n+2
/// solutions of the seed equation on a common grid.
struct EnvelopeSeed {
  PairKind kind = PairKind::hyperbolic;
  int n = 3;
  RealField m;
  std::vector<RealField> phi;        // n+2 fields
  std::vector<PhiSource> provenance;
  std::vector<ExprPtr> exprs;        // per phi; null when solver-made
  ExprPtr gamma_perturb;
  std::string name;
};

/// Marches the characteristic problem for the hyperbolic seed equation with
/// data a on v = v0 and b on u = u0. The corner update is the trapezoidal
/// rule for the cell integral, solved for the unknown corner (the update is
/// linear, no iteration).
///
/// refine_passes > 0 adds deferred-correction sweeps: the cell truncation is
/// estimated from the previous pass with second-order differences and fed
/// back, lifting the observed order from 2 to ~4. Pass 0 is the plain
/// trapezoidal scheme.
RealField goursat_solve(const RealField& m, const Expr& a, const Expr& b,
                        int refine_passes = 1);

/// Dirichlet solve of the elliptic seed equation (five-point Laplacian plus
/// 4M) on the rectangle; direct sparse factorization.
RealField helmholtz_solve(const RealField& m, const Expr& boundary);

struct PdeResidual {
  std::vector<double> per_phi;      // normalized residual per phi
  std::vector<double> per_phi_fd;   // finite-difference route (always filled)
  double worst = 0;
  double worst_fd = 0;
};

/// Residual of the seed equation per phi, normalized by max|phi|. Analytic
/// entries are differentiated exactly; solver entries via grid stencils.
/// per_phi_fd carries the stencil route for every entry.
PdeResidual pde_residual(const EnvelopeSeed& seed);

/// Normalized size of the mixed conjugate derivative of ||phi||^2; zero
/// characterizes the continuous class.
double continuous_class_test(const EnvelopeSeed& seed);

/// Gauss pair (g, gamma) with a derivative bundle: when the seed is
/// analytic, all first and second derivatives of h = i(g) and gamma are
/// exact jets; otherwise they are grid stencils. Metric scalars and their
/// first derivatives are assembled algebraically from the bundle.
struct GaussPair {
  PairKind kind = PairKind::hyperbolic;
  int n = 3;
  VecField h;
  RealField gamma;
  VecField hu, hv, huu, huv, hvv;
  RealField gamma_u, gamma_v, gamma_uu, gamma_uv, gamma_vv;
  RealField E, F, G;
  RealField Eu, Ev, Fu, Fv, Gu, Gv;
  bool exact_derivatives = false;
  Mask immersed;
  double min_det_rel = 0;   // min of (EG - F^2)/(E + G)^2
  double max_norm_dev = 0;  // max deviation of ||g|| from 1
  double immersed_fraction = 0;
};

/// Immersion guard: nodes need EG - F^2 > immersion_tol * (E + G)^2.
GaussPair extract_pair(const EnvelopeSeed& seed, double immersion_tol = 1e-8,
                       double min_coverage = 0.75);

EnvelopeSeed build_seed(const SeedSpec& spec, const Grid2& grid);

/// Reference seeds used across tests: a hyperbolic and an elliptic analytic
/// seed on the unit square with n = 3.
SeedSpec reference_seed_h1();
SeedSpec reference_seed_e1();
/// Separated-variables seed whose hyperplane family yields a continuous-class
/// (first species) surface; used as a negative control.
SeedSpec first_species_seed();

}  // namespace scf
