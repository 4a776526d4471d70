#pragma once

#include "scf/surfgeo.hpp"

namespace scf {

enum class SpeciesVerdict {
  first_species,
  second_species,
  surface_like_warning,
  undetermined,
};

inline const char* verdict_name(SpeciesVerdict v) {
  switch (v) {
    case SpeciesVerdict::first_species: return "first-species (continuous class)";
    case SpeciesVerdict::second_species: return "second-species (discrete class)";
    case SpeciesVerdict::surface_like_warning: return "ruled/surface-like-warning";
    case SpeciesVerdict::undetermined: return "undetermined";
  }
  return "?";
}

/// All floors, ceilings and guards used by the decision logic. Ceilings for
/// "residual ~ 0" scale as ceil_c * h^2; the constants were fixed against the
/// trivial synthetic inputs so that at 257^2 a passing residual sits well
/// below every floor.
struct Thresholds {
  double species_floor = 1e-2;    // "bounded away from zero", normalized
  double ceil_c = 100.0;          // ceiling = ceil_c * h^2
  double sys_ceil_c = 2000.0;     // ceiling for the tau/rho evolution systems
  double guard_rel = 1e-6;        // denominator guard vs field scale
  double coverage = 0.75;         // guarded fraction a verdict needs
  double margin = 0.05;           // |tau - 1| resp. |Im rho| margin
  double margin_coverage = 0.75;  // fraction of guarded nodes above margin
  double minimality_floor = 1e-3;
  double metric_pair_tol = 1e-10;
  double eq1_tol = 1e-6;
  double path_tol = 1e-6;
  double b_oracle_tol = 1e-3;
  double congruence_c = 0.5;      // separation >= c * |t| * ||B||
  double t_fraction_cap = 0.1;    // t_max * ||T||_inf <= cap * diam(f)

  double ceiling(double h) const { return ceil_c * h * h; }
  // the tau/rho systems differentiate fields that already carry the
  // integrability-defect ratio; their stencil floor has a larger constant
  double sys_ceiling(double h) const { return sys_ceil_c * h * h; }
};

/// Deformation-parameter field of the hyperbolic coordinate route, with the
/// residuals of its defining first-order system.
struct TauField {
  RealField tau;
  RealField theta;  // sqrt(tau) where defined
  Mask guarded;
  double guarded_fraction = 0;
  double sys_res_u = 0, sys_res_v = 0;  // normalized, interior
  double tau_min = 0, tau_max = 0;      // over guarded interior
  double margin_fraction = 0;           // |tau-1| >= margin among guarded
  double one_margin = 0;                // min |tau-1|
};

/// Unit-modulus deformation parameter of the elliptic coordinate route.
struct RhoField {
  ComplexField rho;
  RealField theta;  // argument of rho
  Mask guarded;
  double guarded_fraction = 0;
  double sys_res = 0;          // residual of the conjugate-evolution equation
  double min_abs_im = 0;       // non-reality margin over guarded interior
  double margin_fraction = 0;  // |Im rho| >= margin among guarded
  double max_mod_dev = 0;      // deviation of |rho| from 1
};

struct SpeciesReport {
  PairKind kind = PairKind::hyperbolic;
  double special_pair_res = 0;
  double first_species_res = 0;
  TauField tau;
  RhoField rho;
  SpeciesVerdict verdict = SpeciesVerdict::undetermined;
  std::string note;
  double h = 0;
  Thresholds thresholds;
};

double special_pair_residual(const ChristoffelReal& c);
double special_pair_residual(const ChristoffelComplex& c);
double first_species_residual(const ChristoffelReal& c);
double first_species_residual(const ChristoffelComplex& c);

TauField tau_coordinate(const ChristoffelReal& c, const Thresholds& thr);
RhoField rho_coordinate(const ChristoffelComplex& c, const Thresholds& thr);

/// Full coordinate-route species decision for the Gauss surface of the seed.
SpeciesReport classify_pair(const GaussPair& p, const Thresholds& thr);

/// Frame data on a surface: a tangent frame (coefficients in the coordinate
/// basis), its metric pairing, and the connection coefficients extracted from
/// the covariant derivatives of the frame.
struct FrameData {
  PairKind kind = PairKind::hyperbolic;
  VecField U, V;      // dim-2 coefficient fields
  RealField pairing;  // <U,V> (hyperbolic route)
  // hyperbolic: lam1/lam2 real (imag parts zero); elliptic: complex
  ComplexField lam1, lam2;
  RealField extract_res;  // structure residual of the extraction
  Mask guarded;
  double unit_dev = 0;  // max deviation of ||U||, ||V|| from 1
};

FrameData frame_lambdas(const GaussPair& surf, const VecField& U,
                        const VecField& V, PairKind kind);

/// Same decision data as the coordinate route, produced from FrameData.
struct FrameSpecies {
  double special_pair_res = 0;
  double first_species_res = 0;
  TauField tau;    // hyperbolic
  RhoField rho;    // elliptic
  bool second_species = false;
  std::string note;
};

FrameSpecies frame_species(const GaussPair& surf, const FrameData& fd,
                           const Thresholds& thr);

/// Directional derivative X(s) for a coefficient field X in the coordinate
/// basis.
RealField directional(const VecField& X, const RealField& s);
ComplexField directional(const VecField& X, const ComplexField& s);

}  // namespace scf
