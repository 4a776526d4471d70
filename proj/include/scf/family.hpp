#pragma once

#include "scf/bending.hpp"

namespace scf {

struct FamilyInputs {
  const Hypersurface& h;
  const SplitData& split;
  const BendingField& bend;
  Thresholds thr;
};

/// Data of the deformed immersion at one parameter value: its Gauss surface
/// on the shared quotient, the fiber-direction invariance residuals, and the
/// deformed splitting structure.
struct DeformedSurface {
  double t = 0;
  VecField n_t;   // unit normal on the section, oriented towards the base normal
  GaussPair gt;   // stencil bundle of the deformed Gauss surface
  MatField jbar;  // deformed structure tensor in the coordinate basis
  Mask valid;
  PairKind type = PairKind::hyperbolic;
  double type_fraction = 0;
  double j_fit_res = 0;
  double immersion_margin = 0;     // min sigma_min/sigma_max of the differential
  double metric_identity_res = 0;  // first-order isometry identity, relative
  double nullity_res = 0;          // fiber-direction derivative of N_t, relative
  double decomp_res = 0;           // normal-decomposition identity residual
  double orient_min = 0;           // min <N_t, N>
  double gt_drift = 0;             // max |g_t - g|
};

DeformedSurface deform_surface(const FamilyInputs& in, double t);

/// Unit tangent frames adapted to the deformed structure tensor (eigenframe
/// for the involutive kind, rotation frame for the complex kind).
struct FrameResult {
  VecField U, V;
  double unit_dev = 0;
  double disc_min = 0;    // complex kind: minimum of the frame quadratic
                          // discriminant relative to its scale
  double minimality = 0;  // mean-curvature floor of the deformed surface
};

FrameResult unit_frames(const FamilyInputs& in, const DeformedSurface& ds);

/// One row of the certificate: all residuals and margins at one parameter
/// value, with the deformed-vs-opposite comparison.
struct DeformRow {
  double t = 0;
  double immersion_margin = 0;
  double metric_identity_res = 0;
  double metric_pair_res = 0;
  double nullity_res = 0;
  double decomp_res = 0;
  double orient_min = 0;
  const char* j_type = "";
  double j_type_fraction = 0;
  double special_res = 0;
  double first_species_res = 0;
  TauField tau;
  RhoField rho;
  double frame_unit_dev = 0;
  double disc_min = 0;
  double minimality = 0;
  double congruence_c = 0;   // observed separation constant
  bool second_species = false;
  std::string failures;      // comma-separated failing clauses, empty = pass
};

struct DeformationCertificate {
  std::vector<DeformRow> rows;
  double t_max = 0;
  double b_scale = 0;
  bool pass = false;
  std::string verdict;
  Thresholds thresholds;
  int grid_n = 0;
};

/// Scale guard for the deformation parameter.
double compute_t_max(const Hypersurface& h, const BendingField& bf, double cap);

/// Runs the full per-t verification over fractions of t_max (plus the t = 0
/// row) and assembles the verdict.
DeformationCertificate certify(const FamilyInputs& in,
                               const std::vector<double>& fractions);

}  // namespace scf
