#pragma once

#include "scf/classify.hpp"
#include "scf/surfgeo.hpp"

namespace scf {

/// Sampled cross-section of the envelope hypersurface, with the unit normal
/// frame of the fibers, the shape data on the horizontal plane, and the
/// regularity certificate. Fiber behavior is affine and handled analytically,
/// so every field lives on the 2D grid.
struct Hypersurface {
  GaussPair pair;
  int n = 3;
  double w_max = 0;

  VecField f0;         // cross-section at w = 0
  VecField f0u, f0v;   // derivatives (jet-exact for analytic seeds)
  std::vector<VecField> xi;   // unit frame of the fiber directions
  std::vector<VecField> xiu, xiv;

  VecField e1, e2;  // orthonormal basis of span{h_u, h_v} (the horizontal plane)
  MatField sx;      // 2x2: e-coordinates of the projected horizontals X_u, X_v
  MatField cx;      // (n-2)x2: xi-coefficients of f0_u, f0_v
  MatField shape;   // 2x2 symmetric shape matrix in the e-basis
  RealField kappa1, kappa2;  // principal curvatures, |kappa1| >= |kappa2|

  Mask regular;  // immersed and full-rank at the sampled fiber offsets
  double regular_fraction = 0;
  double gauss_identity_res = 0;  // stencil-route normal-tangency residual
  double min_curvature_ratio = 0;  // min |kappa2| / max |kappa1| over certified
  bool exact = false;

  const Grid2& grid() const { return f0.grid(); }
};

Hypersurface build_hypersurface(const GaussPair& pair, double w_max,
                                double rank_tol = 1e-6);

/// Hyperplane-family identities at the cross-section and sampled fiber
/// offsets, with the derivative route taken by grid stencils.
struct EnvelopeResiduals {
  double value = 0;  // <phi, psi> - phi_0
  double du = 0;     // <phi_u, psi> - phi_0_u
  double dv = 0;
};

EnvelopeResiduals envelope_check(const Hypersurface& h, const EnvelopeSeed& seed);

/// Splitting data of the fiber distribution: per-direction 2x2 matrices on
/// the horizontal plane, their common traceless direction J, and the type it
/// decides.
struct SplitData {
  std::vector<MatField> c_mats;      // per xi direction, e-basis
  std::vector<RealField> a_coef, b_coef;
  MatField j_e;      // J in the e-basis, normalized so J^2 = +/- I
  MatField j_coord;  // same operator in the coordinate basis of L
  RealField fit_res;
  PairKind type = PairKind::hyperbolic;
  double type_fraction = 0;   // certified nodes agreeing with the majority type
  double fit_res_interior = 0;
  double b_scale = 0;         // largest traceless coefficient seen
  bool surface_like_warning = false;
  Mask valid;
};

SplitData splitting(const Hypersurface& h, double span_ceiling = 1e-2);

/// Shape-contract summary: kernel dimension and conjugacy transfer.
struct ShapeSummary {
  double nullity_res = 0;          // ||A xi|| relative to ||A||
  double conjugacy_res = 0;        // hyperbolic: off-diagonal of A on lifts
  double curvature_product_sign = 0;  // sign of kappa1 * kappa2 (majority)
  double sign_fraction = 0;
};

ShapeSummary shape_summary(const Hypersurface& h);

/// OBJ export of the cross-section (and optional fiber offsets) with an
/// orthogonal projection to 3-space recorded in the header.
std::string to_obj(const Hypersurface& h, const std::vector<double>& w_slices);

}  // namespace scf
