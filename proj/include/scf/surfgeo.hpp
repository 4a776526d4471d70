#pragma once

#include "scf/seed.hpp"

namespace scf {

/// Mixed Christoffel symbols of the conjugate chart plus the full symbol set
/// of the induced metric (needed for the complex combination).
struct ChristoffelReal {
  RealField gamma1, gamma2;  // coefficients of the mixed covariant derivative
  RealField F;               // metric F
  RealField g1_11, g2_11, g1_22, g2_22;
  Mask guarded;              // nodes with a non-degenerate metric
};

struct ChristoffelComplex {
  ComplexField gamma;  // coefficient in the z / zbar frame
  RealField fz;        // bilinear pairing of the z and zbar directions: (E+G)/4
  Mask guarded;
};

struct NormalizedResidual {
  double all = 0;       // max over guarded nodes
  double interior = 0;  // max over guarded nodes with two-node margin
  double scale = 0;     // normalization used
};

ChristoffelReal christoffel_from_metric(const RealField& E, const RealField& F,
                                        const RealField& G, const RealField& Eu,
                                        const RealField& Ev, const RealField& Fu,
                                        const RealField& Fv, const RealField& Gu,
                                        const RealField& Gv, const Mask& immersed);

ChristoffelReal christoffel_real(const GaussPair& p);
ChristoffelComplex christoffel_complex(const GaussPair& p);

/// Residual of the conjugate-net equation satisfied by the coordinates of h,
/// with the derivative terms taken by grid stencils (independent of the
/// symbol construction). Normalized by the max mixed-derivative magnitude.
NormalizedResidual conjugate_residual(const GaussPair& p, const ChristoffelReal& c);
NormalizedResidual conjugate_residual(const GaussPair& p, const ChristoffelComplex& c);

/// Same scalar equation applied to the support function.
NormalizedResidual gamma_residual(const GaussPair& p, const ChristoffelReal& c);
NormalizedResidual gamma_residual(const GaussPair& p, const ChristoffelComplex& c);

/// Second fundamental form of the sphere surface: normal components of the
/// second derivatives of h (normal space = orthogonal complement of
/// span{h, h_u, h_v}), plus the mean-curvature data used by the minimality
/// guard.
struct SecondFF {
  VecField alpha_uu, alpha_uv, alpha_vv;
  RealField mean_norm;        // ||trace_g alpha|| per node
  double mean_floor_rel = 0;  // min interior mean norm / max alpha scale
  double alpha_scale = 0;
};

SecondFF second_fundamental_form(const GaussPair& p);

/// Derivative bundle for a raw sphere-map field through grid stencils;
/// used for the deformed Gauss surfaces. gamma is not meaningful here and is
/// stored as zero.
GaussPair pair_from_sphere_field(const VecField& h, PairKind kind,
                                 double immersion_tol = 1e-8);

}  // namespace scf
