#pragma once

#include "scf/hyper.hpp"

namespace scf {

/// The bending data on the cross-section: the scalar sigma, the symmetric
/// tensor B (2x2 on the horizontal plane in the e-basis, zero on the fibers),
/// the integrated ambient field T and its derivative state W.
///
/// W is the ambient skew matrix acting as the differential of T:
/// W f_*X = T_*X and W N = f_* of the tangent companion field. Storing the
/// skew matrix makes the first-order isometry identity exact; the tangential
/// part and the companion field of the report are views of W.
struct BendingField {
  RealField sigma;
  double sigma_path_res = 0;  // mismatch of the two sweep orders (log scale)

  MatField b2;        // 2x2 in the e-basis
  VecField b_xu, b_xv;  // ambient images of B applied to the coordinate dirs
  double b_scale = 0;
  double wedge_res = 0;       // mixed-determinant identity, normalized
  double sym_compat_res = 0;  // ||A J - (A J)^T|| over ||A J||
  double codazzi_res = 0;     // curl of the ambient B images, tangential part

  VecField t_field;   // bending field on the section
  MatField w_state;   // (n+1)x(n+1) skew matrix per node
  double path_res = 0;     // transposed-sweep mismatch of (T, W), relative
  double eq1_res = 0;      // skew defect of the stored state (rounding level)
  double eq1_fd_res = 0;   // stencil route of the bending identity
  double roundtrip_res = 0;  // B re-extracted from T versus the input B
};

/// Positive integrating factor of the linearized deformation system, one at
/// the origin node; the 1-form is integrated with fourth-order prefix
/// quadrature along grid lines and the two sweep orders are compared.
RealField sigma_field(const Hypersurface& h, double* path_res);

/// B = sigma * sym(A J) in the e-basis; throws ContractViolation when the
/// construction violates its identities (trivial B, wedge identity, span
/// compatibility).
MatField build_b(const Hypersurface& h, const SplitData& s, const RealField& sigma,
                 double* wedge_res, double* sym_res);

/// Normalized mixed-determinant identity residual for a candidate 2x2 field.
double wedge_residual(const Hypersurface& h, const MatField& b2);

/// Full bending computation: sigma, B, contract checks, and the two-stage
/// marching of (T, W) from zero initial state at the origin node.
BendingField compute_bending(const Hypersurface& h, const SplitData& s,
                             const Thresholds& thr);

/// Re-extracts the B form from an integrated bending by stencil
/// differentiation; used for the round-trip contract.
MatField extract_b(const Hypersurface& h, const VecField& t_field,
                   const MatField& w_state);

/// Bending field extended to a fiber offset: T(x, w) = T(x) + W(x) (w lift).
VecField extend_fibers(const Hypersurface& h, const BendingField& bf, double w);

/// Stencil-route residual of the first-order isometry identity at a fiber
/// offset (w = 0 gives the base residual).
double bending_identity_fd(const Hypersurface& h, const BendingField& bf, double w);

/// Re-integrates with a caller-supplied initial state; the difference from
/// the zero-gauge solution must be the variational field of a rigid motion.
struct GaugeCheck {
  double misfit = 0;      // relative residual of the rigid-motion fit
  double w_drift = 0;     // max ||W - W0|| over the grid
};
GaugeCheck gauge_uniqueness(const Hypersurface& h, const BendingField& bf,
                            const Eigen::MatrixXd& w0, const Eigen::VectorXd& t0);

}  // namespace scf
