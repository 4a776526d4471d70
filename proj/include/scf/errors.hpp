#pragma once

#include <stdexcept>
#include <string>

namespace scf {

enum class errc {
  syntax_error,
  unknown_identifier,
  domain_error,
  grid_too_small,
  incompatible_corner,
  singular_operator,
  not_immersed,
  degenerate_metric,
  denominator_degenerate,
  frame_degenerate,
  singular_point,
  frame_discontinuity,
  rank_deviation,
  span_violation,
  all_proportional_to_identity,
  contract_violation,
  path_dependence,
  not_special_pair,
  minimal_surface_guard,
  eigen_degeneracy,
  type_flip,
  leaf_constancy_violation,
  certificate_failure,
  config_error,
};

const char* errc_name(errc c);

/// Library error: carries a code plus a human-readable context string.
class Error : public std::runtime_error {
public:
  Error(errc code, std::string message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
  throw Error(code, message);
}

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::syntax_error: return "SyntaxError";
    case errc::unknown_identifier: return "UnknownIdentifier";
    case errc::domain_error: return "DomainError";
    case errc::grid_too_small: return "GridTooSmall";
    case errc::incompatible_corner: return "IncompatibleCorner";
    case errc::singular_operator: return "SingularOperator";
    case errc::not_immersed: return "NotImmersed";
    case errc::degenerate_metric: return "DegenerateMetric";
    case errc::denominator_degenerate: return "DenominatorDegenerate";
    case errc::frame_degenerate: return "FrameDegenerate";
    case errc::singular_point: return "SingularPoint";
    case errc::frame_discontinuity: return "FrameDiscontinuity";
    case errc::rank_deviation: return "RankDeviation";
    case errc::span_violation: return "SpanViolation";
    case errc::all_proportional_to_identity: return "AllProportionalToIdentity";
    case errc::contract_violation: return "ContractViolation";
    case errc::path_dependence: return "PathDependence";
    case errc::not_special_pair: return "NotSpecialPair";
    case errc::minimal_surface_guard: return "MinimalSurfaceGuard";
    case errc::eigen_degeneracy: return "EigenDegeneracy";
    case errc::type_flip: return "TypeFlip";
    case errc::leaf_constancy_violation: return "LeafConstancyViolation";
    case errc::certificate_failure: return "CertificateFailure";
    case errc::config_error: return "ConfigError";
  }
  return "Error";
}

}  // namespace scf
