#pragma once

#include <cmath>

#include "scf/errors.hpp"

namespace scf {

/// Second-order jet of a function of (u, v): value plus all partial
/// derivatives up to order two. The mixed slot duv doubles as dvu.
struct Jet2 {
  double v = 0.0;
  double du = 0.0;
  double dv = 0.0;
  double duu = 0.0;
  double duv = 0.0;
  double dvv = 0.0;

  static Jet2 constant(double c) { return {c, 0, 0, 0, 0, 0}; }
  static Jet2 var_u(double u) { return {u, 1, 0, 0, 0, 0}; }
  static Jet2 var_v(double v) { return {v, 0, 1, 0, 0, 0}; }

  bool finite() const {
    return std::isfinite(v) && std::isfinite(du) && std::isfinite(dv) &&
           std::isfinite(duu) && std::isfinite(duv) && std::isfinite(dvv);
  }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.v + b.v,     a.du + b.du,   a.dv + b.dv,
          a.duu + b.duu, a.duv + b.duv, a.dvv + b.dvv};
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.v - b.v,     a.du - b.du,   a.dv - b.dv,
          a.duu - b.duu, a.duv - b.duv, a.dvv - b.dvv};
}

inline Jet2 operator-(const Jet2& a) {
  return {-a.v, -a.du, -a.dv, -a.duu, -a.duv, -a.dvv};
}

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v * b.v;
  r.du = a.du * b.v + a.v * b.du;
  r.dv = a.dv * b.v + a.v * b.dv;
  r.duu = a.duu * b.v + 2.0 * a.du * b.du + a.v * b.duu;
  r.duv = a.duv * b.v + a.du * b.dv + a.dv * b.du + a.v * b.duv;
  r.dvv = a.dvv * b.v + 2.0 * a.dv * b.dv + a.v * b.dvv;
  return r;
}

inline Jet2 operator*(double s, const Jet2& a) {
  return {s * a.v, s * a.du, s * a.dv, s * a.duu, s * a.duv, s * a.dvv};
}

/// Chain rule for a scalar function with derivatives f', f'' at a.v.
inline Jet2 jet_chain(const Jet2& a, double f, double fp, double fpp) {
  Jet2 r;
  r.v = f;
  r.du = fp * a.du;
  r.dv = fp * a.dv;
  r.duu = fpp * a.du * a.du + fp * a.duu;
  r.duv = fpp * a.du * a.dv + fp * a.duv;
  r.dvv = fpp * a.dv * a.dv + fp * a.dvv;
  return r;
}

inline Jet2 jet_recip(const Jet2& a) {
  if (a.v == 0.0) fail(errc::domain_error, "division by zero");
  double iv = 1.0 / a.v;
  return jet_chain(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * jet_recip(b); }

inline Jet2 jet_sin(const Jet2& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  return jet_chain(a, s, c, -s);
}

inline Jet2 jet_cos(const Jet2& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  return jet_chain(a, c, -s, -c);
}

inline Jet2 jet_exp(const Jet2& a) {
  double e = std::exp(a.v);
  return jet_chain(a, e, e, e);
}

inline Jet2 jet_log(const Jet2& a) {
  if (!(a.v > 0.0)) fail(errc::domain_error, "log of non-positive value");
  double iv = 1.0 / a.v;
  return jet_chain(a, std::log(a.v), iv, -iv * iv);
}

inline Jet2 jet_sqrt(const Jet2& a) {
  if (!(a.v > 0.0)) fail(errc::domain_error, "sqrt of non-positive value");
  double s = std::sqrt(a.v);
  return jet_chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

/// Integer power, valid for any base (including negative and zero for k>=0).
inline Jet2 jet_powi(const Jet2& a, long k) {
  if (k == 0) return Jet2::constant(1.0);
  if (k < 0) return jet_recip(jet_powi(a, -k));
  Jet2 r = a;
  for (long i = 1; i < k; ++i) r = r * a;
  return r;
}

/// General power a^b = exp(b log a); requires a positive base.
inline Jet2 jet_pow(const Jet2& a, const Jet2& b) {
  return jet_exp(b * jet_log(a));
}

}  // namespace scf
