#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "scf/expr.hpp"
#include "scf/grid.hpp"

namespace scf::test {

inline bool approx(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline Grid2 unit_grid(int n) { return Grid2(0, 1, 0, 1, n, n); }

/// max |field - oracle| over all nodes.
template <class F>
double max_err_vs(const RealField& f, F&& oracle) {
  const Grid2& g = f.grid();
  double worst = 0;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i)
      worst = std::max(worst, std::abs(f(i, j) - oracle(g.u(i), g.v(j))));
  return worst;
}

inline double order_of(double err_coarse, double err_fine) {
  return std::log2(err_coarse / err_fine);
}

/// Dense polynomial in u, v of total degree <= 4, with exact differentiation;
/// independent oracle for the jet evaluator.
struct Poly4 {
  // coef[i][j] multiplies u^i v^j
  double coef[5][5] = {};

  double eval(double u, double v) const {
    double s = 0;
    for (int i = 0; i <= 4; ++i)
      for (int j = 0; j <= 4 - i; ++j)
        s += coef[i][j] * std::pow(u, i) * std::pow(v, j);
    return s;
  }

  Poly4 du() const {
    Poly4 d;
    for (int i = 1; i <= 4; ++i)
      for (int j = 0; j <= 4 - i; ++j) d.coef[i - 1][j] = i * coef[i][j];
    return d;
  }

  Poly4 dv() const {
    Poly4 d;
    for (int i = 0; i <= 4; ++i)
      for (int j = 1; j <= 4 - i; ++j) d.coef[i][j - 1] = j * coef[i][j];
    return d;
  }

  std::string print() const {
    std::string s;
    for (int i = 0; i <= 4; ++i)
      for (int j = 0; j <= 4 - i; ++j) {
        if (coef[i][j] == 0) continue;
        if (!s.empty()) s += " + ";
        char buf[64];
        snprintf(buf, sizeof(buf), "%.17g", coef[i][j]);
        s += buf;
        for (int k = 0; k < i; ++k) s += "*u";
        for (int k = 0; k < j; ++k) s += "*v";
      }
    if (s.empty()) s = "0";
    return s;
  }

  static Poly4 random(std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    Poly4 p;
    for (int i = 0; i <= 4; ++i)
      for (int j = 0; j <= 4 - i; ++j) p.coef[i][j] = dist(rng);
    return p;
  }
};

}  // namespace scf::test
