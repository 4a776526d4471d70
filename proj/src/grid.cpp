#include "scf/grid.hpp"

#include <cmath>
#include <sstream>

namespace scf {

namespace {

// Weights of the one-dimensional stencils. d1/d2 = first/second derivative.
// Interior stencils are centered; boundary stencils are one-sided and also
// second order.
template <class T, class Get>
T d1_line(const Get& g, int i, int n, double h) {
  if (i == 0) return (T(-3.0) * g(0) + T(4.0) * g(1) - g(2)) / (2.0 * h);
  if (i == n - 1)
    return (T(3.0) * g(n - 1) - T(4.0) * g(n - 2) + g(n - 3)) / (2.0 * h);
  return (g(i + 1) - g(i - 1)) / (2.0 * h);
}

template <class T, class Get>
T d2_line(const Get& g, int i, int n, double h) {
  if (i == 0)
    return (T(2.0) * g(0) - T(5.0) * g(1) + T(4.0) * g(2) - g(3)) / (h * h);
  if (i == n - 1)
    return (T(2.0) * g(n - 1) - T(5.0) * g(n - 2) + T(4.0) * g(n - 3) - g(n - 4)) /
           (h * h);
  return (g(i + 1) - T(2.0) * g(i) + g(i - 1)) / (h * h);
}

template <class T>
Field<T> diff_scalar(const Field<T>& f, DiffAxis which, bool parallel) {
  const Grid2& g = f.grid();
  if (g.nu < 5 || g.nv < 5)
    fail(errc::grid_too_small, "derivatives need at least 5 nodes per axis");
  if (which == DiffAxis::uv) {
    return diff_scalar(diff_scalar(f, DiffAxis::u, parallel), DiffAxis::v, parallel);
  }
  Field<T> out(g);
  auto kernel = [&](long k) {
    int i = static_cast<int>(k % g.nu);
    int j = static_cast<int>(k / g.nu);
    switch (which) {
      case DiffAxis::u: {
        auto line = [&](int ii) { return f(ii, j); };
        out[k] = d1_line<T>(line, i, g.nu, g.hu);
        break;
      }
      case DiffAxis::v: {
        auto line = [&](int jj) { return f(i, jj); };
        out[k] = d1_line<T>(line, j, g.nv, g.hv);
        break;
      }
      case DiffAxis::uu: {
        auto line = [&](int ii) { return f(ii, j); };
        out[k] = d2_line<T>(line, i, g.nu, g.hu);
        break;
      }
      case DiffAxis::vv: {
        auto line = [&](int jj) { return f(i, jj); };
        out[k] = d2_line<T>(line, j, g.nv, g.hv);
        break;
      }
      case DiffAxis::uv: break;
    }
  };
  if (parallel)
    par::for_index(g.size(), kernel);
  else
    par::for_index_serial(g.size(), kernel);
  return out;
}

template <class S>
VecFieldT<S> diff_vec(const VecFieldT<S>& f, DiffAxis which) {
  const Grid2& g = f.grid();
  if (g.nu < 5 || g.nv < 5)
    fail(errc::grid_too_small, "derivatives need at least 5 nodes per axis");
  if (which == DiffAxis::uv) return diff_vec(diff_vec(f, DiffAxis::u), DiffAxis::v);
  VecFieldT<S> out(g, f.dim());
  const int dim = f.dim();
  par::for_index(g.size(), [&](long k) {
    int i = static_cast<int>(k % g.nu);
    int j = static_cast<int>(k / g.nu);
    for (int c = 0; c < dim; ++c) {
      switch (which) {
        case DiffAxis::u: {
          auto line = [&](int ii) { return f.at(ii, j)(c); };
          out.at(k)(c) = d1_line<S>(line, i, g.nu, g.hu);
          break;
        }
        case DiffAxis::v: {
          auto line = [&](int jj) { return f.at(i, jj)(c); };
          out.at(k)(c) = d1_line<S>(line, j, g.nv, g.hv);
          break;
        }
        case DiffAxis::uu: {
          auto line = [&](int ii) { return f.at(ii, j)(c); };
          out.at(k)(c) = d2_line<S>(line, i, g.nu, g.hu);
          break;
        }
        case DiffAxis::vv: {
          auto line = [&](int jj) { return f.at(i, jj)(c); };
          out.at(k)(c) = d2_line<S>(line, j, g.nv, g.hv);
          break;
        }
        case DiffAxis::uv: break;
      }
    }
  });
  return out;
}

template <class FieldOut, class FieldIn>
FieldOut combine_z(const FieldIn& fu, const FieldIn& fv, CDiffAxis which);

ComplexField combine_z_scalar(const RealField& fu, const RealField& fv,
                              CDiffAxis which) {
  const double s = which == CDiffAxis::z ? -1.0 : 1.0;
  ComplexField out(fu.grid());
  par::for_index(fu.size(), [&](long k) { out[k] = 0.5 * cplx(fu[k], s * fv[k]); });
  return out;
}

ComplexField combine_z_scalar(const ComplexField& fu, const ComplexField& fv,
                              CDiffAxis which) {
  const cplx is(0.0, which == CDiffAxis::z ? -1.0 : 1.0);
  ComplexField out(fu.grid());
  par::for_index(fu.size(), [&](long k) { out[k] = 0.5 * (fu[k] + is * fv[k]); });
  return out;
}

}  // namespace

RealField diff(const RealField& f, DiffAxis which) { return diff_scalar(f, which, true); }
ComplexField diff(const ComplexField& f, DiffAxis which) {
  return diff_scalar(f, which, true);
}
VecField diff(const VecField& f, DiffAxis which) { return diff_vec(f, which); }
CVecField diff(const CVecField& f, DiffAxis which) { return diff_vec(f, which); }

ComplexField complex_diff(const RealField& f, CDiffAxis which) {
  return combine_z_scalar(diff(f, DiffAxis::u), diff(f, DiffAxis::v), which);
}

ComplexField complex_diff(const ComplexField& f, CDiffAxis which) {
  return combine_z_scalar(diff(f, DiffAxis::u), diff(f, DiffAxis::v), which);
}

CVecField complex_diff(const VecField& f, CDiffAxis which) {
  VecField fu = diff(f, DiffAxis::u);
  VecField fv = diff(f, DiffAxis::v);
  const cplx is(0.0, which == CDiffAxis::z ? -1.0 : 1.0);
  CVecField out(f.grid(), f.dim());
  par::for_index(f.grid().size(), [&](long k) {
    for (int c = 0; c < f.dim(); ++c)
      out.at(k)(c) = 0.5 * (cplx(fu.at(k)(c), 0.0) + is * fv.at(k)(c));
  });
  return out;
}

void require_finite(const RealField& f, const std::string& what) {
  for (long k = 0; k < f.size(); ++k)
    if (!std::isfinite(f[k]))
      fail(errc::domain_error, what + " contains a non-finite node value");
}

void require_finite(const ComplexField& f, const std::string& what) {
  for (long k = 0; k < f.size(); ++k)
    if (!std::isfinite(f[k].real()) || !std::isfinite(f[k].imag()))
      fail(errc::domain_error, what + " contains a non-finite node value");
}

void require_finite(const VecField& f, const std::string& what) {
  const Grid2& g = f.grid();
  for (long k = 0; k < g.size(); ++k)
    if (!f.at(k).allFinite())
      fail(errc::domain_error, what + " contains a non-finite node value");
}

Stats stats_abs(const RealField& f) {
  const Grid2& g = f.grid();
  Stats s;
  double sq = 0;
  long n_int = 0;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      double a = std::abs(f(i, j));
      s.max_all = std::max(s.max_all, a);
      if (g.interior(i, j)) {
        s.max_interior = std::max(s.max_interior, a);
        sq += a * a;
        ++n_int;
      }
    }
  s.rms_interior = n_int > 0 ? std::sqrt(sq / n_int) : 0.0;
  return s;
}

Stats stats_abs(const RealField& f, const Mask& certified) {
  const Grid2& g = f.grid();
  Stats s;
  double sq = 0;
  long n_int = 0;
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      if (!certified(i, j)) continue;
      double a = std::abs(f(i, j));
      s.max_all = std::max(s.max_all, a);
      if (g.interior(i, j)) {
        s.max_interior = std::max(s.max_interior, a);
        sq += a * a;
        ++n_int;
      }
    }
  s.rms_interior = n_int > 0 ? std::sqrt(sq / n_int) : 0.0;
  return s;
}

double max_abs(const RealField& f) { return stats_abs(f).max_all; }
double max_abs_interior(const RealField& f) { return stats_abs(f).max_interior; }

Mask erode(const Mask& m, int r) {
  const Grid2& g = m.grid();
  Mask out(g, 0);
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      bool keep = true;
      for (int dj = -r; dj <= r && keep; ++dj)
        for (int di = -r; di <= r && keep; ++di) {
          int ii = std::min(std::max(i + di, 0), g.nu - 1);
          int jj = std::min(std::max(j + dj, 0), g.nv - 1);
          if (!m(ii, jj)) keep = false;
        }
      out(i, j) = keep ? 1 : 0;
    }
  return out;
}

namespace {
void csv_header(std::ostringstream& os, const std::string& name, int ncomp,
                bool complex_parts) {
  os << "i,j,u,v";
  if (ncomp == 1 && !complex_parts) {
    os << "," << name;
  } else if (complex_parts) {
    for (int c = 0; c < ncomp; ++c) os << "," << name << c << "_re," << name << c << "_im";
  } else {
    for (int c = 0; c < ncomp; ++c) os << "," << name << c;
  }
  os << "\n";
}

void csv_node_prefix(std::ostringstream& os, const Grid2& g, int i, int j) {
  char buf[80];
  snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g", i, j, g.u(i), g.v(j));
  os << buf;
}
}  // namespace

std::string to_csv(const RealField& f, const std::string& name) {
  const Grid2& g = f.grid();
  std::ostringstream os;
  csv_header(os, name, 1, false);
  char buf[40];
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      csv_node_prefix(os, g, i, j);
      snprintf(buf, sizeof(buf), ",%.17g\n", f(i, j));
      os << buf;
    }
  return os.str();
}

std::string to_csv(const ComplexField& f, const std::string& name) {
  const Grid2& g = f.grid();
  std::ostringstream os;
  csv_header(os, name, 1, true);
  char buf[80];
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      csv_node_prefix(os, g, i, j);
      snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", f(i, j).real(), f(i, j).imag());
      os << buf;
    }
  return os.str();
}

std::string to_csv(const VecField& f, const std::string& name) {
  const Grid2& g = f.grid();
  std::ostringstream os;
  csv_header(os, name, f.dim(), false);
  char buf[40];
  for (int j = 0; j < g.nv; ++j)
    for (int i = 0; i < g.nu; ++i) {
      csv_node_prefix(os, g, i, j);
      for (int c = 0; c < f.dim(); ++c) {
        snprintf(buf, sizeof(buf), ",%.17g", f.at(i, j)(c));
        os << buf;
      }
      os << "\n";
    }
  return os.str();
}

namespace ref {

RealField diff(const RealField& f, DiffAxis which) {
  return diff_scalar(f, which, false);
}

ComplexField complex_diff(const RealField& f, CDiffAxis which) {
  RealField fu = diff_scalar(f, DiffAxis::u, false);
  RealField fv = diff_scalar(f, DiffAxis::v, false);
  const double s = which == CDiffAxis::z ? -1.0 : 1.0;
  ComplexField out(f.grid());
  for (long k = 0; k < f.size(); ++k) out[k] = 0.5 * cplx(fu[k], s * fv[k]);
  return out;
}

}  // namespace ref

}  // namespace scf
