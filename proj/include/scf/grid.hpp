#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scf/errors.hpp"
#include "scf/parallel.hpp"

namespace scf {

using cplx = std::complex<double>;

/// Uniform rectangular node grid on [u0,u1] x [v0,v1].
struct Grid2 {
  double u0 = 0, u1 = 1, v0 = 0, v1 = 1;
  int nu = 0, nv = 0;
  double hu = 0, hv = 0;

  Grid2() = default;
  Grid2(double u0_, double u1_, double v0_, double v1_, int nu_, int nv_)
      : u0(u0_), u1(u1_), v0(v0_), v1(v1_), nu(nu_), nv(nv_) {
    if (nu < 9 || nv < 9)
      fail(errc::grid_too_small, "grids need at least 9 nodes per axis");
    if (!(u1 > u0) || !(v1 > v0))
      fail(errc::config_error, "grid domain bounds must be increasing");
    hu = (u1 - u0) / (nu - 1);
    hv = (v1 - v0) / (nv - 1);
  }

  long size() const { return static_cast<long>(nu) * nv; }
  long idx(int i, int j) const { return static_cast<long>(j) * nu + i; }
  double u(int i) const { return u0 + hu * i; }
  double v(int j) const { return v0 + hv * j; }

  /// Interior sub-grid with a two-node margin; certificate statistics are
  /// taken here so one-sided boundary stencils do not pollute them.
  bool interior(int i, int j) const {
    return i >= 2 && j >= 2 && i <= nu - 3 && j <= nv - 3;
  }

  bool operator==(const Grid2& o) const {
    return u0 == o.u0 && u1 == o.u1 && v0 == o.v0 && v1 == o.v1 && nu == o.nu &&
           nv == o.nv;
  }
};

inline void require_same_grid(const Grid2& a, const Grid2& b) {
  if (!(a == b)) fail(errc::config_error, "fields live on different grids");
}

/// Dense per-node storage of one value per grid node.
template <class T>
class Field {
public:
  Field() = default;
  explicit Field(const Grid2& g, T init = T{}) : grid_(g), data_(g.size(), init) {}

  template <class F>
  static Field build(const Grid2& g, F&& fn) {
    Field out(g);
    par::for_index(g.size(), [&](long k) {
      int i = static_cast<int>(k % g.nu);
      int j = static_cast<int>(k / g.nu);
      out.data_[k] = fn(i, j);
    });
    return out;
  }

  const Grid2& grid() const { return grid_; }
  T& operator()(int i, int j) { return data_[grid_.idx(i, j)]; }
  const T& operator()(int i, int j) const { return data_[grid_.idx(i, j)]; }
  T& operator[](long k) { return data_[k]; }
  const T& operator[](long k) const { return data_[k]; }
  long size() const { return static_cast<long>(data_.size()); }
  const std::vector<T>& data() const { return data_; }

private:
  Grid2 grid_;
  std::vector<T> data_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;
using Mask = Field<unsigned char>;

/// Field of small dense vectors with flat storage (dim values per node).
template <class S>
class VecFieldT {
public:
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  using Map = Eigen::Map<Vec>;
  using CMap = Eigen::Map<const Vec>;

  VecFieldT() = default;
  VecFieldT(const Grid2& g, int dim)
      : grid_(g), dim_(dim), data_(g.size() * dim, S{}) {}

  const Grid2& grid() const { return grid_; }
  int dim() const { return dim_; }
  Map at(int i, int j) { return Map(data_.data() + grid_.idx(i, j) * dim_, dim_); }
  CMap at(int i, int j) const {
    return CMap(data_.data() + grid_.idx(i, j) * dim_, dim_);
  }
  Map at(long k) { return Map(data_.data() + k * dim_, dim_); }
  CMap at(long k) const { return CMap(data_.data() + k * dim_, dim_); }
  S* raw() { return data_.data(); }
  const S* raw() const { return data_.data(); }

private:
  Grid2 grid_;
  int dim_ = 0;
  std::vector<S> data_;
};

using VecField = VecFieldT<double>;
using CVecField = VecFieldT<cplx>;

/// Field of small dense matrices with flat storage (rows*cols per node).
class MatField {
public:
  using Mat = Eigen::MatrixXd;
  using Map = Eigen::Map<Mat>;
  using CMap = Eigen::Map<const Mat>;

  MatField() = default;
  MatField(const Grid2& g, int rows, int cols)
      : grid_(g), rows_(rows), cols_(cols),
        data_(g.size() * rows * cols, 0.0) {}

  const Grid2& grid() const { return grid_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Map at(int i, int j) {
    return Map(data_.data() + grid_.idx(i, j) * rows_ * cols_, rows_, cols_);
  }
  CMap at(int i, int j) const {
    return CMap(data_.data() + grid_.idx(i, j) * rows_ * cols_, rows_, cols_);
  }
  Map at(long k) { return Map(data_.data() + k * rows_ * cols_, rows_, cols_); }
  CMap at(long k) const {
    return CMap(data_.data() + k * rows_ * cols_, rows_, cols_);
  }

private:
  Grid2 grid_;
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

enum class DiffAxis { u, v, uu, vv, uv };
enum class CDiffAxis { z, zbar };

/// Second-order finite differences: centered three-point stencils in the
/// interior, one-sided second-order stencils on the boundary. uv composes
/// the u and v first-derivative stencils.
RealField diff(const RealField& f, DiffAxis which);
ComplexField diff(const ComplexField& f, DiffAxis which);
VecField diff(const VecField& f, DiffAxis which);
CVecField diff(const CVecField& f, DiffAxis which);

/// d_z = (d_u - i d_v)/2 and d_zbar = (d_u + i d_v)/2, input promoted to
/// complex when real.
ComplexField complex_diff(const RealField& f, CDiffAxis which);
ComplexField complex_diff(const ComplexField& f, CDiffAxis which);
CVecField complex_diff(const VecField& f, CDiffAxis which);

void require_finite(const RealField& f, const std::string& what);
void require_finite(const ComplexField& f, const std::string& what);
void require_finite(const VecField& f, const std::string& what);

/// Residual summary over all nodes and over the two-node-margin interior.
struct Stats {
  double max_all = 0;
  double max_interior = 0;
  double rms_interior = 0;
};

Stats stats_abs(const RealField& f);
Stats stats_abs(const RealField& f, const Mask& certified);
double max_abs(const RealField& f);
double max_abs_interior(const RealField& f);

/// Shrink a mask so every kept node has its full Chebyshev-r neighborhood
/// inside the original mask; keeps stencil outputs clear of unguarded data.
Mask erode(const Mask& m, int r);

/// Node-major CSV dump (header row names the components).
std::string to_csv(const RealField& f, const std::string& name);
std::string to_csv(const ComplexField& f, const std::string& name);
std::string to_csv(const VecField& f, const std::string& name);

/// Plain-loop reference implementations of the stencil kernels, kept so the
/// tests and the benchmark can compare against the parallel versions.
namespace ref {
RealField diff(const RealField& f, DiffAxis which);
ComplexField complex_diff(const RealField& f, CDiffAxis which);
}  // namespace ref

}  // namespace scf
