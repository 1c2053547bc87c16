#pragma once

/**
 * @file fields.hpp
 *
 * Grid-valued symmetric tensor fields in real and Fourier space, the load
 * case (prescribed average strain), and the flattening convention used by
 * solvers that operate on plain vectors.
 */

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>

#include "unitcell/microstructure.hpp"
#include "unitcell/tensor.hpp"

namespace unitcell {

/** Real symmetric-tensor field: three component planes over a grid. */
struct TensorField2 {
  Grid2 grid;
  Eigen::ArrayXXd c11, c22, c12;  // nx rows, ny cols each

  TensorField2() = default;

  explicit TensorField2(const Grid2& g) : grid(g) {
    c11 = Eigen::ArrayXXd::Zero(g.nx, g.ny);
    c22 = Eigen::ArrayXXd::Zero(g.nx, g.ny);
    c12 = Eigen::ArrayXXd::Zero(g.nx, g.ny);
  }

  /** Uniform field equal to t everywhere. */
  TensorField2(const Grid2& g, const SymTensor2<double>& t) : TensorField2(g) {
    c11.setConstant(t.e11);
    c22.setConstant(t.e22);
    c12.setConstant(t.e12);
  }

  SymTensor2<double> at(int ix, int iy) const { return {c11(ix, iy), c22(ix, iy), c12(ix, iy)}; }

  void set(int ix, int iy, const SymTensor2<double>& t) {
    c11(ix, iy) = t.e11;
    c22(ix, iy) = t.e22;
    c12(ix, iy) = t.e12;
  }

  /** Cell average of the field. */
  SymTensor2<double> mean() const { return {c11.mean(), c22.mean(), c12.mean()}; }

  /** Largest absolute componentwise difference to another field. */
  double max_abs_diff(const TensorField2& o) const {
    return std::max({(c11 - o.c11).abs().maxCoeff(), (c22 - o.c22).abs().maxCoeff(),
                     (c12 - o.c12).abs().maxCoeff()});
  }
};

/** Fourier-space counterpart of TensorField2 (full complex spectrum). */
struct FourierField2 {
  Grid2 grid;
  Eigen::ArrayXXcd c11, c22, c12;

  FourierField2() = default;

  explicit FourierField2(const Grid2& g) : grid(g) {
    c11 = Eigen::ArrayXXcd::Zero(g.nx, g.ny);
    c22 = Eigen::ArrayXXcd::Zero(g.nx, g.ny);
    c12 = Eigen::ArrayXXcd::Zero(g.nx, g.ny);
  }
};

/** Prescribed average strain over the cell. */
struct LoadCase {
  SymTensor2<double> E;
};

/**
 * Flatten a field component-major (all 11, then all 22, then all 12),
 * row-major within a component: entry index = comp * nx * ny + iy * nx + ix.
 * The convention is load-bearing for solvers that keep basis vectors across
 * iterations; do not change it.
 */
inline Eigen::VectorXd flatten(const TensorField2& f) {
  const int n = f.grid.cells();
  Eigen::VectorXd v(3 * n);
  const Eigen::Map<const Eigen::ArrayXd> a11(f.c11.data(), n), a22(f.c22.data(), n),
      a12(f.c12.data(), n);
  v.segment(0, n) = a11;
  v.segment(n, n) = a22;
  v.segment(2 * n, n) = a12;
  return v;
}

/** Inverse of flatten for a known grid. */
inline TensorField2 unflatten(const Eigen::VectorXd& v, const Grid2& grid) {
  const int n = grid.cells();
  if (v.size() != 3 * n) throw std::invalid_argument("unflatten: vector size does not match grid");
  TensorField2 f(grid);
  Eigen::Map<Eigen::ArrayXd>(f.c11.data(), n) = v.segment(0, n);
  Eigen::Map<Eigen::ArrayXd>(f.c22.data(), n) = v.segment(n, n);
  Eigen::Map<Eigen::ArrayXd>(f.c12.data(), n) = v.segment(2 * n, n);
  return f;
}

}  // namespace unitcell
