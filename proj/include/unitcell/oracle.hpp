#pragma once

/**
 * @file oracle.hpp
 *
 * Slow, independent reference answers used to validate the iterative schemes:
 * a dense direct solve of the discrete cell problem and the closed-form
 * effective stiffness of a two-phase laminate.
 */

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "unitcell/fields.hpp"
#include "unitcell/spectral.hpp"

namespace unitcell {

namespace detail {

/** Dense LU of the cell operator I + Gamma0 (C - C0) on flattened strains. */
inline Eigen::FullPivLU<Eigen::MatrixXd> dense_cell_operator(const MaterialField& material,
                                                             const ReferenceMedium& medium) {
  const Grid2& g = material.grid;
  const int n = g.cells();
  if (n > 1728)
    throw std::invalid_argument(
        "dense_solve: grid has more than 1728 cells; the dense reference path is meant for small "
        "verification problems");
  SpectralWorkspace ws(material, medium);
  const int m = 3 * n;
  Eigen::MatrixXd A(m, m);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  TensorField2 probe(g), image(g);
  for (int j = 0; j < m; ++j) {
    e[j] = 1.0;
    probe = unflatten(e, g);
    e[j] = 0.0;
    multiply_phasewise(material, ws.d, probe, image);
    ws.fft.forward(image, ws.hat_a);
    scale_gamma_apply(ws.medium, ws.freq, ws.hat_a, 1.0, {0.0, 0.0, 0.0});
    ws.fft.inverse(ws.hat_a, image);
    A.col(j) = flatten(image);
    A(j, j) += 1.0;
  }
  return Eigen::FullPivLU<Eigen::MatrixXd>(std::move(A));
}

}  // namespace detail

/**
 * Direct solution of the discrete cell problem: the fixed-point equation
 * eps + Gamma0 (C - C0) eps = E is assembled as a dense matrix by probing unit
 * strains and solved by LU.  In exact arithmetic the solution is independent
 * of the reference medium.  Small grids only.
 */
inline TensorField2 dense_solve(const MaterialField& material, const ReferenceMedium& medium,
                                const LoadCase& load) {
  const auto lu = detail::dense_cell_operator(material, medium);
  if (!lu.isInvertible()) {
    const int nullity = static_cast<int>(lu.cols() - lu.rank());
    throw SingularMatrixError("dense_solve: cell operator is singular with null space dimension " +
                              std::to_string(nullity) +
                              " (degenerate phase stiffness or reference medium)");
  }
  const Eigen::VectorXd rhs = flatten(TensorField2(material.grid, load.E));
  return unflatten(lu.solve(rhs), material.grid);
}

/** Effective stiffness from three dense solves, one per unit mean strain. */
inline VoigtMatrix<double> dense_effective(const MaterialField& material,
                                           const ReferenceMedium& medium) {
  const auto lu = detail::dense_cell_operator(material, medium);
  if (!lu.isInvertible()) {
    const int nullity = static_cast<int>(lu.cols() - lu.rank());
    throw SingularMatrixError("dense_effective: cell operator is singular with null space dimension " +
                              std::to_string(nullity));
  }
  VoigtMatrix<double> Cstar;
  for (int j = 0; j < 3; ++j) {
    VoigtVector<double> unit = VoigtVector<double>::Zero();
    unit[j] = 1.0;
    const LoadCase lc{SymTensor2<double>::from_vec(unit)};
    const Eigen::VectorXd rhs = flatten(TensorField2(material.grid, lc.E));
    const TensorField2 eps = unflatten(lu.solve(rhs), material.grid);
    Cstar.col(j) = average_stress(material, eps).vec();
  }
  return Cstar;
}

/**
 * Closed-form effective stiffness of a two-phase laminate with layer normal
 * along axis `normal` (0 = x, 1 = y) and volume fraction f of phase1.  In
 * plane strain with a_i = lambda_i + 2 mu_i and <.> the volume average:
 * C*_nn = <1/a>^-1, C*_nt = C*_nn <lambda/a>, C*_tt = C*_nn <lambda/a>^2 +
 * <a> - <lambda^2/a>, C*_shear = <1/(2 mu)>^-1 (n = normal, t = transverse).
 */
inline VoigtMatrix<double> laminate_effective(const Phase& phase1, const Phase& phase2, double f,
                                              int normal = 0) {
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("laminate_effective: fraction must lie in (0, 1)");
  if (normal != 0 && normal != 1)
    throw std::invalid_argument("laminate_effective: normal must be 0 (x) or 1 (y)");
  const auto [l1, m1] = plane_strain_lame(phase1.E, phase1.nu);
  const auto [l2, m2] = plane_strain_lame(phase2.E, phase2.nu);
  if (!(m1 > 0.0) || !(m2 > 0.0))
    throw std::invalid_argument("laminate_effective: both phases need positive stiffness");
  const double a1 = l1 + 2.0 * m1, a2 = l2 + 2.0 * m2;
  const double g = 1.0 - f;
  const double harm_a = 1.0 / (f / a1 + g / a2);
  const double mix = f * l1 / a1 + g * l2 / a2;
  const double cnn = harm_a;
  const double cnt = harm_a * mix;
  const double ctt = harm_a * mix * mix + (f * a1 + g * a2) - (f * l1 * l1 / a1 + g * l2 * l2 / a2);
  const double csh = 1.0 / (f / (2.0 * m1) + g / (2.0 * m2));
  VoigtMatrix<double> C = VoigtMatrix<double>::Zero();
  const int nn = normal, tt = 1 - normal;
  C(nn, nn) = cnn;
  C(tt, tt) = ctt;
  C(nn, tt) = C(tt, nn) = cnt;
  C(2, 2) = csh;
  return C;
}

}  // namespace unitcell
