#pragma once

/**
 * @file greens.hpp
 *
 * Homogeneous reference medium and its periodic Green's operator in Fourier
 * space.
 *
 * The operator acts per frequency xi as the Voigt matrix of the fourth-order
 * kernel
 *
 *   G_khij(xi) = (d_ki x_h x_j + d_hi x_k x_j + d_kj x_h x_i + d_hj x_k x_i)
 *                / (4 mu0 |xi|^2)
 *              - (lambda0 + mu0) / (mu0 (lambda0 + 2 mu0))
 *                * x_i x_j x_k x_h / |xi|^4,
 *
 * evaluated at the discrete frequencies xi = 2*pi*(m1/lx, m2/ly) with signed
 * integer indices in (-n/2, n/2). On even grids the Nyquist frequency is set
 * to zero: its centered-difference spectral derivative vanishes on grid
 * points, and any nonzero choice breaks conjugate symmetry of the multiplier
 * (the Nyquist index is its own negative), so those modes carry neither a
 * correction nor an equilibrium constraint. Applied to C0 times a compatible
 * strain the operator is the identity; applied to an equilibrated stress mode
 * it returns zero. The zero frequency is excluded: its value is the caller's
 * contract (the mean strain is pinned separately).
 */

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "unitcell/fields.hpp"
#include "unitcell/tensor.hpp"

namespace unitcell {

/** Isotropic comparison medium, stored as Lame parameters. */
struct ReferenceMedium {
  double lambda0 = 0.0;
  double mu0 = 0.0;

  ReferenceMedium() = default;
  ReferenceMedium(double lambda, double mu) : lambda0(lambda), mu0(mu) {
    if (!(mu0 > 0.0) || !(lambda0 + 2.0 * mu0 > 0.0))
      throw std::invalid_argument("ReferenceMedium: requires mu0 > 0 and lambda0 + 2*mu0 > 0");
  }

  /** Build from Young's modulus and Poisson ratio (plane strain). */
  static ReferenceMedium from_moduli(double E, double nu) {
    const auto [lambda, mu] = plane_strain_lame(E, nu);
    return {lambda, mu};
  }

  VoigtMatrix<double> stiffness() const {
    VoigtMatrix<double> C;
    C << lambda0 + 2 * mu0, lambda0, 0,  //
        lambda0, lambda0 + 2 * mu0, 0,   //
        0, 0, 2 * mu0;
    return C;
  }
};

/** Reference medium with modulus (E_f + E_m)/2 and the given Poisson ratio. */
inline ReferenceMedium reference_from_average(double E_f, double E_m, double nu_o) {
  if (!(E_f >= 0.0) || !(E_m >= 0.0) || !(E_f + E_m > 0.0))
    throw std::invalid_argument("reference_from_average: moduli must be >= 0 and not both 0");
  return ReferenceMedium::from_moduli(0.5 * (E_f + E_m), nu_o);
}

/** Discrete frequencies of an nx x ny grid over an lx x ly cell. */
struct FrequencyGrid {
  Eigen::VectorXd xi1;  // size nx
  Eigen::VectorXd xi2;  // size ny

  explicit FrequencyGrid(const Grid2& g) : xi1(g.nx), xi2(g.ny) {
    const double two_pi = 2.0 * std::numbers::pi;
    for (int i = 0; i < g.nx; ++i) {
      const int m = i < (g.nx + 1) / 2 ? i : i - g.nx;
      xi1[i] = two_pi * m / g.lx;
    }
    for (int j = 0; j < g.ny; ++j) {
      const int m = j < (g.ny + 1) / 2 ? j : j - g.ny;
      xi2[j] = two_pi * m / g.ly;
    }
    // Even grids: the Nyquist mode is self-conjugate, so an odd multiplier
    // entry evaluated at +-n/2 would differ between a mode and its pair;
    // zeroing the frequency keeps derivative and Green action consistent.
    if (g.nx % 2 == 0) xi1[g.nx / 2] = 0.0;
    if (g.ny % 2 == 0) xi2[g.ny / 2] = 0.0;
  }
};

namespace detail {

/**
 * Independent entries of the Green operator's Voigt action at one frequency.
 * The full matrix is
 *   [ g11    g12    g13  ]
 *   [ g12    g22    g23  ]
 *   [ g13/2  g23/2  g33  ]
 * (major symmetry under the unscaled-shear convention: the shear row is half
 * the shear column).
 */
struct GammaCoeffs {
  double g11, g12, g22, g13, g23, g33;
};

inline GammaCoeffs gamma_coeffs(const ReferenceMedium& med, double xi1, double xi2) {
  const double norm2 = xi1 * xi1 + xi2 * xi2;
  const double inv = 1.0 / std::sqrt(norm2);
  const double n1 = xi1 * inv;
  const double n2 = xi2 * inv;
  const double c = (med.lambda0 + med.mu0) / (med.mu0 * (med.lambda0 + 2.0 * med.mu0));
  const double inv_mu = 1.0 / med.mu0;
  const double n11 = n1 * n1;
  const double n22 = n2 * n2;
  const double n12 = n1 * n2;
  GammaCoeffs g;
  g.g11 = n11 * inv_mu - c * n11 * n11;
  g.g12 = -c * n11 * n22;
  g.g22 = n22 * inv_mu - c * n22 * n22;
  g.g13 = n12 * inv_mu - 2.0 * c * n11 * n12;
  g.g23 = n12 * inv_mu - 2.0 * c * n22 * n12;
  g.g33 = 0.5 * inv_mu - 2.0 * c * n11 * n22;
  return g;
}

template <typename T>
inline void gamma_multiply(const GammaCoeffs& g, T& t1, T& t2, T& t3) {
  const T o1 = g.g11 * t1 + g.g12 * t2 + g.g13 * t3;
  const T o2 = g.g12 * t1 + g.g22 * t2 + g.g23 * t3;
  const T o3 = 0.5 * (g.g13 * t1 + g.g23 * t2) + g.g33 * t3;
  t1 = o1;
  t2 = o2;
  t3 = o3;
}

}  // namespace detail

/** Voigt action matrix of the Green operator at a nonzero frequency. */
inline VoigtMatrix<double> gamma_hat(const ReferenceMedium& med, double xi1, double xi2) {
  if (xi1 == 0.0 && xi2 == 0.0)
    throw std::invalid_argument("gamma_hat: zero frequency (mean mode is the caller's contract)");
  const auto g = detail::gamma_coeffs(med, xi1, xi2);
  VoigtMatrix<double> G;
  G << g.g11, g.g12, g.g13,          //
      g.g12, g.g22, g.g23,           //
      0.5 * g.g13, 0.5 * g.g23, g.g33;
  return G;
}

/**
 * Apply the Green operator frequency-wise to a Fourier-space field.
 * The zero-frequency output is set to zero; assigning the mean mode is the
 * caller's responsibility.
 */
inline FourierField2 apply_gamma(const ReferenceMedium& med, const FourierField2& field) {
  const Grid2& g = field.grid;
  if (g.nx < 2 || g.ny < 2) throw std::invalid_argument("apply_gamma: field has no grid");
  FrequencyGrid freq(g);
  FourierField2 out = field;
  for (int j = 0; j < g.ny; ++j) {
    const double x2 = freq.xi2[j];
    for (int i = 0; i < g.nx; ++i) {
      const double x1 = freq.xi1[i];
      if (x1 == 0.0 && x2 == 0.0) {
        out.c11(i, j) = out.c22(i, j) = out.c12(i, j) = 0.0;
        continue;
      }
      const auto gc = detail::gamma_coeffs(med, x1, x2);
      detail::gamma_multiply(gc, out.c11(i, j), out.c22(i, j), out.c12(i, j));
    }
  }
  return out;
}

}  // namespace unitcell
