#pragma once

/**
 * @file tensor.hpp
 *
 * Symmetric 2D tensor algebra in Voigt form for plane-strain elasticity.
 *
 * Storage convention: a symmetric second-order tensor is the vector
 * (t11, t22, t12) with the shear component unscaled (the tensor component,
 * not the engineering shear 2*t12). Stiffness-like matrices act on these
 * vectors directly, so an isotropic stiffness carries 2*mu in its shear
 * entry and the double contraction a:b counts the off-diagonal twice.
 */

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace unitcell {

/** 3x3 matrix acting on Voigt vectors (t11, t22, t12). */
template <typename Scalar>
using VoigtMatrix = Eigen::Matrix<Scalar, 3, 3>;

/** Voigt component vector of a symmetric 2D tensor. */
template <typename Scalar>
using VoigtVector = Eigen::Matrix<Scalar, 3, 1>;

/** Raised when a matrix that must be inverted is singular or ill-conditioned. */
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** Symmetric second-order tensor in 2D (strain, stress, polarization). */
template <typename Scalar = double>
struct SymTensor2 {
  Scalar e11{};
  Scalar e22{};
  Scalar e12{};

  SymTensor2() = default;
  SymTensor2(Scalar t11, Scalar t22, Scalar t12) : e11(t11), e22(t22), e12(t12) {}

  /** Components as an Eigen vector (t11, t22, t12). */
  VoigtVector<Scalar> vec() const { return {e11, e22, e12}; }

  static SymTensor2 from_vec(const VoigtVector<Scalar>& v) { return {v[0], v[1], v[2]}; }
};

template <typename Scalar>
SymTensor2<Scalar> operator+(const SymTensor2<Scalar>& a, const SymTensor2<Scalar>& b) {
  return {a.e11 + b.e11, a.e22 + b.e22, a.e12 + b.e12};
}

template <typename Scalar>
SymTensor2<Scalar> operator-(const SymTensor2<Scalar>& a, const SymTensor2<Scalar>& b) {
  return {a.e11 - b.e11, a.e22 - b.e22, a.e12 - b.e12};
}

template <typename Scalar>
SymTensor2<Scalar> operator*(Scalar c, const SymTensor2<Scalar>& t) {
  return {c * t.e11, c * t.e22, c * t.e12};
}

/** Double contraction a:b; the shear product is counted twice. */
template <typename Scalar>
Scalar ddot(const SymTensor2<Scalar>& a, const SymTensor2<Scalar>& b) {
  return a.e11 * b.e11 + a.e22 * b.e22 + Scalar(2) * a.e12 * b.e12;
}

/** Frobenius norm of the full 2x2 tensor. */
template <typename Scalar>
Scalar norm(const SymTensor2<Scalar>& t) {
  return std::sqrt(ddot(t, t));
}

/** Plane-strain Lame parameters (lambda, mu) from Young's modulus and Poisson ratio. */
template <typename Scalar>
std::pair<Scalar, Scalar> plane_strain_lame(Scalar E, Scalar nu) {
  if (!(E >= Scalar(0))) throw std::invalid_argument("plane_strain_lame: E must be >= 0");
  if (!(nu > Scalar(-1) && nu < Scalar(0.5)))
    throw std::invalid_argument("plane_strain_lame: nu must lie in (-1, 0.5)");
  const Scalar lambda = E * nu / ((Scalar(1) + nu) * (Scalar(1) - Scalar(2) * nu));
  const Scalar mu = E / (Scalar(2) * (Scalar(1) + nu));
  return {lambda, mu};
}

/**
 * Plane-strain isotropic stiffness in Voigt form.
 *
 * Normal block carries lambda + 2*mu on the diagonal and lambda off it; the
 * shear entry is 2*mu so that sigma12 = 2*mu*eps12 under the unscaled-shear
 * convention. E = 0 yields the zero matrix (void phase).
 */
template <typename Scalar>
VoigtMatrix<Scalar> isotropic_stiffness(Scalar E, Scalar nu) {
  const auto [lambda, mu] = plane_strain_lame(E, nu);
  VoigtMatrix<Scalar> C;
  C << lambda + 2 * mu, lambda, 0,  //
      lambda, lambda + 2 * mu, 0,   //
      0, 0, 2 * mu;
  return C;
}

/** Matrix-vector product in the Voigt convention. */
template <typename Scalar>
SymTensor2<Scalar> apply_voigt(const VoigtMatrix<Scalar>& M, const SymTensor2<Scalar>& t) {
  return SymTensor2<Scalar>::from_vec(M * t.vec());
}

/**
 * Inverse of a Voigt matrix.
 *
 * Rejects matrices with 2-norm condition number at or above 1e14; the
 * optional context string (e.g. a cell index) is included in the error.
 */
template <typename Scalar>
VoigtMatrix<Scalar> invert_voigt(const VoigtMatrix<Scalar>& M, const std::string& context = {}) {
  Eigen::JacobiSVD<VoigtMatrix<Scalar>> svd(M);
  const Scalar smax = svd.singularValues()(0);
  const Scalar smin = svd.singularValues()(2);
  if (!(smin > Scalar(0)) || smax / smin >= Scalar(1e14)) {
    std::string msg = "invert_voigt: matrix is singular or ill-conditioned";
    if (!context.empty()) msg += " (" + context + ")";
    throw SingularMatrixError(msg);
  }
  return M.inverse();
}

}  // namespace unitcell
