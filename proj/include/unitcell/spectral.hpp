#pragma once

/**
 * @file spectral.hpp
 *
 * Fixed-point schemes for the periodic cell problem: given a heterogeneous
 * stiffness C(x), a reference medium C0 and a mean strain E, find the periodic
 * strain field eps(x) with div(C(x) eps(x)) = 0 and mean(eps) = E.  Every
 * scheme iterates through the Green operator of the reference medium applied
 * in Fourier space.
 */

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "unitcell/fft2.hpp"
#include "unitcell/fields.hpp"
#include "unitcell/greens.hpp"
#include "unitcell/microstructure.hpp"
#include "unitcell/solve.hpp"
#include "unitcell/tensor.hpp"

namespace unitcell {

/**
 * Strain step map: writes the next iterate and returns the equilibrium
 * residual of the input iterate, so certifying a converged input costs a
 * single call.
 */
using StepFn = std::function<double(const TensorField2&, TensorField2&)>;

/** Called after each accepted update with (iteration, new iterate). */
using IterateObserver = std::function<void(int, const TensorField2&)>;

namespace detail {

/** Pseudo-inverse data of an operator with major symmetry. */
struct SymmetricPseudo {
  VoigtMatrix<double> pinv;  // Moore-Penrose inverse, acts on the range
  VoigtMatrix<double> proj;  // orthogonal projector onto the range
  bool invertible = false;
};

/**
 * Eigen-decomposition pseudo-inverse of a Voigt operator with major symmetry.
 * Runs in the scaled representation where such operators are symmetric
 * matrices; eigenvalues below 1e-12 of the largest count as zero.
 */
inline SymmetricPseudo symmetric_pseudo(const VoigtMatrix<double>& M) {
  const double s = std::sqrt(2.0);
  VoigtMatrix<double> Mm = M;
  Mm.row(2) *= s;
  Mm.col(2) /= s;
  Mm = ((Mm + Mm.transpose()) * 0.5).eval();
  Eigen::SelfAdjointEigenSolver<VoigtMatrix<double>> es(Mm);
  if (es.info() != Eigen::Success) throw std::runtime_error("symmetric_pseudo: eigensolver failed");
  const Eigen::Vector3d ev = es.eigenvalues();
  const VoigtMatrix<double> V = es.eigenvectors();
  const double thresh = 1e-12 * ev.cwiseAbs().maxCoeff();
  Eigen::Vector3d dinv = Eigen::Vector3d::Zero(), keep = Eigen::Vector3d::Zero();
  SymmetricPseudo out;
  out.invertible = true;
  for (int i = 0; i < 3; ++i) {
    if (std::fabs(ev[i]) > thresh) {
      dinv[i] = 1.0 / ev[i];
      keep[i] = 1.0;
    } else {
      out.invertible = false;
    }
  }
  out.pinv = V * dinv.asDiagonal() * V.transpose();
  out.proj = V * keep.asDiagonal() * V.transpose();
  out.pinv.row(2) /= s;
  out.pinv.col(2) *= s;
  out.proj.row(2) /= s;
  out.proj.col(2) *= s;
  return out;
}

inline void ensure_shape(TensorField2& f, const Grid2& g) {
  f.grid = g;
  f.c11.resize(g.nx, g.ny);
  f.c22.resize(g.nx, g.ny);
  f.c12.resize(g.nx, g.ny);
}

/** out(x) = table[phase(x)] in(x); out may alias in. */
inline void multiply_phasewise(const MaterialField& mat, const std::vector<VoigtMatrix<double>>& table,
                               const TensorField2& in, TensorField2& out) {
  if (!(in.grid == mat.grid)) throw std::invalid_argument("multiply_phasewise: field does not match material grid");
  ensure_shape(out, in.grid);
  for (int iy = 0; iy < in.grid.ny; ++iy)
    for (int ix = 0; ix < in.grid.nx; ++ix) {
      const VoigtMatrix<double>& M = table[static_cast<std::size_t>(mat.phase_id(ix, iy))];
      const double a = in.c11(ix, iy), b = in.c22(ix, iy), c = in.c12(ix, iy);
      out.c11(ix, iy) = M(0, 0) * a + M(0, 1) * b + M(0, 2) * c;
      out.c22(ix, iy) = M(1, 0) * a + M(1, 1) * b + M(1, 2) * c;
      out.c12(ix, iy) = M(2, 0) * a + M(2, 1) * b + M(2, 2) * c;
    }
}

/**
 * In place: f(k) <- scale * Gamma0(k) f(k) for k != 0; the zero mode is set so
 * the inverse transform has mean dc.
 */
inline void scale_gamma_apply(const ReferenceMedium& med, const FrequencyGrid& freq, FourierField2& f,
                              double scale, const SymTensor2<double>& dc) {
  const int nx = static_cast<int>(freq.xi1.size()), ny = static_cast<int>(freq.xi2.size());
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      std::complex<double>&t1 = f.c11(ix, iy), &t2 = f.c22(ix, iy), &t3 = f.c12(ix, iy);
      const double xi1 = freq.xi1[ix], xi2 = freq.xi2[iy];
      if (xi1 == 0.0 && xi2 == 0.0) {
        // Mean mode and zeroed Nyquist modes: the operator is null there.
        t1 = t2 = t3 = 0.0;
        continue;
      }
      const GammaCoeffs g = gamma_coeffs(med, xi1, xi2);
      gamma_multiply(g, t1, t2, t3);
      t1 *= scale;
      t2 *= scale;
      t3 *= scale;
    }
  const double n = static_cast<double>(nx) * ny;
  f.c11(0, 0) = dc.e11 * n;
  f.c22(0, 0) = dc.e22 * n;
  f.c12(0, 0) = dc.e12 * n;
}

/**
 * Relative equilibrium residual of a transformed stress field: the l2 norm of
 * xi . sigma_hat over all modes, divided by the norm of the mean stress.  The
 * transform normalization cancels.
 */
inline double equilibrium_error_hat(const FourierField2& sig, const FrequencyGrid& freq) {
  const int nx = static_cast<int>(freq.xi1.size()), ny = static_cast<int>(freq.xi2.size());
  double num = 0.0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const double xi1 = freq.xi1[ix], xi2 = freq.xi2[iy];
      num += std::norm(xi1 * sig.c11(ix, iy) + xi2 * sig.c12(ix, iy)) +
             std::norm(xi1 * sig.c12(ix, iy) + xi2 * sig.c22(ix, iy));
    }
  const double den2 =
      std::norm(sig.c11(0, 0)) + std::norm(sig.c22(0, 0)) + 2.0 * std::norm(sig.c12(0, 0));
  if (den2 == 0.0)
    throw std::invalid_argument(
        "equilibrium_error: mean stress vanishes, so the relative residual is undefined; "
        "check the load and the stiffness field");
  return std::sqrt(num / den2);
}

}  // namespace detail

/**
 * Per-solve state shared by the scheme steps: FFT plans, the frequency grid
 * and per-phase operator tables derived from material and reference medium.
 * Step functions treat the tables as read-only and the work fields as scratch.
 * Not thread-safe; use one workspace per concurrent solve.
 */
struct SpectralWorkspace {
  MaterialField material;
  ReferenceMedium medium;
  VoigtMatrix<double> C0;
  std::vector<VoigtMatrix<double>> C;              // stiffness per phase
  std::vector<VoigtMatrix<double>> d;              // C - C0 per phase
  std::vector<VoigtMatrix<double>> inv_C_plus_C0;  // (C + C0)^-1 per phase
  std::vector<VoigtMatrix<double>> pinv_d;         // pseudo-inverse of d per phase
  std::vector<VoigtMatrix<double>> proj_d;         // range projector of d per phase
  std::vector<char> d_invertible;
  FrequencyGrid freq;
  Fft2 fft;
  TensorField2 sigma, work;     // real-space scratch
  FourierField2 hat_a, hat_b;   // Fourier scratch

  SpectralWorkspace(const MaterialField& mat, const ReferenceMedium& med)
      : material(mat),
        medium(med),
        C0(med.stiffness()),
        freq(mat.grid),
        fft(mat.grid),
        sigma(mat.grid),
        work(mat.grid),
        hat_a(mat.grid),
        hat_b(mat.grid) {
    material.validate();
    const int np = static_cast<int>(material.phases.size());
    for (int p = 0; p < np; ++p) {
      const Phase& ph = material.phases[static_cast<std::size_t>(p)];
      C.push_back(isotropic_stiffness(ph.E, ph.nu));
      d.push_back(VoigtMatrix<double>(C.back() - C0));
      const detail::SymmetricPseudo ps = detail::symmetric_pseudo(d.back());
      pinv_d.push_back(ps.pinv);
      proj_d.push_back(ps.proj);
      d_invertible.push_back(ps.invertible ? 1 : 0);
      try {
        inv_C_plus_C0.push_back(invert_voigt(VoigtMatrix<double>(C.back() + C0)));
      } catch (const SingularMatrixError&) {
        throw SingularMatrixError("spectral: C + C0 is singular on phase " + std::to_string(p) +
                                  first_cell_note(p) + "; choose a different reference medium");
      }
    }
  }

 private:
  std::string first_cell_note(int p) const {
    for (int iy = 0; iy < material.grid.ny; ++iy)
      for (int ix = 0; ix < material.grid.nx; ++ix)
        if (material.phase_id(ix, iy) == p)
          return " (e.g. cell (" + std::to_string(ix) + ", " + std::to_string(iy) + "))";
    return "";
  }
};

/** sigma(x) = C(x) eps(x). */
inline TensorField2 stress_field(const MaterialField& material, const TensorField2& eps) {
  std::vector<VoigtMatrix<double>> table;
  table.reserve(material.phases.size());
  for (const Phase& p : material.phases) table.push_back(isotropic_stiffness(p.E, p.nu));
  TensorField2 out(eps.grid);
  detail::multiply_phasewise(material, table, eps, out);
  return out;
}

/** Volume average of C(x) eps(x). */
inline SymTensor2<double> average_stress(const MaterialField& material, const TensorField2& eps) {
  if (!(eps.grid == material.grid))
    throw std::invalid_argument("average_stress: field does not match material grid");
  std::vector<VoigtMatrix<double>> table;
  table.reserve(material.phases.size());
  for (const Phase& p : material.phases) table.push_back(isotropic_stiffness(p.E, p.nu));
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (int iy = 0; iy < eps.grid.ny; ++iy)
    for (int ix = 0; ix < eps.grid.nx; ++ix) {
      const VoigtMatrix<double>& M = table[static_cast<std::size_t>(material.phase_id(ix, iy))];
      const double a = eps.c11(ix, iy), b = eps.c22(ix, iy), c = eps.c12(ix, iy);
      s1 += M(0, 0) * a + M(0, 1) * b + M(0, 2) * c;
      s2 += M(1, 0) * a + M(1, 1) * b + M(1, 2) * c;
      s3 += M(2, 0) * a + M(2, 1) * b + M(2, 2) * c;
    }
  const double n = static_cast<double>(eps.grid.cells());
  return {s1 / n, s2 / n, s3 / n};
}

/**
 * Relative equilibrium residual of a stress field: RMS of the discrete
 * divergence over the norm of the mean stress.  Throws if the mean stress is
 * zero.
 */
inline double equilibrium_error(const TensorField2& stress) {
  Fft2 fft(stress.grid);
  FourierField2 hat(stress.grid);
  fft.forward(stress, hat);
  return detail::equilibrium_error_hat(hat, FrequencyGrid(stress.grid));
}

/**
 * Basic scheme step: eps' = eps - Gamma0 * (C eps) with the zero mode pinned
 * to the applied mean strain.  Returns the equilibrium residual of the input.
 */
inline double classical_step(SpectralWorkspace& ws, const LoadCase& load, const TensorField2& in,
                             TensorField2& out) {
  detail::multiply_phasewise(ws.material, ws.C, in, ws.sigma);
  ws.fft.forward(ws.sigma, ws.hat_a);
  const double err = detail::equilibrium_error_hat(ws.hat_a, ws.freq);
  detail::scale_gamma_apply(ws.medium, ws.freq, ws.hat_a, 1.0, {0.0, 0.0, 0.0});
  ws.fft.inverse(ws.hat_a, ws.work);
  const SymTensor2<double> shift = load.E - in.mean();
  out.grid = in.grid;
  out.c11 = in.c11 - ws.work.c11 + shift.e11;
  out.c22 = in.c22 - ws.work.c22 + shift.e22;
  out.c12 = in.c12 - ws.work.c12 + shift.e12;
  return err;
}

/** Convenience form that builds a one-shot workspace. */
inline TensorField2 classical_step(const MaterialField& material, const ReferenceMedium& medium,
                                   const LoadCase& load, const TensorField2& eps) {
  SpectralWorkspace ws(material, medium);
  TensorField2 out(eps.grid);
  classical_step(ws, load, eps, out);
  return out;
}

/**
 * Operator-split polarization step.  In Fourier space the update combines the
 * stress and the reference stress as s_b = alpha sigma_hat - beta C0 eps_hat;
 * this combination leaves the equilibrium solution fixed, and on a compatible
 * iterate the step reduces to the accelerated map
 * eps' = eps - alpha (C + C0)^-1 C0 Gamma0 * sigma (alpha = beta = 2 is the
 * accelerated scheme).  The mean of eps_b is pinned to beta E, so the mean of
 * the iterate equals E at convergence rather than after every step.  Returns
 * the equilibrium residual of the input.
 */
inline double polarization_step(SpectralWorkspace& ws, const LoadCase& load, double alpha, double beta,
                                const TensorField2& in, TensorField2& out) {
  detail::multiply_phasewise(ws.material, ws.C, in, ws.sigma);
  ws.fft.forward(ws.sigma, ws.hat_a);
  const double err = detail::equilibrium_error_hat(ws.hat_a, ws.freq);
  ws.fft.forward(in, ws.hat_b);
  const VoigtMatrix<double>& C0 = ws.C0;
  ws.hat_a.c11 = alpha * ws.hat_a.c11 -
                 beta * (C0(0, 0) * ws.hat_b.c11 + C0(0, 1) * ws.hat_b.c22 + C0(0, 2) * ws.hat_b.c12);
  ws.hat_a.c22 = alpha * ws.hat_a.c22 -
                 beta * (C0(1, 0) * ws.hat_b.c11 + C0(1, 1) * ws.hat_b.c22 + C0(1, 2) * ws.hat_b.c12);
  ws.hat_a.c12 = alpha * ws.hat_a.c12 -
                 beta * (C0(2, 0) * ws.hat_b.c11 + C0(2, 1) * ws.hat_b.c22 + C0(2, 2) * ws.hat_b.c12);
  detail::scale_gamma_apply(ws.medium, ws.freq, ws.hat_a, -1.0, beta * load.E);
  ws.fft.inverse(ws.hat_a, ws.work);  // eps_b
  detail::ensure_shape(out, in.grid);
  for (int iy = 0; iy < in.grid.ny; ++iy)
    for (int ix = 0; ix < in.grid.nx; ++ix) {
      const double u1 = (1.0 - beta) * in.c11(ix, iy) + ws.work.c11(ix, iy);
      const double u2 = (1.0 - beta) * in.c22(ix, iy) + ws.work.c22(ix, iy);
      const double u3 = (1.0 - beta) * in.c12(ix, iy) + ws.work.c12(ix, iy);
      const double w1 = ws.sigma.c11(ix, iy) + C0(0, 0) * u1 + C0(0, 1) * u2 + C0(0, 2) * u3;
      const double w2 = ws.sigma.c22(ix, iy) + C0(1, 0) * u1 + C0(1, 1) * u2 + C0(1, 2) * u3;
      const double w3 = ws.sigma.c12(ix, iy) + C0(2, 0) * u1 + C0(2, 1) * u2 + C0(2, 2) * u3;
      const VoigtMatrix<double>& A = ws.inv_C_plus_C0[static_cast<std::size_t>(ws.material.phase_id(ix, iy))];
      out.c11(ix, iy) = A(0, 0) * w1 + A(0, 1) * w2 + A(0, 2) * w3;
      out.c22(ix, iy) = A(1, 0) * w1 + A(1, 1) * w2 + A(1, 2) * w3;
      out.c12(ix, iy) = A(2, 0) * w1 + A(2, 1) * w2 + A(2, 2) * w3;
    }
  return err;
}

/** Convenience form that builds a one-shot workspace. */
inline TensorField2 polarization_step(const MaterialField& material, const ReferenceMedium& medium,
                                      const LoadCase& load, const TensorField2& eps, double alpha,
                                      double beta) {
  SpectralWorkspace ws(material, medium);
  TensorField2 out(eps.grid);
  polarization_step(ws, load, alpha, beta, eps, out);
  return out;
}

/**
 * Explicit pseudo-time step on the dual energy.  The polarization update
 * tau' = P_range[tau + a (d^+ tau - eps)] uses the per-phase pseudo-inverse of
 * d = C - C0 and keeps tau in the range of d; the strain is then the
 * constrained response eps' = E + F^-1[-Gamma0_hat tau'_hat].  Updates tau in
 * place and returns the equilibrium residual of the input strain.
 */
inline double gradient_flow_step(SpectralWorkspace& ws, const LoadCase& load, const TensorField2& eps_in,
                                 TensorField2& tau, TensorField2& eps_out, double a) {
  if (!(tau.grid == eps_in.grid)) throw std::invalid_argument("gradient_flow_step: tau grid mismatch");
  detail::multiply_phasewise(ws.material, ws.C, eps_in, ws.sigma);
  ws.fft.forward(ws.sigma, ws.hat_a);
  const double err = detail::equilibrium_error_hat(ws.hat_a, ws.freq);
  for (int iy = 0; iy < eps_in.grid.ny; ++iy)
    for (int ix = 0; ix < eps_in.grid.nx; ++ix) {
      const std::size_t p = static_cast<std::size_t>(ws.material.phase_id(ix, iy));
      const VoigtMatrix<double>& B = ws.pinv_d[p];
      const VoigtMatrix<double>& P = ws.proj_d[p];
      const double t1 = tau.c11(ix, iy), t2 = tau.c22(ix, iy), t3 = tau.c12(ix, iy);
      const double v1 = t1 + a * (B(0, 0) * t1 + B(0, 1) * t2 + B(0, 2) * t3 - eps_in.c11(ix, iy));
      const double v2 = t2 + a * (B(1, 0) * t1 + B(1, 1) * t2 + B(1, 2) * t3 - eps_in.c22(ix, iy));
      const double v3 = t3 + a * (B(2, 0) * t1 + B(2, 1) * t2 + B(2, 2) * t3 - eps_in.c12(ix, iy));
      tau.c11(ix, iy) = P(0, 0) * v1 + P(0, 1) * v2 + P(0, 2) * v3;
      tau.c22(ix, iy) = P(1, 0) * v1 + P(1, 1) * v2 + P(1, 2) * v3;
      tau.c12(ix, iy) = P(2, 0) * v1 + P(2, 1) * v2 + P(2, 2) * v3;
    }
  ws.fft.forward(tau, ws.hat_a);
  detail::scale_gamma_apply(ws.medium, ws.freq, ws.hat_a, -1.0, load.E);
  ws.fft.inverse(ws.hat_a, eps_out);
  return err;
}

/** Convenience form: returns (eps', tau') without touching the inputs. */
inline std::pair<TensorField2, TensorField2> gradient_flow_step(const MaterialField& material,
                                                                const ReferenceMedium& medium,
                                                                const LoadCase& load,
                                                                const TensorField2& eps,
                                                                const TensorField2& tau, double a) {
  SpectralWorkspace ws(material, medium);
  TensorField2 tau_next = tau, eps_next(eps.grid);
  gradient_flow_step(ws, load, eps, tau_next, eps_next, a);
  return {std::move(eps_next), std::move(tau_next)};
}

/**
 * Dual energy density 0.5 mean(tau : d^-1 tau + eps : C0 eps) with d = C - C0
 * inverted per phase.  Throws if tau is nonzero on a cell whose d is singular.
 */
inline double energy(const SpectralWorkspace& ws, const TensorField2& tau, const TensorField2& eps) {
  if (!(tau.grid == ws.material.grid) || !(eps.grid == ws.material.grid))
    throw std::invalid_argument("energy: field does not match material grid");
  double acc = 0.0;
  for (int iy = 0; iy < tau.grid.ny; ++iy)
    for (int ix = 0; ix < tau.grid.nx; ++ix) {
      const std::size_t p = static_cast<std::size_t>(ws.material.phase_id(ix, iy));
      const double t1 = tau.c11(ix, iy), t2 = tau.c22(ix, iy), t3 = tau.c12(ix, iy);
      if (!ws.d_invertible[p]) {
        if (t1 != 0.0 || t2 != 0.0 || t3 != 0.0)
          throw SingularMatrixError("energy: nonzero polarization on a cell where C - C0 is singular (phase " +
                                    std::to_string(ws.material.phase_id(ix, iy)) + ")");
      } else {
        const VoigtMatrix<double>& B = ws.pinv_d[p];
        const double y1 = B(0, 0) * t1 + B(0, 1) * t2 + B(0, 2) * t3;
        const double y2 = B(1, 0) * t1 + B(1, 1) * t2 + B(1, 2) * t3;
        const double y3 = B(2, 0) * t1 + B(2, 1) * t2 + B(2, 2) * t3;
        acc += 0.5 * (t1 * y1 + t2 * y2 + 2.0 * t3 * y3);
      }
      const VoigtMatrix<double>& C0 = ws.C0;
      const double e1 = eps.c11(ix, iy), e2 = eps.c22(ix, iy), e3 = eps.c12(ix, iy);
      const double z1 = C0(0, 0) * e1 + C0(0, 1) * e2 + C0(0, 2) * e3;
      const double z2 = C0(1, 0) * e1 + C0(1, 1) * e2 + C0(1, 2) * e3;
      const double z3 = C0(2, 0) * e1 + C0(2, 1) * e2 + C0(2, 2) * e3;
      acc += 0.5 * (e1 * z1 + e2 * z2 + 2.0 * e3 * z3);
    }
  return acc / tau.grid.cells();
}

/** Convenience overload building a one-shot workspace. */
inline double energy(const MaterialField& material, const ReferenceMedium& medium,
                     const TensorField2& tau, const TensorField2& eps) {
  SpectralWorkspace ws(material, medium);
  return energy(ws, tau, eps);
}

/** Step map for the basic scheme; the workspace must outlive the callable. */
inline StepFn make_classical_step(SpectralWorkspace& ws, const LoadCase& load) {
  return [&ws, load](const TensorField2& in, TensorField2& out) {
    return classical_step(ws, load, in, out);
  };
}

/** Step map for the polarization scheme; alpha = beta = 2 is the accelerated scheme. */
inline StepFn make_polarization_step(SpectralWorkspace& ws, const LoadCase& load, double alpha = 2.0,
                                     double beta = 2.0) {
  return [&ws, load, alpha, beta](const TensorField2& in, TensorField2& out) {
    return polarization_step(ws, load, alpha, beta, in, out);
  };
}

/**
 * Step map for the gradient-flow scheme.  The callable owns the polarization
 * state, initialized to d * eps on the first call; use a fresh callable per
 * solve.
 */
inline StepFn make_gradient_flow_step(SpectralWorkspace& ws, const LoadCase& load, double a) {
  auto tau = std::make_shared<TensorField2>();
  return [&ws, load, a, tau](const TensorField2& in, TensorField2& out) {
    if (tau->grid.cells() == 0) detail::multiply_phasewise(ws.material, ws.d, in, *tau);
    return gradient_flow_step(ws, load, in, *tau, out, a);
  };
}

/** Final strain iterate with its report. */
struct SolveResult {
  TensorField2 strain;
  SolveReport report;
};

/**
 * Iterates a step map from the uniform strain E until the equilibrium
 * residual reaches the tolerance.  `iterations` counts step evaluations and
 * residual_history[i] is the residual of iterate i; the returned strain is
 * always the iterate the last history entry certifies, so a homogeneous cell
 * converges after exactly one evaluation with eps identically E.  The
 * observer, if set, runs after each accepted update.
 */
inline SolveResult solve_fixed_point(const StepFn& step, const MaterialField& material,
                                     const LoadCase& load, const FixedPointConfig& config = {},
                                     const IterateObserver& on_update = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res{TensorField2(material.grid, load.E), {}};
  TensorField2 next(material.grid);
  SolveReport& rep = res.report;
  for (int it = 1; it <= config.max_iterations; ++it) {
    const double err = step(res.strain, next);
    rep.iterations = it;
    rep.residual_history.push_back(err);
    if (err <= config.tolerance) {
      rep.converged = true;
      break;
    }
    if (it == config.max_iterations) break;  // keep the iterate the last residual describes
    std::swap(res.strain, next);
    if (on_update) on_update(it, res.strain);
  }
  rep.stop_reason = rep.converged ? "converged" : "max_iterations";
  rep.effective_stress = average_stress(material, res.strain);
  rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace unitcell
