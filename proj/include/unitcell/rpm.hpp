#pragma once

/**
 * @file rpm.hpp
 *
 * Recursive projection stabilization for fixed-point iterations u <- F(u).
 * The driver identifies the slowly-contracting (or expanding) subspace from
 * observed iterate differences, applies Newton steps there through a small
 * projected Jacobian, and plain fixed-point iteration on the orthogonal
 * complement.  Generic over flattened solution vectors.
 */

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "unitcell/solve.hpp"
#include "unitcell/tensor.hpp"

namespace unitcell {

using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using VecResidualFn = std::function<double(const Eigen::VectorXd&)>;
using VecObserver = std::function<void(int, const Eigen::VectorXd&)>;

/** Controls for the projection-stabilized driver. */
struct RPMConfig {
  int n_max = 10;             // iterations between basis-growth attempts (>= 2)
  double tolerance = 1e-4;
  int max_basis = 30;         // cap on the stabilized subspace; 0 disables projection
  double growth_ratio = 10.0; // column-ratio threshold deciding 1 vs 2 new basis vectors
  double fd_step = 0.0;       // finite-difference step; 0 selects sqrt(eps)*(1 + |u|_inf)
  int max_outer = 10000;
};

/** Driver state; exposed so tests can check the subspace invariants. */
struct RPMState {
  Eigen::MatrixXd Z;        // N x m orthonormal basis of the stabilized subspace
  Eigen::MatrixXd W;        // F_u Z probe cache, N x m
  Eigen::MatrixXd H;        // m x m projected Jacobian Z^T F_u Z
  Eigen::VectorXd z;        // subspace coordinates of the iterate
  Eigen::VectorXd q;        // complement part, Z^T q = 0
  Eigen::VectorXd u;        // current iterate, u = Z z + q
  int nu = 0;               // iterations since the last growth
  Eigen::VectorXd dq_curr, dq_prev;  // last two complement differences
};

/**
 * Appends one or two orthonormal directions extracted from the last two
 * complement differences.  D = [dq_curr, dq_prev] is QR-factored; a dominant
 * first column (|T11|/|T22| >= kappa, or T22 = 0) signals a single real slow
 * mode and contributes one vector, otherwise both columns enter (a complex
 * pair).  New columns are re-orthonormalized against the existing basis;
 * directions that collapse into span(Z) are dropped.
 */
inline Eigen::MatrixXd grow_basis(const Eigen::VectorXd& dq_prev, const Eigen::VectorXd& dq_curr,
                                  const Eigen::MatrixXd& Z, double kappa) {
  if (!(kappa > 1.0)) throw std::invalid_argument("grow_basis: kappa must exceed 1");
  if (dq_prev.size() != dq_curr.size())
    throw std::invalid_argument("grow_basis: difference vectors have mismatched sizes");
  if (Z.size() != 0 && Z.rows() != dq_curr.size())
    throw std::invalid_argument("grow_basis: basis rows do not match the vectors");
  if (!(dq_curr.norm() >= 1e-14))
    throw std::invalid_argument("grow_basis: dq_curr norm below 1e-14, no growth signal (iteration stagnated)");
  Eigen::MatrixXd D(dq_curr.size(), 2);
  D.col(0) = dq_curr;
  D.col(1) = dq_prev;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(D);
  const Eigen::MatrixXd Qthin = qr.householderQ() * Eigen::MatrixXd::Identity(D.rows(), 2);
  const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(2, 2).triangularView<Eigen::Upper>();
  const double t11 = std::fabs(R(0, 0)), t22 = std::fabs(R(1, 1));
  const int take = (t22 == 0.0 || t11 >= kappa * t22) ? 1 : 2;
  std::vector<Eigen::VectorXd> added;
  for (int j = 0; j < take; ++j) {
    Eigen::VectorXd v = Qthin.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      if (Z.cols() > 0) v -= Z * (Z.transpose() * v);
      for (const Eigen::VectorXd& w : added) v -= w * w.dot(v);
    }
    const double nv = v.norm();
    if (nv > 1e-8) added.push_back(v / nv);
  }
  Eigen::MatrixXd out(dq_curr.size(), Z.cols() + static_cast<Eigen::Index>(added.size()));
  if (Z.cols() > 0) out.leftCols(Z.cols()) = Z;
  for (std::size_t k = 0; k < added.size(); ++k) out.col(Z.cols() + static_cast<Eigen::Index>(k)) = added[k];
  return out;
}

/**
 * Forward-difference directional derivatives of F at u along the columns of Z:
 * column j = (F(u + h Z_j) - fu) / h with fu = F(u) supplied by the caller.
 */
inline Eigen::MatrixXd jacobian_times_basis(const VecFn& F, const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& fu, const Eigen::MatrixXd& Z,
                                            double h) {
  if (!(h > 0.0)) throw std::invalid_argument("jacobian_times_basis: h must be > 0");
  Eigen::MatrixXd W(u.size(), Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j) W.col(j) = (F(u + h * Z.col(j)) - fu) / h;
  return W;
}

/** Same, evaluating F(u) itself. */
inline Eigen::MatrixXd jacobian_times_basis(const VecFn& F, const Eigen::VectorXd& u,
                                            const Eigen::MatrixXd& Z, double h) {
  return jacobian_times_basis(F, u, F(u), Z, h);
}

/**
 * Newton step in subspace coordinates: z' = z + (I - H)^-1 (zeta - z).
 * A singular (I - H) means the projected Jacobian has a unit eigenvalue, so
 * the fixed point is degenerate along a basis direction.
 */
inline Eigen::VectorXd newton_update(const Eigen::VectorXd& z, const Eigen::VectorXd& zeta,
                                     const Eigen::MatrixXd& H) {
  const Eigen::Index m = z.size();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) - H);
  if (!lu.isInvertible())
    throw SingularMatrixError(
        "newton_update: I - H is singular (projected Jacobian has an eigenvalue equal to 1)");
  return z + lu.solve(zeta - z);
}

/**
 * Projection-stabilized fixed-point solve.
 *
 * Each outer iteration evaluates the residual of the current iterate and, if
 * above tolerance, one application of F; the iterate splits as u = Z z + q and
 * updates by a Newton step in the basis and plain substitution outside it.
 * Every n_max iterations the basis grows from the last two complement
 * differences and the projected Jacobian gains the matching finite-difference
 * columns; probe columns are kept, never refreshed, unless (I - H) turns
 * singular, which triggers exactly one full recompute before failing.  With
 * max_basis = 0 the driver reproduces plain fixed-point iteration exactly.
 *
 * The returned iterate is always the one certified by the last residual in
 * the history.  Non-convergence is reported, not thrown: stop_reason is one of
 * "converged", "max_iterations", "stagnation" (the full update moved less than
 * 1e-14 while the residual stayed high) or "basis_cap" (growth was requested
 * past max_basis).  A frozen complement alone is not stagnation: right after a
 * capture the complement goes quiet while the Newton part still moves, so the
 * complement difference only gates basis growth.
 */
inline std::pair<Eigen::VectorXd, SolveReport> rpm_solve(const VecFn& F, const Eigen::VectorXd& u0,
                                                         const VecResidualFn& residual,
                                                         const RPMConfig& config = {},
                                                         const VecObserver& on_update = {},
                                                         std::ostream* event_log = nullptr,
                                                         RPMState* final_state = nullptr) {
  if (config.n_max < 2) throw std::invalid_argument("rpm_solve: n_max must be >= 2");
  if (!(config.growth_ratio > 1.0)) throw std::invalid_argument("rpm_solve: growth_ratio must exceed 1");
  if (config.max_basis < 0) throw std::invalid_argument("rpm_solve: max_basis must be >= 0");
  if (config.fd_step < 0.0) throw std::invalid_argument("rpm_solve: fd_step must be >= 0");
  if (config.max_outer < 1) throw std::invalid_argument("rpm_solve: max_outer must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index N = u0.size();
  RPMState st;
  st.u = u0;
  st.q = u0;
  st.z.resize(0);
  st.Z.resize(N, 0);
  st.W.resize(N, 0);
  st.H.resize(0, 0);
  SolveReport rep;
  bool capped = false, stagnated = false, h_recomputed = false;
  for (int it = 1; it <= config.max_outer; ++it) {
    const double err = residual(st.u);
    rep.iterations = it;
    rep.residual_history.push_back(err);
    if (err <= config.tolerance) {
      rep.converged = true;
      break;
    }
    if (it == config.max_outer) break;  // keep the iterate the last residual describes
    Eigen::VectorXd fu = F(st.u);
    ++rep.f_evaluations;

    if (st.nu > config.n_max) {
      st.nu = 0;
      if (config.max_basis > 0 && st.Z.cols() >= config.max_basis) {
        capped = true;
      } else if (config.max_basis > 0 && st.dq_prev.size() > 0 && st.dq_curr.norm() >= 1e-14) {
        const Eigen::MatrixXd Znew = grow_basis(st.dq_prev, st.dq_curr, st.Z, config.growth_ratio);
        const Eigen::Index added = Znew.cols() - st.Z.cols();
        if (added > 0) {
          const double h = config.fd_step > 0.0
                               ? config.fd_step
                               : std::sqrt(std::numeric_limits<double>::epsilon()) *
                                     (1.0 + st.u.lpNorm<Eigen::Infinity>());
          const Eigen::MatrixXd Wadd =
              jacobian_times_basis(F, st.u, fu, Znew.rightCols(added), h);
          rep.f_evaluations += added;
          Eigen::MatrixXd W(N, Znew.cols());
          W.leftCols(st.Z.cols()) = st.W;
          W.rightCols(added) = Wadd;
          st.Z = Znew;
          st.W = W;
          st.H = st.Z.transpose() * st.W;
          st.z = st.Z.transpose() * st.u;   // reproject the current iterate
          st.q = st.u - st.Z * st.z;
          st.dq_curr.resize(0);
          st.dq_prev.resize(0);
          rep.growth_events.push_back({it, static_cast<int>(added), static_cast<int>(st.Z.cols())});
          if (event_log)
            (*event_log) << "iteration " << it << " residual " << err << " basis " << st.Z.cols()
                         << " grew " << added << "\n";
        }
      }
    }

    Eigen::VectorXd q_new, u_next;
    if (st.Z.cols() == 0) {
      q_new = fu;
      u_next = fu;
    } else {
      const Eigen::VectorXd zeta = st.Z.transpose() * fu;
      Eigen::VectorXd z_next;
      try {
        z_next = newton_update(st.z, zeta, st.H);
      } catch (const SingularMatrixError&) {
        if (h_recomputed)
          throw SingularMatrixError(
              "rpm_solve: I - H stays singular after a full recompute; enlarge max_basis so the "
              "unit-eigenvalue mode can be resolved, or change the reference medium");
        h_recomputed = true;
        const double h = config.fd_step > 0.0
                             ? config.fd_step
                             : std::sqrt(std::numeric_limits<double>::epsilon()) *
                                   (1.0 + st.u.lpNorm<Eigen::Infinity>());
        st.W = jacobian_times_basis(F, st.u, fu, st.Z, h);
        rep.f_evaluations += st.Z.cols();
        st.H = st.Z.transpose() * st.W;
        try {
          z_next = newton_update(st.z, zeta, st.H);
        } catch (const SingularMatrixError&) {
          throw SingularMatrixError(
              "rpm_solve: I - H is singular (projected Jacobian has a unit eigenvalue); enlarge "
              "max_basis so the mode can be resolved, or change the reference medium");
        }
      }
      q_new = fu - st.Z * zeta;
      q_new -= st.Z * (st.Z.transpose() * q_new);  // keep the complement exactly orthogonal
      u_next = st.Z * z_next + q_new;
      st.z = z_next;
    }
    if ((u_next - st.u).norm() < 1e-14) {
      stagnated = true;  // keeps st.u, the iterate the last residual certifies
      break;
    }
    st.dq_prev = st.dq_curr;
    st.dq_curr = q_new - st.q;
    st.q = q_new;
    st.u = u_next;
    ++st.nu;
    if (on_update) on_update(it, st.u);
  }
  rep.basis_size = static_cast<int>(st.Z.cols());
  rep.stop_reason = rep.converged ? "converged"
                    : stagnated   ? "stagnation"
                    : capped      ? "basis_cap"
                                  : "max_iterations";
  rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (event_log)
    (*event_log) << "done reason " << rep.stop_reason << " iterations " << rep.iterations
                 << " basis " << rep.basis_size << "\n";
  Eigen::VectorXd u = st.u;
  if (final_state) *final_state = std::move(st);
  return {std::move(u), std::move(rep)};
}

}  // namespace unitcell
