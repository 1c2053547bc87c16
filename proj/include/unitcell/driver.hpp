#pragma once

/**
 * @file driver.hpp
 *
 * High-level solve entry points shared by the command line tool and the test
 * suites: scheme selection, projection-stabilized wrapping of the strain
 * steps, and effective-stiffness assembly.
 */

#include <array>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "unitcell/fields.hpp"
#include "unitcell/rpm.hpp"
#include "unitcell/spectral.hpp"

namespace unitcell {

enum class Scheme { classical, polarization, gradient_flow };

/** Scheme, its parameters, and optional projection stabilization. */
struct SolverChoice {
  Scheme scheme = Scheme::classical;
  double alpha = 2.0;       // polarization (alpha = beta = 2 is the accelerated scheme)
  double beta = 2.0;
  double a = -0.5;          // gradient-flow pseudo-timestep
  bool stabilized = false;  // wrap the step with rpm_solve
  RPMConfig rpm;            // tolerance and max_outer are taken from FixedPointConfig
};

inline std::string scheme_name(const SolverChoice& c) {
  std::string base;
  switch (c.scheme) {
    case Scheme::classical: base = "classical"; break;
    case Scheme::polarization: base = "polarization"; break;
    case Scheme::gradient_flow: base = "gradient_flow"; break;
  }
  return c.stabilized ? "rpm-" + base : base;
}

/** Step map for a choice; the workspace must outlive the callable. */
inline StepFn make_step(SpectralWorkspace& ws, const LoadCase& load, const SolverChoice& c) {
  switch (c.scheme) {
    case Scheme::classical:
      return make_classical_step(ws, load);
    case Scheme::polarization:
      return make_polarization_step(ws, load, c.alpha, c.beta);
    case Scheme::gradient_flow:
      if (c.stabilized)
        throw std::invalid_argument(
            "make_step: the gradient-flow scheme carries internal polarization state and cannot "
            "be projection-stabilized");
      return make_gradient_flow_step(ws, load, c.a);
  }
  throw std::logic_error("make_step: unknown scheme");
}

namespace detail {

/**
 * Memoizing bridge from a strain step to a flattened fixed-point operator:
 * one step evaluation serves both the residual functional and the operator
 * when called on the same vector, so stabilized solves cost the same number
 * of transforms per iteration as plain ones.
 */
class StepVectorOp {
 public:
  StepVectorOp(StepFn step, const Grid2& g) : s_(std::make_shared<State>()) {
    s_->step = std::move(step);
    s_->grid = g;
    s_->out = TensorField2(g);
  }

  VecFn op() const {
    auto sp = s_;
    return [sp](const Eigen::VectorXd& u) {
      eval(*sp, u);
      return sp->fu;
    };
  }

  VecResidualFn residual() const {
    auto sp = s_;
    return [sp](const Eigen::VectorXd& u) {
      eval(*sp, u);
      return sp->err;
    };
  }

 private:
  struct State {
    StepFn step;
    Grid2 grid;
    TensorField2 in, out;
    Eigen::VectorXd u, fu;
    double err = 0.0;
    bool valid = false;
  };

  static void eval(State& st, const Eigen::VectorXd& u) {
    if (st.valid && st.u.size() == u.size() && (st.u.array() == u.array()).all()) return;
    st.u = u;
    st.in = unflatten(u, st.grid);
    st.err = st.step(st.in, st.out);
    st.fu = flatten(st.out);
    st.valid = true;
  }

  std::shared_ptr<State> s_;
};

}  // namespace detail

/**
 * Runs one cell problem under the given choice.  Stabilized solves flatten
 * the strain field for the generic projection driver (tolerance and iteration
 * cap come from the fixed-point config so both paths stop identically); their
 * reports carry the basis fields.
 */
inline SolveResult solve_cell(const MaterialField& material, const ReferenceMedium& medium,
                              const LoadCase& load, const SolverChoice& choice,
                              const FixedPointConfig& fp = {}, const IterateObserver& on_update = {},
                              std::ostream* event_log = nullptr, RPMState* final_state = nullptr) {
  SpectralWorkspace ws(material, medium);
  StepFn step = make_step(ws, load, choice);
  if (!choice.stabilized) return solve_fixed_point(step, material, load, fp, on_update);
  detail::StepVectorOp bridge(std::move(step), material.grid);
  RPMConfig rc = choice.rpm;
  rc.tolerance = fp.tolerance;
  rc.max_outer = fp.max_iterations;
  VecObserver vec_obs;
  if (on_update)
    vec_obs = [&on_update, &material](int it, const Eigen::VectorXd& u) {
      on_update(it, unflatten(u, material.grid));
    };
  auto [u, rep] = rpm_solve(bridge.op(), flatten(TensorField2(material.grid, load.E)),
                            bridge.residual(), rc, vec_obs, event_log, final_state);
  SolveResult res{unflatten(u, material.grid), std::move(rep)};
  res.report.effective_stress = average_stress(material, res.strain);
  return res;
}

/** Effective stiffness column by column from three unit-strain solves. */
inline std::pair<VoigtMatrix<double>, std::array<SolveReport, 3>> effective_stiffness(
    const MaterialField& material, const ReferenceMedium& medium, const SolverChoice& choice,
    const FixedPointConfig& fp = {}) {
  VoigtMatrix<double> C;
  std::array<SolveReport, 3> reports;
  for (int j = 0; j < 3; ++j) {
    VoigtVector<double> unit = VoigtVector<double>::Zero();
    unit[j] = 1.0;
    SolveResult res = solve_cell(material, medium, LoadCase{SymTensor2<double>::from_vec(unit)}, choice, fp);
    C.col(j) = res.report.effective_stress.vec();
    reports[static_cast<std::size_t>(j)] = std::move(res.report);
  }
  return {C, reports};
}

}  // namespace unitcell
