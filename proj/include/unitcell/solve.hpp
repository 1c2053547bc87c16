#pragma once

/**
 * @file solve.hpp
 *
 * Configuration and reporting types shared by the fixed-point driver and the
 * projection-stabilized driver.
 */

#include <string>
#include <vector>

#include "unitcell/tensor.hpp"

namespace unitcell {

/** Stopping control and scheme parameters for iterative solves. */
struct FixedPointConfig {
  double tolerance = 1e-4;   // dimensionless equilibrium residual bound
  int max_iterations = 10000;
  double alpha = 2.0;        // polarization scheme
  double beta = 2.0;         // polarization scheme
  double a = -0.5;           // gradient-flow pseudo-timestep (stable for small negative values)
};

/** One basis enlargement of the projection-stabilized driver. */
struct GrowthEvent {
  int iteration = 0;  // outer iteration at which the basis grew
  int added = 0;      // columns appended (1 or 2)
  int new_size = 0;   // basis dimension afterwards
};

/** Outcome of an iterative solve. */
struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // one entry per iteration, residual of that iterate
  bool converged = false;
  SymTensor2<double> effective_stress;   // mean stress of the final iterate
  double elapsed = 0.0;                  // seconds, informational only
  std::string stop_reason;               // "converged", "max_iterations", "stagnation", "basis_cap"

  // projection-stabilized solves only
  int basis_size = 0;
  std::vector<GrowthEvent> growth_events;
  long f_evaluations = 0;  // operator applications including basis-column probes
};

}  // namespace unitcell
