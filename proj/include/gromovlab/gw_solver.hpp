#pragma once

#include "gromovlab/coupling.hpp"
#include "gromovlab/mmspace.hpp"
#include "gromovlab/params.hpp"
#include "gromovlab/trace.hpp"

#include <vector>

namespace gromovlab {

struct GwResult {
  Plan2 plan;
  double value = 0.0;      // GW distance
  double objective = 0.0;  // value^2, the quadratic functional at `plan`
  bool converged = false;  // false: outer budget ran out, best iterate returned
  int outer_iterations = 0;
  std::vector<TraceEntry> trace;  // winning restart only, when requested; empty if a vertex start won
};

/// sum_{i,j,k,l} (d_X[i,k] - d_Y[j,l])^2 plan[i,j] plan[k,l].
/// Throws MarginalMismatch if the plan does not couple the two spaces.
double gw_objective(const MmSpace& x, const MmSpace& y, const Plan2& plan);

GwResult solve_gw(const MmSpace& x, const MmSpace& y, const SolverParams& params = {}, bool keep_trace = false);

/// gw_objective(plan) - solve_gw(x, y).objective.
double optimality_residual(const MmSpace& x, const MmSpace& y, const Plan2& plan, const SolverParams& params = {});

/// Acceptance threshold for a residual against the reference value^2.
inline double optimality_tolerance(const SolverParams& params, double reference_objective) {
  return params.opt_tol * (1.0 + reference_objective);
}

}  // namespace gromovlab
