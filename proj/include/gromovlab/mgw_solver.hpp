#pragma once

#include "gromovlab/coupling.hpp"
#include "gromovlab/mmspace.hpp"
#include "gromovlab/params.hpp"
#include "gromovlab/trace.hpp"

#include <optional>
#include <vector>

namespace gromovlab {

/// Weights c[i][j] of the pairwise cost
///   c(x, x') = sum_{i,j} c[i][j] (d_i(x_i, x_i') - d_j(x_j, x_j'))^2
/// where the sum runs over ordered pairs, so each unordered pair counts twice.
struct PairwiseCoefficients {
  Matrix c;

  /// c[i][j] = value off the diagonal.
  static PairwiseCoefficients constant(Eigen::Index n, double value);
  /// Throws InvalidParameter unless c is N x N, symmetric, nonnegative with a zero diagonal.
  void validate(Eigen::Index n) const;
};

/// Cost eps (d_X - d_Y)^2 + (d_S - d_X)^2 + (d_S - d_Y)^2 over axes (S, X, Y).
struct EpsCost {
  double eps = 1.0;

  PairwiseCoefficients coefficients() const;
};

struct MgwResult {
  MultiPlan plan;
  double value = 0.0;
  bool converged = false;
  int outer_iterations = 0;
  std::vector<TraceEntry> trace;
};

struct MgwEpsResult {
  Plan3 plan;
  double value = 0.0;      // eps * quad_part + anchor_sx + anchor_sy
  double quad_part = 0.0;  // X-Y mismatch of the plan
  double anchor_sx = 0.0;
  double anchor_sy = 0.0;
  bool converged = false;
  int outer_iterations = 0;
};

/// Sum over i < j of 2 c[i][j] Q_ij, with Q_ij the quadratic mismatch of the
/// (i, j) pair marginal. Throws ShapeMismatch if the plan does not fit.
double mgw_objective(const std::vector<MmSpace>& spaces, const PairwiseCoefficients& coeffs, const MultiPlan& plan);

/// Entropic alternating scheme on the full product tensor. Axes whose mask
/// entry is false carry no marginal constraint. An empty mask constrains all.
/// Throws TensorTooLarge beyond params.tensor_cap entries.
MgwResult solve_mgw(const std::vector<MmSpace>& spaces, const PairwiseCoefficients& coeffs,
                    const SolverParams& params = {}, std::vector<bool> constrained = {}, bool keep_trace = false);

/// The three-space problem with EpsCost. A warm start replaces the restarts
/// with a single run that begins at the eta floor.
MgwEpsResult solve_mgw_eps(const MmSpace& s, const MmSpace& x, const MmSpace& y, double eps,
                           const SolverParams& params = {}, const Plan3* warm_start = nullptr);

}  // namespace gromovlab
