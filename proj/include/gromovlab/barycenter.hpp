#pragma once

#include "gromovlab/coupling.hpp"
#include "gromovlab/mmspace.hpp"
#include "gromovlab/params.hpp"

#include <optional>
#include <vector>

namespace gromovlab {

/// rho_i >= 0 summing to 1 within 1e-12. Spaces with rho_i = 0 are dropped
/// before solving.
struct BarycenterWeights {
  Vector rho;

  static BarycenterWeights uniform(Eigen::Index n);
  void validate(Eigen::Index n) const;
};

struct FreeBarycenter {
  MmSpace bary;
  MultiPlan plan;            // over the spaces with positive weight
  std::vector<std::size_t> axes;  // index of each plan axis in the input list
  std::vector<std::vector<Eigen::Index>> atoms;  // product atom behind each barycenter atom
  double mgw_value = 0.0;
  double pruned_mass = 0.0;
  bool converged = true;
};

struct FixedBarycenter {
  Vector sigma_star;  // S-axis marginal of plan
  MultiPlan plan;     // axes: positive-weight spaces, then the support
  std::vector<std::size_t> axes;
  MmSpace bary;       // support restricted to atoms with positive weight
  double mgw_value = 0.0;
  bool converged = true;
};

/// Multi-marginal problem with c_ij = rho_i rho_j / 2; the barycenter lives on
/// the product atoms with mass above prune_tol (default 1e-6 / tensor size),
/// with d* = sum rho_i d_i and renormalized plan masses as weights.
/// Throws EmptySupport if pruning leaves nothing.
FreeBarycenter free_support_barycenter(const std::vector<MmSpace>& spaces, const BarycenterWeights& rho,
                                       const SolverParams& params = {}, std::optional<double> prune_tol = {});

/// Weights on a prescribed support (distance matrix) that minimize the
/// rho-weighted GW objective; the support axis is left unconstrained.
FixedBarycenter fixed_support_barycenter(const std::vector<MmSpace>& spaces, const BarycenterWeights& rho,
                                         const Matrix& support_dist, const SolverParams& params = {});

/// sum_i rho_i GW^2(candidate, X_i), skipping zero weights.
double barycenter_objective(const MmSpace& candidate, const std::vector<MmSpace>& spaces,
                            const BarycenterWeights& rho, const SolverParams& params = {}, int threads = 1);

}  // namespace gromovlab
