#pragma once

#include <cstddef>
#include <cstdint>

namespace gromovlab {

/// Knobs of the entropic alternating scheme shared by every quadratic solver.
///
/// `eta` and `eta_floor` are expressed in units of the mean entry of the
/// first linearized cost, so the same defaults work for any distance scale.
/// Each outer step multiplies eta by `anneal_factor` until it reaches the
/// floor; the run converges once the relative objective change at the floor
/// drops below `outer_tol`.
struct SolverParams {
  double eta = 1.0;
  double anneal_factor = 0.7;
  double eta_floor = 1e-3;
  int outer_max = 200;
  int sinkhorn_max = 2000;
  double sinkhorn_tol = 1e-9;
  double outer_tol = 1e-8;
  int restarts = 3;
  std::uint64_t seed = 0;
  bool round_plan = true;

  // Conditional-gradient refinement on the unregularized objective, run after
  // the entropic phase. Directions come from the exact transport LP.
  bool polish = true;
  int polish_max = 200;
  double polish_tol = 1e-12;
  std::size_t polish_cap = 200'000;  // skip polishing larger tensors

  // Extra conditional-gradient runs from random vertices of the polytope,
  // for tensors up to vertex_start_cap entries.
  int vertex_starts = 64;
  std::size_t vertex_start_cap = 2'000;

  // A plan is accepted as optimal when its residual <= opt_tol * (1 + GW^2).
  double opt_tol = 1e-5;
  std::size_t tensor_cap = 10'000'000;

  /// Throws InvalidParameter on non-positive entries or anneal_factor >= 1.
  void validate() const;
};

}  // namespace gromovlab
