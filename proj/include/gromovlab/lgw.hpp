#pragma once

#include "gromovlab/coupling.hpp"
#include "gromovlab/mmspace.hpp"
#include "gromovlab/params.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gromovlab {

enum class LgwMode { Exact, Maps };

struct LgwResult {
  double value = 0.0;  // square root of the minimized X-Y mismatch
  std::optional<Plan3> plan3;  // empty in maps mode
  double residual_sx = 0.0;
  double residual_sy = 0.0;
  LgwMode mode = LgwMode::Exact;
  bool converged = true;
};

/// Squared GW values of the anchor plans' reference problems, when already known.
struct AnchorReference {
  double gw2_sx = 0.0;
  double gw2_sy = 0.0;
};

/// Q_XY of the plan's (X, Y) projection.
double lgw_objective(const MmSpace& x, const MmSpace& y, const Plan3& plan3);

/// Minimizes Q_XY over 3-plans with fixed (S, X) and (S, Y) projections. For
/// each reference atom s the plan couples the conditionals piSX[s,.]/sigma[s]
/// and piSY[s,.]/sigma[s], so every iterate stays exactly feasible.
/// Throws AnchorNotOptimal if an anchor's residual exceeds the tolerance.
LgwResult solve_lgw_exact(const MmSpace& s, const MmSpace& x, const MmSpace& y, const Plan2& piSX, const Plan2& piSY,
                          const SolverParams& params = {});
LgwResult solve_lgw_exact(const MmSpace& s, const MmSpace& x, const MmSpace& y, const Plan2& piSX, const Plan2& piSY,
                          const SolverParams& params, const AnchorReference& reference);

/// sqrt of sum_{s,s'} (d_X[T1 s, T1 s'] - d_Y[T2 s, T2 s'])^2 sigma[s] sigma[s'].
double lgw_via_maps(const MmSpace& s, const MmSpace& x, const MmSpace& y, const DiscreteMap& t1,
                    const DiscreteMap& t2);

struct BoundsReport {
  double gw_xy = 0.0;
  double lgw = 0.0;
  double gw_sx = 0.0;
  double gw_sy = 0.0;
  double tol = 0.0;
  bool lower_ok = false;  // gw_xy <= lgw + tol
  bool upper_ok = false;  // lgw <= gw_sx + gw_sy + tol
};

BoundsReport check_bounds(const MmSpace& s, const MmSpace& x, const MmSpace& y, const SolverParams& params = {});

struct PairFailure {
  std::size_t i = 0;
  std::size_t j = 0;
  std::string message;
};

struct LgwMatrix {
  Matrix values;  // NaN where a pair failed
  std::vector<PairFailure> failures;
};

/// One anchor plan per space, then every pair i < j. The result does not
/// depend on `threads`.
LgwMatrix lgw_matrix(const MmSpace& s, const std::vector<MmSpace>& spaces, const SolverParams& params, LgwMode mode,
                     int threads = 1);

struct SweepSchedule {
  double eps0 = 1.0;
  double factor = 0.5;
  int steps = 11;
};

struct SweepRecord {
  double eps = 0.0;
  double mgw_value = 0.0;
  double quad_part = 0.0;
  double anchor_sx = 0.0;
  double anchor_sy = 0.0;
  double gw2_sx_ref = 0.0;
  double gw2_sy_ref = 0.0;
  double lgw_ref = 0.0;
};

struct SweepResult {
  std::vector<SweepRecord> records;
  std::optional<std::string> error;  // set when a step failed; records hold the steps before it
  bool converged = true;
};

/// Solves the eps-cost problem for eps_k = eps0 * factor^k, each step warm
/// started from the previous plan.
SweepResult epsilon_sweep(const MmSpace& s, const MmSpace& x, const MmSpace& y, const SweepSchedule& schedule,
                          const SolverParams& params = {});

inline constexpr const char* kSweepHeader = "eps,mgw_value,quad_part,anchor_sx,anchor_sy,gw2_sx_ref,gw2_sy_ref,lgw_ref";

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);

}  // namespace gromovlab
