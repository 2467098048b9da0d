#pragma once

#include "gromovlab/coupling.hpp"
#include "gromovlab/mmspace.hpp"

namespace gromovlab::oracle {

// Brute-force references for tiny instances. Everything here evaluates the
// quadratic functional straight from its definition (explicit quadruple sums
// or the explicit cell Hessian) and shares no code with the solvers.

inline constexpr long long kMaxGridPoints = 10'000'000;

/// Free-cell parametrization of a transportation polytope.
struct PolytopeGrid {
  int dims = 0;        // (n-1)(m-1)
  int resolution = 2;  // points per free axis
};

/// sum_{i,j,k,l} (A[i,k] - B[j,l])^2 P[i,j] P[k,l], term by term.
double naive_gw_objective(const Matrix& a, const Matrix& b, const Matrix& plan);

/// Minimum of the GW functional (squared) over a grid of feasible plans.
/// Requires (n-1)(m-1) <= 4 and resolution^dims <= kMaxGridPoints (TooLarge).
double brute_gw(const MmSpace& x, const MmSpace& y, int resolution);

/// Minimum over all n! permutation plans (uniform weights, n = m <= 6);
/// an upper bound on GW^2. Throws NotApplicable otherwise.
double permutation_gw_upper(const MmSpace& x, const MmSpace& y);

/// Minimum of the X-Y mismatch functional over 3-plans whose (S,X) and (S,Y)
/// projections are piSX and piSY: a grid over the product of the per-atom
/// conditional coupling polytopes. Each of those must have free dimension
/// <= 1 and nS <= 3 (TooLarge).
double brute_lgw_inner(const MmSpace& s, const MmSpace& x, const MmSpace& y, const Plan2& piSX, const Plan2& piSY,
                       int resolution);

}  // namespace gromovlab::oracle
