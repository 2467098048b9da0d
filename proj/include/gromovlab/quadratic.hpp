#pragma once

#include "gromovlab/mmspace.hpp"

namespace gromovlab {

// Squared-loss kernel L(i,j,k,l) = (A[i,k] - B[j,l])^2, never materialized.
// With p, q the row and column sums of P:
//   (L (x) P)[i,j] = (A^2 p)_i + (B^2 q)_j - 2 (A P B^T)_ij
// which costs O(n^2 m + n m^2) instead of O(n^2 m^2).

/// Linearized cost C(P)[i,j] = sum_{k,l} (A[i,k] - B[j,l])^2 P[k,l].
Matrix linearized_cost(const Matrix& a, const Matrix& b, const Matrix& p);

/// sum_{i,j,k,l} (A[i,k] - B[j,l])^2 P[i,j] P[k,l]. P may be any real matrix
/// (differences of plans included).
double quadratic_value(const Matrix& a, const Matrix& b, const Matrix& p);

}  // namespace gromovlab
