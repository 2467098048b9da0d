#pragma once

#include "gromovlab/coupling.hpp"

#include <vector>

namespace gromovlab {

/// Exact minimizer of <cost, plan> over nonnegative tensors whose marginals on
/// the constrained axes are prescribed (the multi-marginal transportation
/// polytope; unconstrained axes are free). Solved by a dense revised simplex
/// started from a staircase basis, so the result is a vertex.
///
/// Throws NonConvergence if the pivot budget is exhausted.
Tensor solve_transport_lp(const Tensor& cost, const std::vector<Vector>& marginals,
                          const std::vector<bool>& constrained);

/// Two-marginal convenience overload.
Matrix solve_transport_lp(const Matrix& cost, const Vector& mu, const Vector& nu);

}  // namespace gromovlab
