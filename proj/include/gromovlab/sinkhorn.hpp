#pragma once

#include "gromovlab/coupling.hpp"

#include <optional>
#include <vector>

namespace gromovlab {

struct SinkhornResult {
  Matrix plan;
  // Log-domain dual potentials: plan[i,j] = exp((f[i] + g[j] - cost[i,j]) / eta).
  Vector f;
  Vector g;
  int iterations = 0;
  double violation = 0.0;  // L1 row-marginal violation (columns are exact)
  bool converged = false;
};

/// Entropic transport between mu and nu. Atoms with zero mass get zero rows or
/// columns. Throws NumericalOverflow if a potential stops being finite.
SinkhornResult sinkhorn(const Matrix& cost, const Vector& mu, const Vector& nu, double eta, int max_iter,
                        double tol, const SinkhornResult* warm = nullptr);

/// Convenience wrapper returning a validated plan (marginals must reach tol).
Plan2 sinkhorn_plan(const Matrix& cost, const Vector& mu, const Vector& nu, double eta, int max_iter, double tol);

struct MultiSinkhornResult {
  Tensor plan;
  std::vector<Vector> potentials;  // zero on unconstrained axes
  int iterations = 0;
  double violation = 0.0;  // worst L1 violation over constrained axes
  bool converged = false;
};

/// Multi-marginal entropic transport:
///   plan[x] = exp((sum_k f_k[x_k] - cost[x]) / eta)
/// with cyclic potential updates in axis order, skipping unconstrained axes.
MultiSinkhornResult multi_sinkhorn(const Tensor& cost, const std::vector<Vector>& marginals,
                                   const std::vector<bool>& constrained, double eta, int max_iter, double tol,
                                   const std::vector<Vector>* warm = nullptr);

}  // namespace gromovlab
