#include "gromovlab/params.hpp"

#include "gromovlab/error.hpp"

namespace gromovlab {

void SolverParams::validate() const {
  if (!(eta > 0.0) || !(eta_floor > 0.0)) throw Error(ErrorCode::InvalidParameter, "eta and eta_floor must be positive");
  if (!(anneal_factor > 0.0 && anneal_factor < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "anneal_factor must lie in (0, 1)");
  }
  if (outer_max < 1 || sinkhorn_max < 1 || restarts < 1 || polish_max < 0 || vertex_starts < 0) {
    throw Error(ErrorCode::InvalidParameter, "iteration budgets must be positive");
  }
  if (!(sinkhorn_tol > 0.0) || !(outer_tol > 0.0) || !(opt_tol > 0.0) || !(polish_tol > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "tolerances must be positive");
  }
  if (tensor_cap == 0) throw Error(ErrorCode::InvalidParameter, "tensor_cap must be positive");
}

}  // namespace gromovlab
