#pragma once

namespace gromovlab {

/// One outer step of an entropic alternating solve. `entropic` is the
/// bi-convex objective <C(prev), next> + eta (KL(prev) + KL(next)), which
/// never increases while eta is held fixed.
struct TraceEntry {
  int outer = 0;
  double eta = 0.0;
  double entropic = 0.0;
  double objective = 0.0;
};

}  // namespace gromovlab
