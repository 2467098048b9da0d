#include "gromovlab/transport_lp.hpp"

#include "gromovlab/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gromovlab {

namespace {

// Equality rows: every value of the first constrained axis, values 1..n-1 of
// the remaining constrained axes (one row per extra axis is redundant).
struct RowLayout {
  std::vector<std::size_t> axes;        // constrained axes in order
  std::vector<Eigen::Index> offset;     // per constrained axis
  Eigen::Index rows = 0;

  Eigen::Index row(std::size_t slot, Eigen::Index value) const {
    if (slot == 0) return offset[0] + value;
    return value == 0 ? -1 : offset[slot] + value - 1;
  }
};

}  // namespace

Tensor solve_transport_lp(const Tensor& cost, const std::vector<Vector>& marginals,
                          const std::vector<bool>& constrained) {
  const std::size_t rank = cost.rank();
  if (marginals.size() != rank || constrained.size() != rank) {
    throw Error(ErrorCode::ShapeMismatch, "marginal count differs from tensor rank");
  }

  RowLayout layout;
  for (std::size_t k = 0; k < rank; ++k) {
    if (!constrained[k]) continue;
    if (marginals[k].size() != cost.extent(k)) throw Error(ErrorCode::ShapeMismatch, "marginal length mismatch");
    layout.offset.push_back(layout.rows);
    layout.rows += layout.axes.empty() ? cost.extent(k) : cost.extent(k) - 1;
    layout.axes.push_back(k);
  }

  Tensor plan(cost.shape());
  if (layout.axes.empty()) {
    std::size_t best = 0;
    for (std::size_t x = 1; x < cost.size(); ++x) {
      if (cost[x] < cost[best]) best = x;
    }
    plan[best] = 1.0;
    return plan;
  }

  const Eigen::Index m = layout.rows;
  const std::size_t slots = layout.axes.size();

  auto column_rows = [&](std::size_t x, std::vector<Eigen::Index>& out) {
    out.clear();
    for (std::size_t s = 0; s < slots; ++s) {
      const Eigen::Index r = layout.row(s, cost.coordinate(x, layout.axes[s]));
      if (r >= 0) out.push_back(r);
    }
  };

  // Staircase starting basis: each step advances one constrained axis by one,
  // so every new cell opens a fresh row and the basis is triangular.
  std::vector<std::size_t> basis;
  Vector xb(m);
  {
    std::vector<Vector> residual;
    for (std::size_t k : layout.axes) residual.push_back(marginals[k]);
    std::vector<Eigen::Index> idx(rank, 0);
    // Free axes stay at index 0; the simplex moves mass along them.
    while (true) {
      double amount = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < slots; ++s) amount = std::min(amount, residual[s][idx[layout.axes[s]]]);
      amount = std::max(amount, 0.0);
      for (std::size_t s = 0; s < slots; ++s) residual[s][idx[layout.axes[s]]] -= amount;
      xb[static_cast<Eigen::Index>(basis.size())] = amount;
      basis.push_back(plan.flat_index(idx));

      std::size_t advance = slots;
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < slots; ++s) {
        const std::size_t k = layout.axes[s];
        if (idx[k] + 1 >= cost.extent(k)) continue;
        if (residual[s][idx[k]] < lowest) {
          lowest = residual[s][idx[k]];
          advance = s;
        }
      }
      if (advance == slots) break;
      ++idx[layout.axes[advance]];
    }
  }
  if (static_cast<Eigen::Index>(basis.size()) != m) {
    throw Error(ErrorCode::ShapeMismatch, "staircase basis has the wrong size");
  }

  double cost_scale = 0.0;
  for (double c : cost.data()) cost_scale = std::max(cost_scale, std::abs(c));
  const double rc_tol = 1e-12 * (1.0 + cost_scale);
  constexpr double kPivotTol = 1e-11;

  std::vector<char> in_basis(cost.size(), 0);
  for (std::size_t b : basis) in_basis[b] = 1;

  Matrix basis_matrix = Matrix::Zero(m, m);
  std::vector<Eigen::Index> rows_buf;
  auto set_column = [&](Eigen::Index slot, std::size_t x) {
    basis_matrix.col(slot).setZero();
    column_rows(x, rows_buf);
    for (Eigen::Index r : rows_buf) basis_matrix(r, slot) = 1.0;
  };
  for (Eigen::Index j = 0; j < m; ++j) set_column(j, basis[static_cast<std::size_t>(j)]);

  const std::size_t max_pivots = 50 * (cost.size() + static_cast<std::size_t>(m)) + 1000;
  std::size_t degenerate_run = 0;
  bool bland = false;
  Vector cb(m);
  for (std::size_t pivot = 0;; ++pivot) {
    if (pivot > max_pivots) throw Error(ErrorCode::NonConvergence, "transport simplex exceeded its pivot budget");
    const Eigen::PartialPivLU<Matrix> lu(basis_matrix);
    for (Eigen::Index j = 0; j < m; ++j) cb[j] = cost[basis[static_cast<std::size_t>(j)]];
    const Vector duals = lu.transpose().solve(cb);

    std::size_t entering = cost.size();
    double best_rc = -rc_tol;
    for (std::size_t x = 0; x < cost.size(); ++x) {
      if (in_basis[x]) continue;
      double rc = cost[x];
      for (std::size_t s = 0; s < slots; ++s) {
        const Eigen::Index r = layout.row(s, cost.coordinate(x, layout.axes[s]));
        if (r >= 0) rc -= duals[r];
      }
      if (bland) {
        if (rc < -rc_tol) {
          entering = x;
          break;
        }
      } else if (rc < best_rc) {
        best_rc = rc;
        entering = x;
      }
    }
    if (entering == cost.size()) break;

    Vector column = Vector::Zero(m);
    column_rows(entering, rows_buf);
    for (Eigen::Index r : rows_buf) column[r] = 1.0;
    const Vector dir = lu.solve(column);

    Eigen::Index leave = -1;
    double theta = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (dir[j] <= kPivotTol) continue;
      const double ratio = std::max(xb[j], 0.0) / dir[j];
      const bool tie = std::abs(ratio - theta) <= 1e-15;
      if (ratio < theta - 1e-15 ||
          (tie && leave >= 0 && basis[static_cast<std::size_t>(j)] < basis[static_cast<std::size_t>(leave)])) {
        theta = ratio;
        leave = j;
      }
    }
    if (leave < 0) throw Error(ErrorCode::NonConvergence, "transport simplex found an unbounded ray");

    xb -= theta * dir;
    xb[leave] = theta;
    in_basis[basis[static_cast<std::size_t>(leave)]] = 0;
    basis[static_cast<std::size_t>(leave)] = entering;
    in_basis[entering] = 1;
    set_column(leave, entering);

    degenerate_run = theta <= 1e-15 ? degenerate_run + 1 : 0;
    if (degenerate_run > 50) bland = true;
  }

  for (Eigen::Index j = 0; j < m; ++j) plan[basis[static_cast<std::size_t>(j)]] = std::max(xb[j], 0.0);
  round_to_marginals(plan, marginals, constrained);
  return plan;
}

Matrix solve_transport_lp(const Matrix& cost, const Vector& mu, const Vector& nu) {
  return to_matrix(solve_transport_lp(to_tensor(cost), {mu, nu}, {true, true}));
}

}  // namespace gromovlab
