#include "gromovlab/lgw.hpp"

#include "alternating.hpp"
#include "gromovlab/error.hpp"
#include "gromovlab/gw_solver.hpp"
#include "gromovlab/mgw_solver.hpp"
#include "gromovlab/parallel.hpp"
#include "gromovlab/quadratic.hpp"
#include "gromovlab/sinkhorn.hpp"
#include "gromovlab/transport_lp.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>

namespace gromovlab {

namespace {

// Feasible set: plan[s,x,y] = sigma[s] * gamma_s[x,y] with gamma_s a coupling
// of the two conditionals at s. The linearized cost does not depend on s.
class LgwProblem {
 public:
  LgwProblem(const MmSpace& x, const MmSpace& y, const Plan2& piSX, const Plan2& piSY, const Vector& sigma,
             const SolverParams& params)
      : dx_(x.dist()), dy_(y.dist()), sigma_(sigma), params_(params), warm_(static_cast<std::size_t>(sigma.size())) {
    for (Eigen::Index s = 0; s < sigma.size(); ++s) {
      a_.push_back(piSX.mass().row(s).transpose() / sigma[s]);
      b_.push_back(piSY.mass().row(s).transpose() / sigma[s]);
    }
    glue_ = assemble([&](Eigen::Index s) { return Matrix(a_[s] * b_[s].transpose()); });
  }

  Tensor initial(int restart, std::mt19937_64& rng) const {
    if (restart == 0) return glue_;
    return assemble([&](Eigen::Index s) {
      return to_matrix(detail::random_coupling({a_[s].size(), b_[s].size()}, {a_[s], b_[s]}, {true, true}, rng));
    });
  }

  Tensor random_cost(std::mt19937_64& rng) const { return detail::uniform_cost(glue_.shape(), rng); }

  Tensor linearize(const Tensor& plan) const {
    const Matrix c = linearized_cost(dx_, dy_, plan.pair_marginal(1, 2));
    return assemble([&](Eigen::Index) { return c; }, false);
  }

  double objective(const Tensor& plan) const { return quadratic_value(dx_, dy_, plan.pair_marginal(1, 2)); }
  double curvature(const Tensor& dir) const { return objective(dir); }
  double relative_entropy(const Tensor& plan) const { return detail::relative_entropy(plan, glue_); }

  Tensor entropic_step(const Tensor& cost, double eta) {
    return assemble([&](Eigen::Index s) {
      auto& warm = warm_[static_cast<std::size_t>(s)];
      SinkhornResult r = sinkhorn(slice(cost, s), a_[s], b_[s], eta, params_.sinkhorn_max, params_.sinkhorn_tol,
                                  warm ? &*warm : nullptr);
      Matrix plan = r.plan;
      warm = std::move(r);
      return plan;
    });
  }

  Tensor lp_vertex(const Tensor& cost) const {
    return assemble([&](Eigen::Index s) { return solve_transport_lp(slice(cost, s), a_[s], b_[s]); });
  }

  void round(Tensor& plan) const {
    plan = assemble([&](Eigen::Index s) {
      return round_to_marginals(Matrix(slice(plan, s) / sigma_[s]), a_[s], b_[s]);
    });
  }

  void reset() {
    for (auto& w : warm_) w.reset();
  }

 private:
  Matrix slice(const Tensor& t, Eigen::Index s) const {
    Matrix m(dx_.rows(), dy_.rows());
    std::size_t f = static_cast<std::size_t>(s * m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = t[f++];
    return m;
  }

  // Stacks per-atom blocks, scaled by sigma[s] unless `weighted` is false.
  template <class Block>
  Tensor assemble(Block&& block, bool weighted = true) const {
    Tensor t({sigma_.size(), dx_.rows(), dy_.rows()});
    std::size_t f = 0;
    for (Eigen::Index s = 0; s < sigma_.size(); ++s) {
      const Matrix m = block(s);
      const double w = weighted ? sigma_[s] : 1.0;
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) t[f++] = w * m(i, j);
    }
    return t;
  }

  const Matrix& dx_;
  const Matrix& dy_;
  const Vector& sigma_;
  const SolverParams& params_;
  std::vector<Vector> a_;
  std::vector<Vector> b_;
  Tensor glue_;
  std::vector<std::optional<SinkhornResult>> warm_;
};

void check_anchor(const MmSpace& s, const MmSpace& t, const Plan2& plan, double reference, const SolverParams& params,
                  const char* name) {
  const double residual = gw_objective(s, t, plan) - reference;
  if (residual > optimality_tolerance(params, reference)) {
    throw Error(ErrorCode::AnchorNotOptimal, std::string(name) + " anchor residual " + std::to_string(residual) +
                                                 " exceeds the optimality tolerance");
  }
}

}  // namespace

double lgw_objective(const MmSpace& x, const MmSpace& y, const Plan3& plan3) {
  const Tensor& t = plan3.mass();
  if (t.extent(1) != x.size() || t.extent(2) != y.size()) {
    throw Error(ErrorCode::ShapeMismatch, "plan does not match the spaces");
  }
  return quadratic_value(x.dist(), y.dist(), t.pair_marginal(1, 2));
}

LgwResult solve_lgw_exact(const MmSpace& s, const MmSpace& x, const MmSpace& y, const Plan2& piSX, const Plan2& piSY,
                          const SolverParams& params) {
  const AnchorReference reference{solve_gw(s, x, params).objective, solve_gw(s, y, params).objective};
  return solve_lgw_exact(s, x, y, piSX, piSY, params, reference);
}

LgwResult solve_lgw_exact(const MmSpace& s, const MmSpace& x, const MmSpace& y, const Plan2& piSX, const Plan2& piSY,
                          const SolverParams& params, const AnchorReference& reference) {
  if (piSX.rows() != s.size() || piSX.cols() != x.size() || piSY.rows() != s.size() || piSY.cols() != y.size()) {
    throw Error(ErrorCode::ShapeMismatch, "anchor plans do not match the spaces");
  }
  check_anchor(s, x, piSX, reference.gw2_sx, params, "(S, X)");
  check_anchor(s, y, piSY, reference.gw2_sy, params, "(S, Y)");
  const Vector& sigma = s.weights();
  // Validates the shared marginal and yields the feasible starting plan.
  const Plan3 glued = glue(piSX, piSY, sigma);

  LgwProblem problem(x, y, piSX, piSY, sigma, params);
  detail::AlternatingOutcome out = detail::run_alternating(problem, params, nullptr, false);
  Plan3 plan(std::move(out.plan), sigma, x.weights(), y.weights());

  LgwResult r;
  r.value = std::sqrt(std::max(out.objective, 0.0));
  r.residual_sx = std::abs(quadratic_value(s.dist(), x.dist(), plan.mass().pair_marginal(0, 1)) -
                           gw_objective(s, x, piSX));
  r.residual_sy = std::abs(quadratic_value(s.dist(), y.dist(), plan.mass().pair_marginal(0, 2)) -
                           gw_objective(s, y, piSY));
  r.plan3 = std::move(plan);
  r.mode = LgwMode::Exact;
  r.converged = out.converged;
  return r;
}

double lgw_via_maps(const MmSpace& s, const MmSpace& x, const MmSpace& y, const DiscreteMap& t1,
                    const DiscreteMap& t2) {
  const Eigen::Index n = s.size();
  auto check = [n](const DiscreteMap& t, Eigen::Index size) {
    if (static_cast<Eigen::Index>(t.target_index.size()) != n) {
      throw Error(ErrorCode::IndexOutOfRange, "map length differs from the reference size");
    }
    for (Eigen::Index v : t.target_index) {
      if (v < 0 || v >= size) throw Error(ErrorCode::IndexOutOfRange, "map target out of range");
    }
  };
  check(t1, x.size());
  check(t2, y.size());
  const Vector& sigma = s.weights();
  double total = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double gap = x.dist()(t1.target_index[a], t1.target_index[b]) - y.dist()(t2.target_index[a], t2.target_index[b]);
      total += gap * gap * sigma[a] * sigma[b];
    }
  }
  return std::sqrt(total);
}

BoundsReport check_bounds(const MmSpace& s, const MmSpace& x, const MmSpace& y, const SolverParams& params) {
  const GwResult sx = solve_gw(s, x, params);
  const GwResult sy = solve_gw(s, y, params);
  BoundsReport b;
  b.gw_xy = solve_gw(x, y, params).value;
  b.gw_sx = sx.value;
  b.gw_sy = sy.value;
  b.lgw = solve_lgw_exact(s, x, y, sx.plan, sy.plan, params, {sx.objective, sy.objective}).value;
  b.tol = 1e-2 * (1.0 + b.gw_sx + b.gw_sy);
  b.lower_ok = b.gw_xy <= b.lgw + b.tol;
  b.upper_ok = b.lgw <= b.gw_sx + b.gw_sy + b.tol;
  return b;
}

LgwMatrix lgw_matrix(const MmSpace& s, const std::vector<MmSpace>& spaces, const SolverParams& params, LgwMode mode,
                     int threads) {
  const std::size_t n = spaces.size();
  if (n < 2) throw Error(ErrorCode::InvalidParameter, "lgw_matrix needs at least two spaces");

  std::vector<std::optional<GwResult>> anchors(n);
  std::vector<std::string> anchor_errors(n);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      anchors[i] = solve_gw(s, spaces[i], params);
    } catch (const std::exception& e) {
      anchor_errors[i] = e.what();
    }
  });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<double> values(pairs.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(pairs.size());

  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    try {
      if (!anchors[i] || !anchors[j]) {
        throw Error(ErrorCode::NonConvergence, "anchor solve failed: " + anchor_errors[anchors[i] ? j : i]);
      }
      if (mode == LgwMode::Maps) {
        const DiscreteMap ti = barycentric_map(anchors[i]->plan, MapMode::ModeArgmax, spaces[i]);
        const DiscreteMap tj = barycentric_map(anchors[j]->plan, MapMode::ModeArgmax, spaces[j]);
        values[p] = lgw_via_maps(s, spaces[i], spaces[j], ti, tj);
      } else {
        values[p] = solve_lgw_exact(s, spaces[i], spaces[j], anchors[i]->plan, anchors[j]->plan, params,
                                    {anchors[i]->objective, anchors[j]->objective})
                        .value;
      }
    } catch (const std::exception& e) {
      errors[p] = e.what();
    }
  });

  LgwMatrix out{Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), {}};
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    out.values(i, j) = out.values(j, i) = values[p];
    if (!errors[p].empty()) out.failures.push_back({i, j, errors[p]});
  }
  return out;
}

SweepResult epsilon_sweep(const MmSpace& s, const MmSpace& x, const MmSpace& y, const SweepSchedule& schedule,
                          const SolverParams& params) {
  if (!(schedule.eps0 > 0.0) || !(schedule.factor > 0.0 && schedule.factor < 1.0) || schedule.steps < 2) {
    throw Error(ErrorCode::InvalidParameter, "sweep needs eps0 > 0, 0 < factor < 1 and steps >= 2");
  }
  const GwResult sx = solve_gw(s, x, params);
  const GwResult sy = solve_gw(s, y, params);
  const double lgw_ref = solve_lgw_exact(s, x, y, sx.plan, sy.plan, params, {sx.objective, sy.objective}).value;

  SweepResult out;
  std::optional<Plan3> warm;
  double eps = schedule.eps0;
  for (int k = 0; k < schedule.steps; ++k, eps *= schedule.factor) {
    try {
      const MgwEpsResult r = solve_mgw_eps(s, x, y, eps, params, warm ? &*warm : nullptr);
      out.records.push_back({eps, r.value, r.quad_part, r.anchor_sx, r.anchor_sy, sx.objective, sy.objective, lgw_ref});
      out.converged = out.converged && r.converged;
      warm = r.plan;
    } catch (const std::exception& e) {
      out.error = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << kSweepHeader << '\n';
  char buf[32];
  auto put = [&](double v, char end) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out << buf << end;
  };
  for (const SweepRecord& r : records) {
    put(r.eps, ',');
    put(r.mgw_value, ',');
    put(r.quad_part, ',');
    put(r.anchor_sx, ',');
    put(r.anchor_sy, ',');
    put(r.gw2_sx_ref, ',');
    put(r.gw2_sy_ref, ',');
    put(r.lgw_ref, '\n');
  }
}

}  // namespace gromovlab
