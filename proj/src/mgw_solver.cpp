#include "gromovlab/mgw_solver.hpp"

#include "alternating.hpp"
#include "gromovlab/error.hpp"
#include "gromovlab/gw_solver.hpp"
#include "gromovlab/quadratic.hpp"
#include "gromovlab/sinkhorn.hpp"
#include "gromovlab/transport_lp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace gromovlab {

namespace {

struct PairTerm {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 0.0;  // 2 c[i][j]
};

std::vector<PairTerm> pair_terms(const PairwiseCoefficients& coeffs) {
  std::vector<PairTerm> terms;
  for (Eigen::Index i = 0; i < coeffs.c.rows(); ++i)
    for (Eigen::Index j = i + 1; j < coeffs.c.cols(); ++j)
      if (coeffs.c(i, j) > 0.0) {
        terms.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), 2.0 * coeffs.c(i, j)});
      }
  return terms;
}

double pairwise_value(const std::vector<MmSpace>& spaces, const std::vector<PairTerm>& terms, const Tensor& plan) {
  double total = 0.0;
  for (const PairTerm& t : terms) {
    total += t.weight * quadratic_value(spaces[t.i].dist(), spaces[t.j].dist(), plan.pair_marginal(t.i, t.j));
  }
  return total;
}

class MgwProblem {
 public:
  MgwProblem(const std::vector<MmSpace>& spaces, const PairwiseCoefficients& coeffs, const SolverParams& params,
             std::vector<bool> constrained)
      : spaces_(spaces), terms_(pair_terms(coeffs)), params_(params), constrained_(std::move(constrained)) {
    Shape shape;
    for (std::size_t k = 0; k < spaces_.size(); ++k) {
      shape.push_back(spaces_[k].size());
      marginals_.push_back(constrained_[k] ? spaces_[k].weights() : uniform_weights(spaces_[k].size()));
    }
    reference_ = Tensor(shape, 1.0);
    for (std::size_t x = 0; x < reference_.size(); ++x)
      for (std::size_t k = 0; k < shape.size(); ++k) reference_[x] *= marginals_[k][reference_.coordinate(x, k)];
  }

  const std::vector<Vector>& marginals() const { return marginals_; }
  const std::vector<bool>& constrained() const { return constrained_; }

  Tensor initial(int restart, std::mt19937_64& rng) const {
    if (restart == 0) return reference_;
    if (restart == 1) return star_gluing();
    return detail::random_coupling(reference_.shape(), marginals_, constrained_, rng);
  }

  Tensor random_cost(std::mt19937_64& rng) const { return detail::uniform_cost(reference_.shape(), rng); }

  Tensor linearize(const Tensor& plan) const {
    Tensor g(plan.shape());
    for (const PairTerm& t : terms_) {
      const Matrix c = linearized_cost(spaces_[t.i].dist(), spaces_[t.j].dist(), plan.pair_marginal(t.i, t.j));
      for (std::size_t x = 0; x < g.size(); ++x) g[x] += t.weight * c(g.coordinate(x, t.i), g.coordinate(x, t.j));
    }
    return g;
  }

  double objective(const Tensor& plan) const { return pairwise_value(spaces_, terms_, plan); }
  double curvature(const Tensor& dir) const { return pairwise_value(spaces_, terms_, dir); }
  double relative_entropy(const Tensor& plan) const { return detail::relative_entropy(plan, reference_); }

  Tensor entropic_step(const Tensor& cost, double eta) {
    MultiSinkhornResult r = multi_sinkhorn(cost, marginals_, constrained_, eta, params_.sinkhorn_max,
                                           params_.sinkhorn_tol, warm_ ? &*warm_ : nullptr);
    warm_ = std::move(r.potentials);
    return std::move(r.plan);
  }

  Tensor lp_vertex(const Tensor& cost) const { return solve_transport_lp(cost, marginals_, constrained_); }
  void round(Tensor& plan) const { round_to_marginals(plan, marginals_, constrained_); }
  void reset() { warm_.reset(); }

 private:
  // GW plans from axis 0 to every other axis, glued along axis 0. Free axes
  // take uniform weights for this purpose.
  Tensor star_gluing() const {
    auto with_marginal = [&](std::size_t k) {
      RawSpace raw = spaces_[k].to_raw();
      raw.coords.reset();
      raw.weights = marginals_[k];
      return validate(raw, Strictness::Lenient);
    };
    const MmSpace root = with_marginal(0);
    std::vector<Matrix> arms(spaces_.size());
    for (std::size_t k = 1; k < spaces_.size(); ++k) arms[k] = solve_gw(root, with_marginal(k), params_).plan.mass();
    Tensor t(reference_.shape());
    const Vector& sigma = marginals_[0];
    for (std::size_t x = 0; x < t.size(); ++x) {
      const Eigen::Index a = t.coordinate(x, 0);
      double v = sigma[a];
      for (std::size_t k = 1; k < spaces_.size(); ++k) v *= arms[k](a, t.coordinate(x, k)) / sigma[a];
      t[x] = v;
    }
    return t;
  }

  const std::vector<MmSpace>& spaces_;
  std::vector<PairTerm> terms_;
  const SolverParams& params_;
  std::vector<bool> constrained_;
  std::vector<Vector> marginals_;
  Tensor reference_;
  std::optional<std::vector<Vector>> warm_;
};

void check_size(const std::vector<MmSpace>& spaces, const SolverParams& params) {
  double size = 1.0;
  for (const MmSpace& s : spaces) size *= static_cast<double>(s.size());
  if (size > static_cast<double>(params.tensor_cap)) {
    throw Error(ErrorCode::TensorTooLarge, "product tensor has " + std::to_string(static_cast<long long>(size)) +
                                               " entries, cap is " + std::to_string(params.tensor_cap));
  }
}

detail::AlternatingOutcome run(const std::vector<MmSpace>& spaces, const PairwiseCoefficients& coeffs,
                               const SolverParams& params, std::vector<bool>& constrained, const Tensor* warm,
                               bool keep_trace) {
  const std::size_t n = spaces.size();
  if (n < 2) throw Error(ErrorCode::InvalidParameter, "multi-marginal problems need at least two spaces");
  coeffs.validate(static_cast<Eigen::Index>(n));
  if (constrained.empty()) constrained.assign(n, true);
  if (constrained.size() != n) throw Error(ErrorCode::ShapeMismatch, "mask length differs from the space count");
  bool any = false;
  for (bool b : constrained) any = any || b;
  if (!any) throw Error(ErrorCode::InvalidParameter, "at least one marginal must be constrained");
  check_size(spaces, params);
  MgwProblem problem(spaces, coeffs, params, constrained);
  return detail::run_alternating(problem, params, warm, keep_trace);
}

}  // namespace

PairwiseCoefficients PairwiseCoefficients::constant(Eigen::Index n, double value) {
  PairwiseCoefficients p{Matrix::Constant(n, n, value)};
  p.c.diagonal().setZero();
  return p;
}

void PairwiseCoefficients::validate(Eigen::Index n) const {
  if (c.rows() != n || c.cols() != n) throw Error(ErrorCode::InvalidParameter, "coefficient matrix must be N x N");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (c(i, i) != 0.0) throw Error(ErrorCode::InvalidParameter, "coefficient diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(c(i, j) >= 0.0) || !std::isfinite(c(i, j))) {
        throw Error(ErrorCode::InvalidParameter, "coefficients must be finite and nonnegative");
      }
      if (std::abs(c(i, j) - c(j, i)) > 1e-12) throw Error(ErrorCode::InvalidParameter, "coefficients must be symmetric");
    }
  }
}

PairwiseCoefficients EpsCost::coefficients() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::InvalidParameter, "eps must be positive");
  // Ordered pairs count twice, so each term of the cost gets half its weight.
  PairwiseCoefficients p{Matrix::Zero(3, 3)};
  p.c(0, 1) = p.c(1, 0) = 0.5;
  p.c(0, 2) = p.c(2, 0) = 0.5;
  p.c(1, 2) = p.c(2, 1) = 0.5 * eps;
  return p;
}

double mgw_objective(const std::vector<MmSpace>& spaces, const PairwiseCoefficients& coeffs, const MultiPlan& plan) {
  if (plan.rank() != spaces.size()) throw Error(ErrorCode::ShapeMismatch, "plan rank differs from the space count");
  for (std::size_t k = 0; k < spaces.size(); ++k) {
    if (plan.mass().extent(k) != spaces[k].size()) throw Error(ErrorCode::ShapeMismatch, "plan axis size mismatch");
  }
  try {
    coeffs.validate(static_cast<Eigen::Index>(spaces.size()));
  } catch (const Error& e) {
    throw Error(ErrorCode::ShapeMismatch, e.what());
  }
  return pairwise_value(spaces, pair_terms(coeffs), plan.mass());
}

MgwResult solve_mgw(const std::vector<MmSpace>& spaces, const PairwiseCoefficients& coeffs,
                    const SolverParams& params, std::vector<bool> constrained, bool keep_trace) {
  detail::AlternatingOutcome out = run(spaces, coeffs, params, constrained, nullptr, keep_trace);
  std::vector<Vector> marginals;
  for (const MmSpace& s : spaces) marginals.push_back(s.weights());
  MultiPlan plan(std::move(out.plan), std::move(marginals), constrained);
  const double value = mgw_objective(spaces, coeffs, plan);
  return MgwResult{std::move(plan), value, out.converged, out.outer_iterations, std::move(out.trace)};
}

MgwEpsResult solve_mgw_eps(const MmSpace& s, const MmSpace& x, const MmSpace& y, double eps,
                           const SolverParams& params, const Plan3* warm_start) {
  const PairwiseCoefficients coeffs = EpsCost{eps}.coefficients();
  const std::vector<MmSpace> spaces = {s, x, y};
  std::vector<bool> constrained(3, true);
  if (warm_start != nullptr) {
    const Tensor& w = warm_start->mass();
    if (w.rank() != 3 || w.extent(0) != s.size() || w.extent(1) != x.size() || w.extent(2) != y.size()) {
      throw Error(ErrorCode::ShapeMismatch, "warm start does not match the spaces");
    }
  }
  detail::AlternatingOutcome out =
      run(spaces, coeffs, params, constrained, warm_start != nullptr ? &warm_start->mass() : nullptr, false);
  MgwEpsResult r{Plan3(std::move(out.plan), s.weights(), x.weights(), y.weights()), 0.0, 0.0, 0.0, 0.0,
                 out.converged, out.outer_iterations};
  const Tensor& t = r.plan.mass();
  r.anchor_sx = quadratic_value(s.dist(), x.dist(), t.pair_marginal(0, 1));
  r.anchor_sy = quadratic_value(s.dist(), y.dist(), t.pair_marginal(0, 2));
  r.quad_part = quadratic_value(x.dist(), y.dist(), t.pair_marginal(1, 2));
  r.value = eps * r.quad_part + r.anchor_sx + r.anchor_sy;
  return r;
}

}  // namespace gromovlab
