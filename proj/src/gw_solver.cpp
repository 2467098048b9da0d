#include "gromovlab/gw_solver.hpp"

#include "alternating.hpp"
#include "gromovlab/error.hpp"
#include "gromovlab/quadratic.hpp"
#include "gromovlab/sinkhorn.hpp"
#include "gromovlab/transport_lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace gromovlab {

namespace {

// Squared 2-Wasserstein distance between two discrete measures on the line,
// from the merged quantile functions.
double line_w2(std::vector<std::pair<double, double>> a, std::vector<std::pair<double, double>> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  std::size_t i = 0, j = 0;
  double left_a = a[0].second, left_b = b[0].second;
  while (i < a.size() && j < b.size()) {
    const double step = std::min(left_a, left_b);
    const double gap = a[i].first - b[j].first;
    total += step * gap * gap;
    left_a -= step;
    left_b -= step;
    if (left_a <= 0.0 && ++i < a.size()) left_a = a[i].second;
    if (left_b <= 0.0 && ++j < b.size()) left_b = b[j].second;
  }
  return total;
}

// Transport plan for the distance-profile lower bound: atoms are matched by
// how alike their distributions of distances to the rest of the space are.
Matrix profile_plan(const MmSpace& x, const MmSpace& y) {
  auto profile = [](const MmSpace& s, Eigen::Index i) {
    std::vector<std::pair<double, double>> out;
    for (Eigen::Index k = 0; k < s.size(); ++k) out.emplace_back(s.dist()(i, k), s.weights()[k]);
    return out;
  };
  Matrix cost(x.size(), y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = 0; j < y.size(); ++j) cost(i, j) = line_w2(profile(x, i), profile(y, j));
  return solve_transport_lp(cost, x.weights(), y.weights());
}

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Random matrix whose entry (i, j) depends on the unordered pair of atoms, so
// swapping the two spaces transposes it.
Matrix symmetric_random(const Vector& mu, const Vector& nu, std::uint64_t seed) {
  Matrix t(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      const std::uint64_t a = (static_cast<std::uint64_t>(mu.size()) << 32) | static_cast<std::uint64_t>(i);
      const std::uint64_t b = (static_cast<std::uint64_t>(nu.size()) << 32) | static_cast<std::uint64_t>(j);
      const std::uint64_t h = mix(seed ^ mix(std::min(a, b) ^ mix(std::max(a, b))));
      t(i, j) = static_cast<double>(h >> 11) * 0x1.0p-53;
    }
  }
  return t;
}

Matrix symmetric_random_start(const Vector& mu, const Vector& nu, std::uint64_t seed) {
  Matrix t = (0.05 + 0.95 * symmetric_random(mu, nu, seed).array()).matrix();
  for (int sweep = 0; sweep < 500; ++sweep) {
    t = mu.cwiseQuotient(t.rowwise().sum()).asDiagonal() * t;
    t = t * nu.cwiseQuotient(t.colwise().sum().transpose()).asDiagonal();
  }
  return round_to_marginals(t, mu, nu);
}

class GwProblem {
 public:
  GwProblem(const MmSpace& x, const MmSpace& y, const SolverParams& params)
      : x_(x), y_(y), a_(x.dist()), b_(y.dist()), mu_(x.weights()), nu_(y.weights()), params_(params),
        reference_(to_tensor(mu_ * nu_.transpose())) {}

  Tensor initial(int restart, std::mt19937_64& rng) const {
    if (restart == 0) return reference_;
    if (restart == 1) {
      // Blend with the product so the entropic steps start inside the polytope.
      Tensor t = to_tensor(profile_plan(x_, y_));
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.9 * t[i] + 0.1 * reference_[i];
      return t;
    }
    return to_tensor(symmetric_random_start(mu_, nu_, rng()));
  }

  Tensor random_cost(std::mt19937_64& rng) const { return to_tensor(symmetric_random(mu_, nu_, rng())); }

  Tensor linearize(const Tensor& plan) const { return to_tensor(linearized_cost(a_, b_, to_matrix(plan))); }
  double objective(const Tensor& plan) const { return quadratic_value(a_, b_, to_matrix(plan)); }
  double curvature(const Tensor& dir) const { return quadratic_value(a_, b_, to_matrix(dir)); }
  double relative_entropy(const Tensor& plan) const { return detail::relative_entropy(plan, reference_); }

  Tensor entropic_step(const Tensor& cost, double eta) {
    SinkhornResult r = sinkhorn(to_matrix(cost), mu_, nu_, eta, params_.sinkhorn_max, params_.sinkhorn_tol,
                                warm_ ? &*warm_ : nullptr);
    Tensor plan = to_tensor(r.plan);
    warm_ = std::move(r);
    return plan;
  }

  Tensor lp_vertex(const Tensor& cost) const { return to_tensor(solve_transport_lp(to_matrix(cost), mu_, nu_)); }

  void round(Tensor& plan) const { plan = to_tensor(round_to_marginals(to_matrix(plan), mu_, nu_)); }
  void reset() { warm_.reset(); }

 private:
  const MmSpace& x_;
  const MmSpace& y_;
  const Matrix& a_;
  const Matrix& b_;
  const Vector& mu_;
  const Vector& nu_;
  const SolverParams& params_;
  Tensor reference_;
  std::optional<SinkhornResult> warm_;
};

}  // namespace

double gw_objective(const MmSpace& x, const MmSpace& y, const Plan2& plan) {
  if (plan.rows() != x.size() || plan.cols() != y.size()) {
    throw Error(ErrorCode::MarginalMismatch, "plan shape does not match the spaces");
  }
  if (l1_distance(plan.mu(), x.weights()) > kMarginalTol || l1_distance(plan.nu(), y.weights()) > kMarginalTol) {
    throw Error(ErrorCode::MarginalMismatch, "plan marginals are not the space weights");
  }
  return quadratic_value(x.dist(), y.dist(), plan.mass());
}

GwResult solve_gw(const MmSpace& x, const MmSpace& y, const SolverParams& params, bool keep_trace) {
  GwProblem problem(x, y, params);
  detail::AlternatingOutcome out = detail::run_alternating(problem, params, nullptr, keep_trace);
  Matrix mass = to_matrix(out.plan);
  const double objective = std::max(out.objective, 0.0);
  return GwResult{Plan2(std::move(mass), x.weights(), y.weights()), std::sqrt(objective), out.objective,
                  out.converged, out.outer_iterations, std::move(out.trace)};
}

double optimality_residual(const MmSpace& x, const MmSpace& y, const Plan2& plan, const SolverParams& params) {
  const double value = gw_objective(x, y, plan);
  return value - solve_gw(x, y, params).objective;
}

}  // namespace gromovlab
