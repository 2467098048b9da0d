#include "gromovlab/barycenter.hpp"

#include "gromovlab/error.hpp"
#include "gromovlab/gw_solver.hpp"
#include "gromovlab/mgw_solver.hpp"
#include "gromovlab/parallel.hpp"

#include <cmath>
#include <exception>

namespace gromovlab {

namespace {

std::vector<std::size_t> active_axes(const std::vector<MmSpace>& spaces, const BarycenterWeights& rho) {
  rho.validate(static_cast<Eigen::Index>(spaces.size()));
  std::vector<std::size_t> axes;
  for (std::size_t i = 0; i < spaces.size(); ++i)
    if (rho.rho[static_cast<Eigen::Index>(i)] > 0.0) axes.push_back(i);
  return axes;
}

MmSpace space_from(std::string label, Matrix dist, Vector weights) {
  RawSpace raw;
  raw.label = std::move(label);
  raw.dist = std::move(dist);
  raw.weights = std::move(weights);
  return validate(raw, Strictness::Lenient);
}

}  // namespace

BarycenterWeights BarycenterWeights::uniform(Eigen::Index n) { return {uniform_weights(n)}; }

void BarycenterWeights::validate(Eigen::Index n) const {
  if (n < 1) throw Error(ErrorCode::InvalidParameter, "barycenter needs at least one space");
  if (rho.size() != n) throw Error(ErrorCode::LengthMismatch, "rho length differs from the space count");
  for (double r : rho) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw Error(ErrorCode::InvalidParameter, "rho entries must be >= 0");
  }
  if (std::abs(rho.sum() - 1.0) > 1e-12) throw Error(ErrorCode::InvalidParameter, "rho must sum to 1");
}

FreeBarycenter free_support_barycenter(const std::vector<MmSpace>& spaces, const BarycenterWeights& rho,
                                       const SolverParams& params, std::optional<double> prune_tol) {
  const std::vector<std::size_t> axes = active_axes(spaces, rho);
  std::vector<MmSpace> active;
  for (std::size_t i : axes) active.push_back(spaces[i]);

  if (active.size() == 1) {
    const MmSpace& only = active.front();
    Tensor mass({only.size()});
    std::vector<std::vector<Eigen::Index>> atoms;
    for (Eigen::Index a = 0; a < only.size(); ++a) {
      mass[static_cast<std::size_t>(a)] = only.weights()[a];
      atoms.push_back({a});
    }
    return FreeBarycenter{space_from("barycenter", only.dist(), only.weights()),
                          MultiPlan(std::move(mass), {only.weights()}, {true}), axes, std::move(atoms), 0.0, 0.0, true};
  }

  PairwiseCoefficients coeffs{Matrix::Zero(static_cast<Eigen::Index>(axes.size()), static_cast<Eigen::Index>(axes.size()))};
  for (std::size_t a = 0; a < axes.size(); ++a)
    for (std::size_t b = 0; b < axes.size(); ++b)
      if (a != b) coeffs.c(a, b) = 0.5 * rho.rho[axes[a]] * rho.rho[axes[b]];
  MgwResult solved = solve_mgw(active, coeffs, params);
  const Tensor& t = solved.plan.mass();
  const double tol = prune_tol.value_or(1e-6 / static_cast<double>(t.size()));

  std::vector<std::size_t> kept;
  double kept_mass = 0.0;
  for (std::size_t f = 0; f < t.size(); ++f) {
    if (t[f] > tol) {
      kept.push_back(f);
      kept_mass += t[f];
    }
  }
  if (kept.empty()) throw Error(ErrorCode::EmptySupport, "pruning removed every barycenter atom");

  const Eigen::Index n = static_cast<Eigen::Index>(kept.size());
  Matrix dist = Matrix::Zero(n, n);
  Vector weights(n);
  std::vector<std::vector<Eigen::Index>> atoms(kept.size());
  for (Eigen::Index p = 0; p < n; ++p) {
    weights[p] = t[kept[static_cast<std::size_t>(p)]] / kept_mass;
    for (std::size_t k = 0; k < axes.size(); ++k) atoms[static_cast<std::size_t>(p)].push_back(t.coordinate(kept[static_cast<std::size_t>(p)], k));
  }
  weights /= weights.sum();
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = p + 1; q < n; ++q) {
      double d = 0.0;
      for (std::size_t k = 0; k < axes.size(); ++k) {
        d += rho.rho[axes[k]] * active[k].dist()(atoms[static_cast<std::size_t>(p)][k], atoms[static_cast<std::size_t>(q)][k]);
      }
      dist(p, q) = dist(q, p) = d;
    }
  return FreeBarycenter{space_from("barycenter", std::move(dist), std::move(weights)), std::move(solved.plan), axes,
                        std::move(atoms), solved.value, 1.0 - kept_mass, solved.converged};
}

FixedBarycenter fixed_support_barycenter(const std::vector<MmSpace>& spaces, const BarycenterWeights& rho,
                                         const Matrix& support_dist, const SolverParams& params) {
  const std::vector<std::size_t> axes = active_axes(spaces, rho);
  const MmSpace support = space_from("support", support_dist, uniform_weights(support_dist.rows()));
  std::vector<MmSpace> problem;
  for (std::size_t i : axes) problem.push_back(spaces[i]);
  problem.push_back(support);

  const Eigen::Index last = static_cast<Eigen::Index>(axes.size());
  PairwiseCoefficients coeffs{Matrix::Zero(last + 1, last + 1)};
  for (Eigen::Index k = 0; k < last; ++k) coeffs.c(k, last) = coeffs.c(last, k) = 0.5 * rho.rho[axes[static_cast<std::size_t>(k)]];
  std::vector<bool> constrained(problem.size(), true);
  constrained.back() = false;

  MgwResult solved = solve_mgw(problem, coeffs, params, constrained);
  Vector sigma = solved.plan.marginals().back();

  std::vector<Eigen::Index> keep;
  for (Eigen::Index s = 0; s < sigma.size(); ++s)
    if (sigma[s] > 1e-12) keep.push_back(s);
  Matrix dist(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
  Vector weights(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t a = 0; a < keep.size(); ++a) {
    weights[static_cast<Eigen::Index>(a)] = sigma[keep[a]];
    for (std::size_t b = 0; b < keep.size(); ++b) dist(a, b) = support.dist()(keep[a], keep[b]);
  }
  weights /= weights.sum();
  return FixedBarycenter{std::move(sigma), std::move(solved.plan), axes,
                         space_from("barycenter", std::move(dist), std::move(weights)), solved.value, solved.converged};
}

double barycenter_objective(const MmSpace& candidate, const std::vector<MmSpace>& spaces,
                            const BarycenterWeights& rho, const SolverParams& params, int threads) {
  rho.validate(static_cast<Eigen::Index>(spaces.size()));
  std::vector<double> terms(spaces.size(), 0.0);
  std::vector<std::exception_ptr> errors(spaces.size());
  parallel_for(spaces.size(), threads, [&](std::size_t i) {
    if (!(rho.rho[static_cast<Eigen::Index>(i)] > 0.0)) return;
    try {
      terms[i] = rho.rho[static_cast<Eigen::Index>(i)] * solve_gw(candidate, spaces[i], params).objective;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  double total = 0.0;
  for (double v : terms) total += v;
  return total;
}

}  // namespace gromovlab
