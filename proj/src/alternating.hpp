#pragma once

// Shared driver for the entropic alternating scheme used by the GW, LGW and
// multi-marginal solvers. Every problem exposes the same small surface over
// dense tensors; see GwProblem in gw_solver.cpp for the simplest instance.

#include "gromovlab/coupling.hpp"
#include "gromovlab/params.hpp"
#include "gromovlab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace gromovlab::detail {

struct AlternatingOutcome {
  Tensor plan;
  double objective = std::numeric_limits<double>::infinity();
  bool converged = false;
  int outer_iterations = 0;
  int polish_iterations = 0;
  int restart = 0;
  std::vector<TraceEntry> trace;
};

inline double inner(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double mean_entry(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s / static_cast<double>(t.size());
}

/// KL(plan | reference) over the support of plan; reference must dominate it.
inline double relative_entropy(const Tensor& plan, const Tensor& reference) {
  double kl = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i] > 0.0 && reference[i] > 0.0) kl += plan[i] * std::log(plan[i] / reference[i]);
  }
  return kl;
}

/// Random positive tensor scaled onto the constrained marginals.
inline Tensor random_coupling(const Shape& shape, const std::vector<Vector>& marginals,
                              const std::vector<bool>& constrained, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = unit(rng);
  for (int sweep = 0; sweep < 500; ++sweep) {
    for (std::size_t k = 0; k < t.rank(); ++k) {
      if (!constrained[k]) continue;
      const Vector m = t.axis_marginal(k);
      for (std::size_t i = 0; i < t.size(); ++i) {
        const Eigen::Index a = t.coordinate(i, k);
        t[i] = m[a] > 0.0 ? t[i] * marginals[k][a] / m[a] : 0.0;
      }
    }
  }
  const double total = t.sum();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] /= total;
  round_to_marginals(t, marginals, constrained);
  return t;
}

/// Uniform random cost tensor of the given shape.
inline Tensor uniform_cost(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = unit(rng);
  return t;
}

template <class Problem>
double polish(Problem& problem, Tensor& plan, double& objective, const SolverParams& params, double scale,
              int& iterations) {
  iterations = 0;
  for (; iterations < params.polish_max; ++iterations) {
    const Tensor cost = problem.linearize(plan);
    const Tensor vertex = problem.lp_vertex(cost);
    Tensor dir(plan.shape());
    for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = vertex[i] - plan[i];
    const double slope = inner(cost, dir);
    if (slope >= -params.polish_tol * (std::abs(objective) + scale)) break;
    const double curvature = problem.curvature(dir);
    double step = 1.0;
    if (curvature > 0.0) step = std::min(1.0, -slope / curvature);
    Tensor next(plan.shape());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = std::max(plan[i] + step * dir[i], 0.0);
    const double value = problem.objective(next);
    if (!(value < objective)) break;
    plan = std::move(next);
    objective = value;
  }
  return objective;
}

/// Runs the annealed alternating scheme from `restarts` starting points (or a
/// single warm start, which begins directly at the eta floor) and keeps the
/// best final objective.
template <class Problem>
AlternatingOutcome run_alternating(Problem& problem, const SolverParams& params, const Tensor* warm_start,
                                   bool keep_trace) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  AlternatingOutcome best;
  const int runs = warm_start != nullptr ? 1 : params.restarts;

  for (int restart = 0; restart < runs; ++restart) {
    problem.reset();
    Tensor plan = warm_start != nullptr ? *warm_start : problem.initial(restart, rng);
    // The starting plan also competes as it is, after polishing.
    std::optional<Tensor> start;
    start = plan;
    double scale = mean_entry(problem.linearize(plan));
    if (!(scale > 0.0)) scale = 1.0;
    const double floor = params.eta_floor * scale;
    double eta = warm_start != nullptr ? floor : std::max(params.eta * scale, floor);

    AlternatingOutcome run;
    double previous = problem.objective(plan);
    double previous_kl = problem.relative_entropy(plan);
    for (int outer = 1; outer <= params.outer_max; ++outer) {
      const Tensor cost = problem.linearize(plan);
      Tensor next = problem.entropic_step(cost, eta);
      const double kl = problem.relative_entropy(next);
      const double value = problem.objective(next);
      if (keep_trace) {
        run.trace.push_back({outer, eta, inner(cost, next) + eta * (previous_kl + kl), value});
      }
      plan = std::move(next);
      previous_kl = kl;
      run.outer_iterations = outer;
      const bool at_floor = eta <= floor;
      if (at_floor && std::abs(value - previous) <= params.outer_tol * std::max(std::abs(value), 1e-12 * scale)) {
        run.converged = true;
        break;
      }
      previous = value;
      eta = std::max(eta * params.anneal_factor, floor);
    }

    if (params.round_plan) problem.round(plan);
    double objective = problem.objective(plan);
    if (params.polish && plan.size() <= params.polish_cap) {
      polish(problem, plan, objective, params, scale, run.polish_iterations);
      if (params.round_plan) {
        problem.round(plan);
        objective = problem.objective(plan);
      }
    }
    if (start) {
      if (params.round_plan) problem.round(*start);
      double start_objective = problem.objective(*start);
      if (params.polish && start->size() <= params.polish_cap) {
        int ignored = 0;
        polish(problem, *start, start_objective, params, scale, ignored);
        if (params.round_plan) {
          problem.round(*start);
          start_objective = problem.objective(*start);
        }
      }
      if (start_objective < objective) {
        plan = std::move(*start);
        objective = start_objective;
      }
    }
    run.plan = std::move(plan);
    run.objective = objective;
    run.restart = restart;
    if (run.objective < best.objective || restart == 0) best = std::move(run);
  }

  // Cheap extra candidates: conditional gradient from random polytope vertices.
  if (warm_start == nullptr && params.polish && best.plan.size() <= params.vertex_start_cap) {
    const double scale = std::max(mean_entry(problem.linearize(best.plan)), 1e-300);
    for (int k = 0; k < params.vertex_starts; ++k) {
      Tensor plan = problem.lp_vertex(problem.random_cost(rng));
      double objective = problem.objective(plan);
      int iterations = 0;
      polish(problem, plan, objective, params, scale, iterations);
      if (params.round_plan) {
        problem.round(plan);
        objective = problem.objective(plan);
      }
      if (objective < best.objective) {
        best.plan = std::move(plan);
        best.objective = objective;
        best.polish_iterations = iterations;
        best.restart = runs + k;
        best.trace.clear();
      }
    }
  }
  return best;
}

}  // namespace gromovlab::detail
