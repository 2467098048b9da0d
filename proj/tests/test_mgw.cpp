#include "doctest.h"
#include "test_util.hpp"

#include "gromovlab/gw_solver.hpp"
#include "gromovlab/mgw_solver.hpp"
#include "gromovlab/oracle.hpp"

#include <cmath>
#include <random>

using namespace gromovlab;

namespace {

MmSpace random_space(std::mt19937_64& rng, std::uint64_t seed, Eigen::Index n) {
  return random_cloud(seed, n, 2, testutil::random_weights(rng, n));
}

// Quadruple sum of the full pairwise cost against the tensor, straight from
// the definition over ordered pairs of axes.
double naive_mgw(const std::vector<MmSpace>& spaces, const Matrix& c, const Tensor& t) {
  double total = 0.0;
  for (std::size_t a = 0; a < t.size(); ++a) {
    for (std::size_t b = 0; b < t.size(); ++b) {
      double cost = 0.0;
      for (std::size_t i = 0; i < spaces.size(); ++i)
        for (std::size_t j = 0; j < spaces.size(); ++j) {
          const double gap = spaces[i].dist()(t.coordinate(a, i), t.coordinate(b, i)) -
                             spaces[j].dist()(t.coordinate(a, j), t.coordinate(b, j));
          cost += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * gap * gap;
        }
      total += cost * t[a] * t[b];
    }
  }
  return total;
}

Tensor product_tensor(const std::vector<MmSpace>& spaces) {
  Shape shape;
  for (const MmSpace& s : spaces) shape.push_back(s.size());
  Tensor t(shape, 1.0);
  for (std::size_t a = 0; a < t.size(); ++a)
    for (std::size_t k = 0; k < spaces.size(); ++k) t[a] *= spaces[k].weights()[t.coordinate(a, k)];
  return t;
}

std::vector<Vector> weights_of(const std::vector<MmSpace>& spaces) {
  std::vector<Vector> out;
  for (const MmSpace& s : spaces) out.push_back(s.weights());
  return out;
}

}  // namespace

TEST_CASE("objective matches the definition") {
  std::mt19937_64 rng(3);
  const std::vector<MmSpace> spaces = {random_space(rng, 1, 3), random_space(rng, 2, 2), random_space(rng, 3, 3)};
  PairwiseCoefficients coeffs{Matrix::Zero(3, 3)};
  coeffs.c << 0, 0.3, 0.5, 0.3, 0, 0.7, 0.5, 0.7, 0;
  const Tensor t = product_tensor(spaces);
  const MultiPlan plan(t, weights_of(spaces), {true, true, true});
  const double naive = naive_mgw(spaces, coeffs.c, t);
  CHECK(mgw_objective(spaces, coeffs, plan) == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("two marginals with c = 1/2 is GW") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 4; ++trial) {
    const MmSpace x = random_space(rng, 40 + trial, 3 + trial);
    const MmSpace y = random_space(rng, 80 + trial, 6 - trial);
    const MgwResult r = solve_mgw({x, y}, PairwiseCoefficients::constant(2, 0.5));
    CHECK(r.value == doctest::Approx(solve_gw(x, y).objective).epsilon(0.01));
    CHECK(r.plan.marginal_violation() <= 1e-7);
  }
  const MgwResult two = solve_mgw({two_point(1.0), two_point(3.0)}, PairwiseCoefficients::constant(2, 0.5));
  CHECK(two.value == doctest::Approx(oracle::brute_gw(two_point(1.0), two_point(3.0), 10001)).epsilon(1e-6));
}

TEST_CASE("plans keep constrained marginals and leave free axes free") {
  std::mt19937_64 rng(9);
  const std::vector<MmSpace> spaces = {random_space(rng, 5, 3), random_space(rng, 6, 4), random_space(rng, 7, 3)};
  const PairwiseCoefficients coeffs = PairwiseCoefficients::constant(3, 0.5);
  const MgwResult all = solve_mgw(spaces, coeffs);
  for (std::size_t k = 0; k < 3; ++k) CHECK(l1_distance(all.plan.mass().axis_marginal(k), spaces[k].weights()) <= 1e-7);
  CHECK(all.value == doctest::Approx(mgw_objective(spaces, coeffs, all.plan)));

  const MgwResult free = solve_mgw(spaces, coeffs, {}, {true, true, false});
  CHECK(l1_distance(free.plan.mass().axis_marginal(0), spaces[0].weights()) <= 1e-7);
  CHECK(l1_distance(free.plan.mass().axis_marginal(1), spaces[1].weights()) <= 1e-7);
  CHECK(free.plan.mass().sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(free.value <= all.value + 1e-9);
}

TEST_CASE("entropic trace never increases at fixed eta") {
  SolverParams params;
  params.eta = params.eta_floor = 0.05;
  params.sinkhorn_tol = 1e-13;
  params.sinkhorn_max = 20000;
  params.outer_max = 40;
  params.restarts = 1;
  params.vertex_starts = 0;
  std::mt19937_64 rng(13);
  const std::vector<MmSpace> spaces = {random_space(rng, 20, 3), random_space(rng, 21, 3), random_space(rng, 22, 4)};
  const MgwResult r = solve_mgw(spaces, PairwiseCoefficients::constant(3, 0.5), params, {}, true);
  REQUIRE(r.trace.size() >= 2);
  for (std::size_t t = 1; t < r.trace.size(); ++t) {
    CHECK(r.trace[t].entropic <= r.trace[t - 1].entropic + 1e-12 * (1.0 + std::abs(r.trace[t - 1].entropic)));
  }
}

TEST_CASE("eps cost bookkeeping") {
  const EpsCost cost{0.25};
  const Matrix c = cost.coefficients().c;
  CHECK(c(0, 1) == 0.5);
  CHECK(c(0, 2) == 0.5);
  CHECK(c(1, 2) == 0.125);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    const MmSpace s = random_space(rng, 60 + trial, 3);
    const MmSpace x = random_space(rng, 70 + trial, 3);
    const MmSpace y = random_space(rng, 90 + trial, 4);
    for (double eps : {1.0, 0.1}) {
      const MgwEpsResult r = solve_mgw_eps(s, x, y, eps);
      CHECK(std::abs(r.value - (eps * r.quad_part + r.anchor_sx + r.anchor_sy)) <= 1e-9);
      CHECK(r.anchor_sx == doctest::Approx(gw_objective(s, x, project_pair(r.plan, Axis3::S, Axis3::X))));
      CHECK(r.quad_part == doctest::Approx(gw_objective(x, y, project_pair(r.plan, Axis3::X, Axis3::Y))));
    }
  }
}

TEST_CASE("input checks") {
  const std::vector<MmSpace> two = {two_point(1.0), two_point(2.0)};
  PairwiseCoefficients asym{Matrix::Zero(2, 2)};
  asym.c(0, 1) = 1.0;
  CHECK_THROWS_CODE(solve_mgw(two, asym), ErrorCode::InvalidParameter);
  CHECK_THROWS_CODE(solve_mgw({two_point(1.0)}, PairwiseCoefficients::constant(1, 0.5)), ErrorCode::InvalidParameter);
  CHECK_THROWS_CODE(solve_mgw(two, PairwiseCoefficients::constant(2, 0.5), {}, {false, false}),
                    ErrorCode::InvalidParameter);
  SolverParams small;
  small.tensor_cap = 3;
  CHECK_THROWS_CODE(solve_mgw(two, PairwiseCoefficients::constant(2, 0.5), small), ErrorCode::TensorTooLarge);
}
