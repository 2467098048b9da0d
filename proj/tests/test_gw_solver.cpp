#include "doctest.h"
#include "test_util.hpp"

#include "gromovlab/gw_solver.hpp"
#include "gromovlab/oracle.hpp"
#include "gromovlab/quadratic.hpp"

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

using namespace gromovlab;

namespace {

Permutation random_permutation(std::mt19937_64& rng, Eigen::Index n) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return Permutation(p);
}

MmSpace random_space(std::mt19937_64& rng, std::uint64_t seed, Eigen::Index n) {
  return random_cloud(seed, n, 2, testutil::random_weights(rng, n));
}

Matrix mixed_plan() { return Matrix::Constant(2, 2, 0.25); }

}  // namespace

TEST_CASE("objective closed forms") {
  const MmSpace a = two_point(1.0), b = two_point(3.0);
  const Vector u = uniform_weights(2);
  CHECK(gw_objective(a, b, Plan2::from_permutation(Permutation::identity(2), u)) == doctest::Approx(2.0));
  CHECK(gw_objective(a, b, Plan2::from_permutation(Permutation({1, 0}), u)) == doctest::Approx(2.0));
  CHECK(gw_objective(a, b, Plan2(mixed_plan(), u, u)) == doctest::Approx(3.5));
  CHECK(gw_objective(a, a, Plan2::from_permutation(Permutation::identity(2), u)) == 0.0);
  CHECK_THROWS_CODE(gw_objective(a, circle(3), Plan2::product(u, u)), ErrorCode::MarginalMismatch);
}

TEST_CASE("decomposed objective equals the quadruple sum") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 1 + trial % 8, m = 1 + (trial * 3) % 8;
    const MmSpace x = random_space(rng, 10 + trial, n);
    const MmSpace y = random_space(rng, 50 + trial, m);
    const Matrix p = x.weights() * y.weights().transpose();
    const double naive = oracle::naive_gw_objective(x.dist(), y.dist(), p);
    CHECK(std::abs(quadratic_value(x.dist(), y.dist(), p) - naive) <= 1e-10 * std::max(naive, 1e-300));
  }
}

TEST_CASE("two-point spaces give sqrt 2") {
  const GwResult r = solve_gw(two_point(1.0), two_point(3.0));
  CHECK(r.value == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
  CHECK(r.objective == doctest::Approx(r.value * r.value));
  CHECK(l1_distance(r.plan.mass().rowwise().sum(), uniform_weights(2)) <= 1e-14);
}

TEST_CASE("single point spaces") {
  CHECK(solve_gw(single_point_space(), single_point_space()).value == 0.0);
}

TEST_CASE("identity and relabeling give zero") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const MmSpace x = random_space(rng, 300 + trial, n);
    CHECK(solve_gw(x, x).value <= 1e-4);
    CHECK(solve_gw(x, apply_permutation(x, random_permutation(rng, n))).value <= 1e-4);
  }
}

TEST_CASE("symmetry") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 8; ++trial) {
    const MmSpace x = random_space(rng, 400 + trial, 3 + trial % 5);
    const MmSpace y = random_space(rng, 500 + trial, 2 + trial % 6);
    const double xy = solve_gw(x, y).value;
    const double yx = solve_gw(y, x).value;
    CHECK(std::abs(xy - yx) <= 1e-3 * (1.0 + xy));
  }
}

TEST_CASE("agreement with the brute-force oracle") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 6; ++trial) {
    const MmSpace x = random_space(rng, 600 + trial, 2);
    const MmSpace y = random_space(rng, 700 + trial, 2);
    const double brute = oracle::brute_gw(x, y, 20001);
    CHECK(solve_gw(x, y).objective == doctest::Approx(brute).epsilon(0.01));
  }
  for (int trial = 0; trial < 3; ++trial) {
    const MmSpace x = random_cloud(800 + trial, 3, 2);
    const MmSpace y = random_cloud(900 + trial, 3, 2);
    const double brute = oracle::brute_gw(x, y, 41);
    CHECK(solve_gw(x, y).objective <= brute * 1.01 + 1e-12);
    CHECK(solve_gw(x, y).objective >= brute * 0.99 - 1e-12);
  }
}

TEST_CASE("entropic trace never increases at fixed eta") {
  SolverParams params;
  params.eta = params.eta_floor = 0.05;
  params.sinkhorn_tol = 1e-13;
  params.sinkhorn_max = 20000;
  params.outer_max = 60;
  params.restarts = 1;
  params.vertex_starts = 0;
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const MmSpace x = random_space(rng, 1000 + trial, 6);
    const MmSpace y = random_space(rng, 1100 + trial, 5);
    const GwResult r = solve_gw(x, y, params, true);
    REQUIRE(r.trace.size() >= 2);
    for (std::size_t t = 1; t < r.trace.size(); ++t) {
      CHECK(r.trace[t].entropic <= r.trace[t - 1].entropic + 1e-12 * (1.0 + std::abs(r.trace[t - 1].entropic)));
    }
  }
}

TEST_CASE("optimality residual") {
  const MmSpace a = two_point(1.0), b = two_point(3.0);
  const Vector u = uniform_weights(2);
  CHECK(optimality_residual(a, b, Plan2(mixed_plan(), u, u)) == doctest::Approx(1.5).epsilon(1e-3));

  std::mt19937_64 rng(31);
  const MmSpace x = random_space(rng, 1200, 6);
  const MmSpace y = random_space(rng, 1300, 7);
  const GwResult r = solve_gw(x, y);
  CHECK(std::abs(optimality_residual(x, y, r.plan)) <= 1e-9);
  const double self = optimality_residual(x, x, Plan2::from_permutation(Permutation::identity(6), x.weights()));
  CHECK(self >= -1e-12);
  CHECK(self <= optimality_tolerance(SolverParams{}, 0.0));
}

TEST_CASE("parameter validation") {
  SolverParams p;
  p.anneal_factor = 1.0;
  CHECK_THROWS_CODE(solve_gw(two_point(1.0), two_point(2.0), p), ErrorCode::InvalidParameter);
  p = SolverParams{};
  p.eta = -1.0;
  CHECK_THROWS_CODE(solve_gw(two_point(1.0), two_point(2.0), p), ErrorCode::InvalidParameter);
}
