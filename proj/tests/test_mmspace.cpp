#include "doctest.h"
#include "test_util.hpp"

#include "gromovlab/mmspace.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace gromovlab;

namespace {

RawSpace raw_from(Matrix d, Vector w) {
  RawSpace raw;
  raw.dist = std::move(d);
  raw.weights = std::move(w);
  return raw;
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("validate accepts the smallest nondegenerate space") {
  const MmSpace s = validate(raw_from(mat2(0, 1, 1, 0), Vector::Constant(2, 0.5)));
  CHECK(s.size() == 2);
  CHECK(s.dist()(0, 1) == 1.0);
}

TEST_CASE("validate error paths") {
  CHECK_THROWS_CODE(validate(raw_from(mat2(0, 1, 2, 0), Vector::Constant(2, 0.5))), ErrorCode::AsymmetricDistance);
  CHECK_THROWS_CODE(validate(raw_from(mat2(1, 1, 1, 0), Vector::Constant(2, 0.5))), ErrorCode::NonzeroDiagonal);
  Vector w(2);
  w << 0.0, 1.0;
  CHECK_THROWS_CODE(validate(raw_from(mat2(0, 1, 1, 0), w)), ErrorCode::NonpositiveWeight);
  w << 0.5, 0.6;
  CHECK_THROWS_CODE(validate(raw_from(mat2(0, 1, 1, 0), w)), ErrorCode::WeightSumMismatch);

  Matrix d(3, 3);
  d << 0, 1, 5, 1, 0, 1, 5, 1, 0;
  CHECK_THROWS_CODE(validate(raw_from(d, uniform_weights(3))), ErrorCode::TriangleViolation);
  CHECK_NOTHROW(validate(raw_from(d, uniform_weights(3)), Strictness::Lenient));

  // Pseudo-metrics (distinct atoms at distance zero) are lenient-only.
  CHECK_THROWS_CODE(validate(raw_from(mat2(0, 0, 0, 0), Vector::Constant(2, 0.5))), ErrorCode::TriangleViolation);
  CHECK_NOTHROW(validate(raw_from(mat2(0, 0, 0, 0), Vector::Constant(2, 0.5)), Strictness::Lenient));

  RawSpace bad;
  bad.dist = mat2(0, 1, 1, 0);
  Matrix c(2, 2);
  c << 0, 0, 3, 4;
  bad.coords = c;
  bad.weights = Vector::Constant(2, 0.5);
  CHECK_THROWS_CODE(validate(bad), ErrorCode::CoordDistMismatch);
}

TEST_CASE("coordinates derive the distance matrix") {
  RawSpace raw;
  Matrix c(2, 2);
  c << 0, 0, 3, 4;
  raw.coords = c;
  raw.weights = Vector::Constant(2, 0.5);
  const MmSpace s = validate(raw);
  CHECK(s.dist()(0, 1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(s.has_coords());
}

TEST_CASE("apply_permutation") {
  const MmSpace x = random_cloud(3, 5, 2);
  const MmSpace same = apply_permutation(x, Permutation::identity(5));
  CHECK(same.dist() == x.dist());
  CHECK(same.weights() == x.weights());

  Vector w(2);
  w << 0.3, 0.7;
  const MmSpace y = apply_permutation(two_point(1.0, w), Permutation({1, 0}));
  CHECK(y.weights()[0] == 0.7);
  CHECK(y.weights()[1] == 0.3);
  CHECK(y.dist()(0, 1) == 1.0);

  CHECK_THROWS_CODE(apply_permutation(x, Permutation::identity(4)), ErrorCode::LengthMismatch);
  CHECK_THROWS_CODE(Permutation({0, 0}), ErrorCode::InvalidParameter);
}

TEST_CASE("is_isomorphism") {
  const MmSpace x = two_point(1.0);
  CHECK(is_isomorphism(Permutation::identity(2), x, x, 1e-12));
  CHECK(is_isomorphism(Permutation({1, 0}), x, two_point(1.0), 1e-12));
  CHECK_FALSE(is_isomorphism(Permutation({1, 0}), x, two_point(2.0), 1e-12));
  CHECK_THROWS_CODE(is_isomorphism(Permutation::identity(2), x, circle(3), 1e-12), ErrorCode::SizeMismatch);
}

TEST_CASE("relabeling is an isomorphism for every permutation") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 1 + trial % 7;
    const MmSpace x = random_cloud(static_cast<std::uint64_t>(trial), n, 2, testutil::random_weights(rng, n));
    std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    const Permutation perm(p);
    const MmSpace y = apply_permutation(x, perm.inverse());
    CHECK(is_isomorphism(perm, x, y, 1e-12));
    CHECK_NOTHROW(validate(y.to_raw()));
  }
}

TEST_CASE("single point space") {
  const MmSpace s = single_point_space();
  CHECK(s.size() == 1);
  CHECK(s.dist()(0, 0) == 0.0);
  CHECK(s.weights()[0] == 1.0);
  CHECK_NOTHROW(validate(s.to_raw(), Strictness::Strict));
}

TEST_CASE("generators") {
  const MmSpace t = two_point(1.0);
  CHECK(t.dist()(0, 1) == 1.0);
  CHECK(t.weights()[0] == 0.5);

  const MmSpace c = circle(4);
  CHECK(c.size() == 4);
  CHECK(c.dist()(0, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(c.dist()(0, 2) == doctest::Approx(2.0));
  CHECK((c.dist() - c.dist().transpose()).cwiseAbs().maxCoeff() == 0.0);

  const MmSpace r1 = random_cloud(7, 5, 2);
  const MmSpace r2 = random_cloud(7, 5, 2);
  CHECK(r1.dist() == r2.dist());
  CHECK(*r1.coords() == *r2.coords());

  CHECK_THROWS_CODE(two_point(0.0), ErrorCode::InvalidParameter);
  CHECK_THROWS_CODE(circle(0), ErrorCode::InvalidParameter);
  CHECK_THROWS_CODE(random_cloud(1, 0, 2), ErrorCode::InvalidParameter);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK_NOTHROW(validate(random_cloud(seed, 2 + static_cast<Eigen::Index>(seed % 9), 3).to_raw()));
    CHECK_NOTHROW(validate(circle(1 + static_cast<Eigen::Index>(seed)).to_raw()));
  }
}
