#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gromovlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Unvalidated input for a metric measure space. Exactly one of `dist` or
/// `coords` must be set; when only coordinates are given the Euclidean
/// distance matrix is derived from them.
struct RawSpace {
  std::string label;
  std::optional<Matrix> dist;
  std::optional<Matrix> coords;
  Vector weights;
};

enum class Strictness { Strict, Lenient };

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kTriangleTol = 1e-9;
inline constexpr double kWeightSumTol = 1e-12;
inline constexpr double kCoordTol = 1e-9;

/// A finite metric measure space: distance matrix plus fully supported
/// probability weights. Instances only come out of `validate`, so every
/// MmSpace satisfies its invariants and is immutable afterwards.
class MmSpace {
 public:
  const std::string& label() const noexcept { return label_; }
  Eigen::Index size() const noexcept { return weights_.size(); }
  const Matrix& dist() const noexcept { return dist_; }
  const Vector& weights() const noexcept { return weights_; }
  const std::optional<Matrix>& coords() const noexcept { return coords_; }
  bool has_coords() const noexcept { return coords_.has_value(); }

  RawSpace to_raw() const;

 private:
  friend MmSpace validate(const RawSpace& raw, Strictness strictness);

  MmSpace() = default;

  std::string label_;
  Matrix dist_;
  Vector weights_;
  std::optional<Matrix> coords_;
};

/// Checks every MmSpace invariant and returns the validated space.
/// Throws Error with AsymmetricDistance, NonzeroDiagonal, TriangleViolation
/// (strict only), NonpositiveWeight, WeightSumMismatch or CoordDistMismatch.
MmSpace validate(const RawSpace& raw, Strictness strictness = Strictness::Strict);

/// A bijection of {0, ..., n-1}.
class Permutation {
 public:
  explicit Permutation(std::vector<Eigen::Index> perm);

  static Permutation identity(Eigen::Index n);

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(perm_.size()); }
  Eigen::Index operator()(Eigen::Index i) const { return perm_[static_cast<std::size_t>(i)]; }
  const std::vector<Eigen::Index>& values() const noexcept { return perm_; }
  Permutation inverse() const;

 private:
  std::vector<Eigen::Index> perm_;
};

/// Relabels atoms: dist'[i][j] = dist[p(i)][p(j)], weights'[i] = weights[p(i)].
MmSpace apply_permutation(const MmSpace& space, const Permutation& p);

/// True iff p is a measure-preserving isometry from X onto Y within `tol`.
bool is_isomorphism(const Permutation& p, const MmSpace& x, const MmSpace& y, double tol);

MmSpace single_point_space();

/// Uniform weights of length n.
Vector uniform_weights(Eigen::Index n);

// Fixture generators. All of them produce strictly valid spaces with uniform
// weights unless explicit weights are passed.
MmSpace two_point(double a, std::optional<Vector> weights = std::nullopt);
MmSpace circle(Eigen::Index n, std::optional<Vector> weights = std::nullopt);
MmSpace random_cloud(std::uint64_t seed, Eigen::Index n, Eigen::Index d,
                     std::optional<Vector> weights = std::nullopt);

Matrix euclidean_distances(const Matrix& coords);

}  // namespace gromovlab
