#pragma once

#include "gromovlab/mmspace.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace gromovlab {

inline constexpr double kMarginalTol = 1e-7;
inline constexpr double kMassTol = 1e-9;

using Shape = std::vector<Eigen::Index>;

/// Dense row-major tensor (last axis varies fastest).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  Eigen::Index extent(std::size_t axis) const { return shape_[axis]; }
  Eigen::Index stride(std::size_t axis) const { return strides_[axis]; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }
  double& at(std::span<const Eigen::Index> index);
  double at(std::span<const Eigen::Index> index) const;
  std::size_t flat_index(std::span<const Eigen::Index> index) const;

  /// Index along `axis` of the entry stored at `flat`.
  Eigen::Index coordinate(std::size_t flat, std::size_t axis) const {
    return (static_cast<Eigen::Index>(flat) / strides_[axis]) % shape_[axis];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double sum() const;

  Vector axis_marginal(std::size_t axis) const;
  /// Sum over every axis except `a` and `b`; rows index axis a.
  Matrix pair_marginal(std::size_t a, std::size_t b) const;

 private:
  Shape shape_;
  std::vector<Eigen::Index> strides_;
  std::vector<double> data_;
};

/// Two-marginal transport plan with prescribed marginals (mu, nu).
class Plan2 {
 public:
  /// Throws MarginalMismatch when the invariants do not hold.
  Plan2(Matrix mass, Vector mu, Vector nu);

  const Matrix& mass() const noexcept { return mass_; }
  const Vector& mu() const noexcept { return mu_; }
  const Vector& nu() const noexcept { return nu_; }
  Eigen::Index rows() const noexcept { return mass_.rows(); }
  Eigen::Index cols() const noexcept { return mass_.cols(); }

  static Plan2 product(const Vector& mu, const Vector& nu);
  static Plan2 from_permutation(const Permutation& p, const Vector& mu);

 private:
  Matrix mass_;
  Vector mu_;
  Vector nu_;
};

enum class Axis3 { S = 0, X = 1, Y = 2 };

/// Three-way plan over S x X x Y.
class Plan3 {
 public:
  Plan3(Tensor mass, Vector sigma, Vector mu, Vector nu);

  const Tensor& mass() const noexcept { return mass_; }
  const Vector& sigma() const noexcept { return sigma_; }
  const Vector& mu() const noexcept { return mu_; }
  const Vector& nu() const noexcept { return nu_; }
  const Vector& marginal(Axis3 axis) const;

 private:
  Tensor mass_;
  Vector sigma_;
  Vector mu_;
  Vector nu_;
};

/// N-way plan. Axes with a false mask entry are unconstrained; their stored
/// marginal is whatever the plan carries.
class MultiPlan {
 public:
  MultiPlan(Tensor mass, std::vector<Vector> marginals, std::vector<bool> constrained);

  const Tensor& mass() const noexcept { return mass_; }
  const std::vector<Vector>& marginals() const noexcept { return marginals_; }
  const std::vector<bool>& constrained() const noexcept { return constrained_; }
  std::size_t rank() const noexcept { return mass_.rank(); }

  /// Largest L1 violation over constrained axes.
  double marginal_violation() const;

 private:
  Tensor mass_;
  std::vector<Vector> marginals_;
  std::vector<bool> constrained_;
};

/// T: S -> X by atom index.
struct DiscreteMap {
  std::vector<Eigen::Index> target_index;
};

Plan2 project_pair(const Plan3& plan, Axis3 first, Axis3 second);

/// mass[s,x,y] = piSX[s,x] * piSY[s,y] / sigma[s]; both pair projections
/// reproduce the inputs.
Plan3 glue(const Plan2& piSX, const Plan2& piSY, const Vector& sigma);

enum class MapMode { ModeArgmax, EuclideanMean };

DiscreteMap barycentric_map(const Plan2& plan, MapMode mode, const MmSpace& target);

/// Deterministic plan of a map: mass sigma[s] on (s, T(s)).
Matrix map_plan(const DiscreteMap& map, const Vector& sigma, Eigen::Index target_size);

/// Projects a nonnegative matrix onto the transportation polytope of (mu, nu)
/// by scaling rows and columns down and adding a rank-one correction.
Matrix round_to_marginals(Matrix plan, const Vector& mu, const Vector& nu);

/// Multi-marginal analogue. Unconstrained axes receive the correction in
/// proportion to their current marginal.
void round_to_marginals(Tensor& plan, const std::vector<Vector>& marginals,
                        const std::vector<bool>& constrained);

double l1_distance(const Vector& a, const Vector& b);

Tensor to_tensor(const Matrix& m);
/// Rank-2 tensor back to a matrix.
Matrix to_matrix(const Tensor& t);

}  // namespace gromovlab
