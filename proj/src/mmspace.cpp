#include "gromovlab/mmspace.hpp"

#include "gromovlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace gromovlab {

namespace {

std::string at(Eigen::Index i, Eigen::Index j) {
  std::ostringstream os;
  os << "(" << i << "," << j << ")";
  return os.str();
}

void check_square(const Matrix& d) {
  if (d.rows() != d.cols() || d.rows() == 0) {
    throw Error(ErrorCode::SizeMismatch, "distance matrix must be square and non-empty");
  }
}

}  // namespace

Matrix euclidean_distances(const Matrix& coords) {
  const Eigen::Index n = coords.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (coords.row(i) - coords.row(j)).norm();
    }
  }
  return d;
}

MmSpace validate(const RawSpace& raw, Strictness strictness) {
  if (!raw.dist && !raw.coords) {
    throw Error(ErrorCode::InvalidParameter, "space needs a distance matrix or coordinates");
  }
  Matrix d = raw.dist ? *raw.dist : euclidean_distances(*raw.coords);
  check_square(d);
  const Eigen::Index n = d.rows();

  if (raw.weights.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "weights length does not match the number of atoms");
  }
  if (!d.allFinite()) throw Error(ErrorCode::InvalidParameter, "distance matrix has non-finite entries");

  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) throw Error(ErrorCode::NonzeroDiagonal, "dist" + at(i, i) + " != 0");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(d(i, j) - d(j, i)) > kSymmetryTol) {
        throw Error(ErrorCode::AsymmetricDistance, "dist" + at(i, j) + " != dist" + at(j, i));
      }
      if (d(i, j) < 0.0) throw Error(ErrorCode::InvalidParameter, "negative distance at " + at(i, j));
    }
  }

  if (strictness == Strictness::Strict) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j && d(i, j) <= 0.0) {
          throw Error(ErrorCode::TriangleViolation, "distinct atoms at zero distance " + at(i, j));
        }
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
          if (d(i, k) > d(i, j) + d(j, k) + kTriangleTol) {
            throw Error(ErrorCode::TriangleViolation,
                        "dist" + at(i, k) + " exceeds path through " + std::to_string(j));
          }
        }
      }
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(raw.weights[i] > 0.0) || !std::isfinite(raw.weights[i])) {
      throw Error(ErrorCode::NonpositiveWeight, "weight " + std::to_string(i) + " is not positive");
    }
  }
  if (std::abs(raw.weights.sum() - 1.0) > kWeightSumTol) {
    throw Error(ErrorCode::WeightSumMismatch, "weights must sum to 1");
  }

  if (raw.coords) {
    if (raw.coords->rows() != n) throw Error(ErrorCode::LengthMismatch, "coords rows != atoms");
    const Matrix derived = euclidean_distances(*raw.coords);
    if ((derived - d).cwiseAbs().maxCoeff() > kCoordTol) {
      throw Error(ErrorCode::CoordDistMismatch, "coordinates disagree with the distance matrix");
    }
  }

  MmSpace space;
  space.label_ = raw.label;
  // Exact symmetry downstream; asymmetry within kSymmetryTol is averaged out.
  space.dist_ = 0.5 * (d + d.transpose());
  space.weights_ = raw.weights;
  space.coords_ = raw.coords;
  return space;
}

RawSpace MmSpace::to_raw() const {
  RawSpace raw;
  raw.label = label_;
  raw.dist = dist_;
  raw.coords = coords_;
  raw.weights = weights_;
  return raw;
}

Permutation::Permutation(std::vector<Eigen::Index> perm) : perm_(std::move(perm)) {
  std::vector<bool> seen(perm_.size(), false);
  for (Eigen::Index v : perm_) {
    if (v < 0 || static_cast<std::size_t>(v) >= perm_.size() || seen[static_cast<std::size_t>(v)]) {
      throw Error(ErrorCode::InvalidParameter, "permutation is not a bijection");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
}

Permutation Permutation::identity(Eigen::Index n) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  return Permutation(std::move(p));
}

Permutation Permutation::inverse() const {
  std::vector<Eigen::Index> inv(perm_.size());
  for (std::size_t i = 0; i < perm_.size(); ++i) inv[static_cast<std::size_t>(perm_[i])] = static_cast<Eigen::Index>(i);
  return Permutation(std::move(inv));
}

MmSpace apply_permutation(const MmSpace& space, const Permutation& p) {
  const Eigen::Index n = space.size();
  if (p.size() != n) throw Error(ErrorCode::LengthMismatch, "permutation length != space size");
  RawSpace raw;
  raw.label = space.label();
  Matrix d(n, n);
  raw.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    raw.weights[i] = space.weights()[p(i)];
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = space.dist()(p(i), p(j));
  }
  raw.dist = std::move(d);
  if (space.coords()) {
    Matrix c(n, space.coords()->cols());
    for (Eigen::Index i = 0; i < n; ++i) c.row(i) = space.coords()->row(p(i));
    raw.coords = std::move(c);
  }
  return validate(raw, Strictness::Lenient);
}

bool is_isomorphism(const Permutation& p, const MmSpace& x, const MmSpace& y, double tol) {
  const Eigen::Index n = x.size();
  if (y.size() != n || p.size() != n) throw Error(ErrorCode::SizeMismatch, "spaces and permutation differ in size");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(x.weights()[i] - y.weights()[p(i)]) > tol) return false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(x.dist()(i, j) - y.dist()(p(i), p(j))) > tol) return false;
    }
  }
  return true;
}

Vector uniform_weights(Eigen::Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

MmSpace single_point_space() {
  RawSpace raw;
  raw.label = "single_point";
  raw.dist = Matrix::Zero(1, 1);
  raw.weights = Vector::Ones(1);
  return validate(raw);
}

MmSpace two_point(double a, std::optional<Vector> weights) {
  if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidParameter, "two_point needs a > 0");
  RawSpace raw;
  raw.label = "two_point";
  Matrix d(2, 2);
  d << 0.0, a, a, 0.0;
  raw.dist = std::move(d);
  raw.weights = weights ? *weights : uniform_weights(2);
  return validate(raw);
}

MmSpace circle(Eigen::Index n, std::optional<Vector> weights) {
  if (n < 1) throw Error(ErrorCode::InvalidParameter, "circle needs n >= 1");
  Matrix c(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    c(i, 0) = std::cos(angle);
    c(i, 1) = std::sin(angle);
  }
  RawSpace raw;
  raw.label = "circle";
  raw.dist = euclidean_distances(c);
  raw.coords = std::move(c);
  raw.weights = weights ? *weights : uniform_weights(n);
  return validate(raw);
}

MmSpace random_cloud(std::uint64_t seed, Eigen::Index n, Eigen::Index d, std::optional<Vector> weights) {
  if (n < 1 || d < 1) throw Error(ErrorCode::InvalidParameter, "random_cloud needs n >= 1 and d >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix c(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) c(i, k) = unit(rng);
  }
  RawSpace raw;
  raw.label = "random_cloud";
  raw.dist = euclidean_distances(c);
  raw.coords = std::move(c);
  raw.weights = weights ? *weights : uniform_weights(n);
  return validate(raw);
}

}  // namespace gromovlab
