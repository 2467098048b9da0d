#include "gromovlab/coupling.hpp"

#include "gromovlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gromovlab {

double l1_distance(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().sum(); }

Tensor to_tensor(const Matrix& m) {
  Tensor t({m.rows(), m.cols()});
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) t[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  }
  return t;
}

Matrix to_matrix(const Tensor& t) {
  if (t.rank() != 2) throw Error(ErrorCode::ShapeMismatch, "expected a rank-2 tensor");
  Matrix m(t.extent(0), t.extent(1));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = t[static_cast<std::size_t>(i * m.cols() + j)];
  }
  return m;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), strides_(shape_.size()) {
  Eigen::Index total = 1;
  for (std::size_t k = shape_.size(); k-- > 0;) {
    if (shape_[k] < 1) throw Error(ErrorCode::ShapeMismatch, "tensor extents must be positive");
    strides_[k] = total;
    total *= shape_[k];
  }
  data_.assign(static_cast<std::size_t>(total), fill);
}

std::size_t Tensor::flat_index(std::span<const Eigen::Index> index) const {
  if (index.size() != shape_.size()) throw Error(ErrorCode::ShapeMismatch, "index rank != tensor rank");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    if (index[k] < 0 || index[k] >= shape_[k]) throw Error(ErrorCode::IndexOutOfRange, "tensor index out of range");
    flat += static_cast<std::size_t>(index[k] * strides_[k]);
  }
  return flat;
}

double& Tensor::at(std::span<const Eigen::Index> index) { return data_[flat_index(index)]; }

double Tensor::at(std::span<const Eigen::Index> index) const { return data_[flat_index(index)]; }

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

Vector Tensor::axis_marginal(std::size_t axis) const {
  Vector m = Vector::Zero(shape_[axis]);
  for (std::size_t f = 0; f < data_.size(); ++f) m[coordinate(f, axis)] += data_[f];
  return m;
}

Matrix Tensor::pair_marginal(std::size_t a, std::size_t b) const {
  Matrix m = Matrix::Zero(shape_[a], shape_[b]);
  for (std::size_t f = 0; f < data_.size(); ++f) m(coordinate(f, a), coordinate(f, b)) += data_[f];
  return m;
}

// ---------------------------------------------------------------------------

Plan2::Plan2(Matrix mass, Vector mu, Vector nu) : mass_(std::move(mass)), mu_(std::move(mu)), nu_(std::move(nu)) {
  if (mass_.rows() != mu_.size() || mass_.cols() != nu_.size()) {
    throw Error(ErrorCode::MarginalMismatch, "plan shape does not match its marginals");
  }
  if (!mass_.allFinite() || mass_.minCoeff() < 0.0) {
    throw Error(ErrorCode::MarginalMismatch, "plan has negative or non-finite mass");
  }
  if (std::abs(mass_.sum() - 1.0) > kMassTol) throw Error(ErrorCode::MarginalMismatch, "plan mass != 1");
  if (l1_distance(mass_.rowwise().sum(), mu_) > kMarginalTol) {
    throw Error(ErrorCode::MarginalMismatch, "row sums differ from mu");
  }
  if (l1_distance(mass_.colwise().sum().transpose(), nu_) > kMarginalTol) {
    throw Error(ErrorCode::MarginalMismatch, "column sums differ from nu");
  }
}

Plan2 Plan2::product(const Vector& mu, const Vector& nu) { return Plan2(mu * nu.transpose(), mu, nu); }

Plan2 Plan2::from_permutation(const Permutation& p, const Vector& mu) {
  const Eigen::Index n = p.size();
  if (mu.size() != n) throw Error(ErrorCode::LengthMismatch, "permutation length != marginal length");
  Matrix m = Matrix::Zero(n, n);
  Vector nu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, p(i)) = mu[i];
    nu[p(i)] = mu[i];
  }
  return Plan2(std::move(m), mu, std::move(nu));
}

// ---------------------------------------------------------------------------

namespace {

void check_tensor_plan(const Tensor& mass, std::span<const Vector> marginals, const std::vector<bool>& constrained) {
  if (marginals.size() != mass.rank() || constrained.size() != mass.rank()) {
    throw Error(ErrorCode::ShapeMismatch, "marginal count differs from tensor rank");
  }
  for (std::size_t k = 0; k < mass.rank(); ++k) {
    if (marginals[k].size() != mass.extent(k)) throw Error(ErrorCode::ShapeMismatch, "marginal length mismatch");
  }
  for (double v : mass.data()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::MarginalMismatch, "plan has negative mass");
  }
  if (std::abs(mass.sum() - 1.0) > kMassTol) throw Error(ErrorCode::MarginalMismatch, "plan mass != 1");
  for (std::size_t k = 0; k < mass.rank(); ++k) {
    if (constrained[k] && l1_distance(mass.axis_marginal(k), marginals[k]) > kMarginalTol) {
      throw Error(ErrorCode::MarginalMismatch, "axis " + std::to_string(k) + " marginal violated");
    }
  }
}

}  // namespace

Plan3::Plan3(Tensor mass, Vector sigma, Vector mu, Vector nu)
    : mass_(std::move(mass)), sigma_(std::move(sigma)), mu_(std::move(mu)), nu_(std::move(nu)) {
  if (mass_.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "Plan3 needs a rank-3 tensor");
  const Vector marg[3] = {sigma_, mu_, nu_};
  check_tensor_plan(mass_, marg, {true, true, true});
}

const Vector& Plan3::marginal(Axis3 axis) const {
  switch (axis) {
    case Axis3::S: return sigma_;
    case Axis3::X: return mu_;
    case Axis3::Y: return nu_;
  }
  return sigma_;
}

MultiPlan::MultiPlan(Tensor mass, std::vector<Vector> marginals, std::vector<bool> constrained)
    : mass_(std::move(mass)), marginals_(std::move(marginals)), constrained_(std::move(constrained)) {
  check_tensor_plan(mass_, marginals_, constrained_);
  for (std::size_t k = 0; k < mass_.rank(); ++k) {
    if (constrained_[k]) continue;
    marginals_[k] = mass_.axis_marginal(k);
    marginals_[k] /= marginals_[k].sum();
  }
}

double MultiPlan::marginal_violation() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < mass_.rank(); ++k) {
    if (constrained_[k]) worst = std::max(worst, l1_distance(mass_.axis_marginal(k), marginals_[k]));
  }
  return worst;
}

// ---------------------------------------------------------------------------

Plan2 project_pair(const Plan3& plan, Axis3 first, Axis3 second) {
  if (first == second) throw Error(ErrorCode::InvalidParameter, "projection axes must differ");
  Matrix m = plan.mass().pair_marginal(static_cast<std::size_t>(first), static_cast<std::size_t>(second));
  return Plan2(std::move(m), plan.marginal(first), plan.marginal(second));
}

Plan3 glue(const Plan2& piSX, const Plan2& piSY, const Vector& sigma) {
  const Eigen::Index nS = sigma.size();
  if (piSX.rows() != nS || piSY.rows() != nS || l1_distance(piSX.mu(), sigma) > kMarginalTol ||
      l1_distance(piSY.mu(), sigma) > kMarginalTol) {
    throw Error(ErrorCode::SharedMarginalMismatch, "plans do not share the reference marginal");
  }
  const Eigen::Index nX = piSX.cols();
  const Eigen::Index nY = piSY.cols();
  const Vector rowY = piSY.mass().rowwise().sum();
  Tensor t({nS, nX, nY});
  for (Eigen::Index s = 0; s < nS; ++s) {
    if (rowY[s] <= 0.0) continue;
    for (Eigen::Index x = 0; x < nX; ++x) {
      const double a = piSX.mass()(s, x) / rowY[s];
      for (Eigen::Index y = 0; y < nY; ++y) {
        t[static_cast<std::size_t>((s * nX + x) * nY + y)] = a * piSY.mass()(s, y);
      }
    }
  }
  return Plan3(std::move(t), sigma, piSX.nu(), piSY.nu());
}

DiscreteMap barycentric_map(const Plan2& plan, MapMode mode, const MmSpace& target) {
  const Matrix& m = plan.mass();
  if (m.cols() != target.size()) throw Error(ErrorCode::ShapeMismatch, "plan columns != target atoms");
  DiscreteMap map;
  map.target_index.resize(static_cast<std::size_t>(m.rows()));
  if (mode == MapMode::ModeArgmax) {
    for (Eigen::Index s = 0; s < m.rows(); ++s) {
      Eigen::Index best = 0;
      for (Eigen::Index x = 1; x < m.cols(); ++x) {
        if (m(s, x) > m(s, best)) best = x;
      }
      map.target_index[static_cast<std::size_t>(s)] = best;
    }
    return map;
  }
  if (!target.coords()) throw Error(ErrorCode::MissingCoords, "euclidean_mean needs target coordinates");
  const Matrix& c = *target.coords();
  for (Eigen::Index s = 0; s < m.rows(); ++s) {
    const double row = m.row(s).sum();
    const Eigen::RowVectorXd mean = (m.row(s) * c) / row;
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index x = 0; x < c.rows(); ++x) {
      const double d = (c.row(x) - mean).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = x;
      }
    }
    map.target_index[static_cast<std::size_t>(s)] = best;
  }
  return map;
}

Matrix map_plan(const DiscreteMap& map, const Vector& sigma, Eigen::Index target_size) {
  if (static_cast<Eigen::Index>(map.target_index.size()) != sigma.size()) {
    throw Error(ErrorCode::LengthMismatch, "map length != reference size");
  }
  Matrix m = Matrix::Zero(sigma.size(), target_size);
  for (Eigen::Index s = 0; s < sigma.size(); ++s) {
    const Eigen::Index t = map.target_index[static_cast<std::size_t>(s)];
    if (t < 0 || t >= target_size) throw Error(ErrorCode::IndexOutOfRange, "map index out of range");
    m(s, t) += sigma[s];
  }
  return m;
}

Matrix round_to_marginals(Matrix plan, const Vector& mu, const Vector& nu) {
  const Vector rows = plan.rowwise().sum();
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    if (rows[i] > mu[i]) plan.row(i) *= mu[i] / rows[i];
  }
  const Vector cols = plan.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    if (cols[j] > nu[j]) plan.col(j) *= nu[j] / cols[j];
  }
  const Vector err_r = (mu - plan.rowwise().sum()).cwiseMax(0.0);
  const Vector err_c = (nu - plan.colwise().sum().transpose()).cwiseMax(0.0);
  const double deficit = err_r.sum();
  if (deficit > 0.0) plan += err_r * err_c.transpose() / deficit;
  return plan;
}

void round_to_marginals(Tensor& plan, const std::vector<Vector>& marginals, const std::vector<bool>& constrained) {
  const std::size_t rank = plan.rank();
  for (std::size_t k = 0; k < rank; ++k) {
    if (!constrained[k]) continue;
    const Vector m = plan.axis_marginal(k);
    Vector scale = Vector::Ones(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (m[i] > marginals[k][i]) scale[i] = marginals[k][i] / m[i];
    }
    for (std::size_t f = 0; f < plan.size(); ++f) plan[f] *= scale[plan.coordinate(f, k)];
  }
  const double deficit = 1.0 - plan.sum();
  if (!(deficit > 0.0)) return;
  std::vector<Vector> factors(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    if (constrained[k]) {
      factors[k] = (marginals[k] - plan.axis_marginal(k)).cwiseMax(0.0);
    } else {
      factors[k] = plan.axis_marginal(k);
      if (!(factors[k].sum() > 0.0)) factors[k] = Vector::Ones(factors[k].size());
    }
    const double total = factors[k].sum();
    factors[k] /= total > 0.0 ? total : 1.0;
  }
  for (std::size_t f = 0; f < plan.size(); ++f) {
    double v = deficit;
    for (std::size_t k = 0; k < rank; ++k) v *= factors[k][plan.coordinate(f, k)];
    plan[f] += v;
  }
}

}  // namespace gromovlab
