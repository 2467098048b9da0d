#include "gromovlab/oracle.hpp"

#include "gromovlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace gromovlab::oracle {

namespace {

constexpr double kClamp = 1e-14;

long long grid_points(int resolution, int dims) {
  long long total = 1;
  for (int d = 0; d < dims; ++d) {
    total *= resolution;
    if (total > kMaxGridPoints) return total;
  }
  return total;
}

// Explicit Hessian of the functional over flattened plan cells.
Matrix cell_hessian(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.rows();
  Matrix h(n * m, n * m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < m; ++l) {
          const double gap = a(i, k) - b(j, l);
          h(i * m + j, k * m + l) = gap * gap;
        }
  return h;
}

// Advances a mixed-radix counter; false once it wraps around.
bool next_point(std::vector<int>& counter, int resolution) {
  for (std::size_t d = 0; d < counter.size(); ++d) {
    if (++counter[d] < resolution) return true;
    counter[d] = 0;
  }
  return false;
}

}  // namespace

double naive_gw_objective(const Matrix& a, const Matrix& b, const Matrix& plan) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.cols(); ++j)
      for (Eigen::Index k = 0; k < plan.rows(); ++k)
        for (Eigen::Index l = 0; l < plan.cols(); ++l) {
          const double gap = a(i, k) - b(j, l);
          total += gap * gap * plan(i, j) * plan(k, l);
        }
  return total;
}

double brute_gw(const MmSpace& x, const MmSpace& y, int resolution) {
  const Eigen::Index n = x.size();
  const Eigen::Index m = y.size();
  const PolytopeGrid grid{static_cast<int>((n - 1) * (m - 1)), resolution};
  if (grid.resolution < 2) throw Error(ErrorCode::InvalidParameter, "resolution must be at least 2");
  if (grid.dims > 4 || grid_points(grid.resolution, grid.dims) > kMaxGridPoints) {
    throw Error(ErrorCode::TooLarge, "polytope grid exceeds the brute-force budget");
  }
  const Vector& mu = x.weights();
  const Vector& nu = y.weights();
  const Matrix h = cell_hessian(x.dist(), y.dist());

  std::vector<int> counter(static_cast<std::size_t>(grid.dims), 0);
  Vector cells(n * m);
  double best = std::numeric_limits<double>::infinity();
  do {
    Matrix p = Matrix::Zero(n, m);
    std::size_t d = 0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      for (Eigen::Index j = 0; j + 1 < m; ++j, ++d) {
        const double span = std::min(mu[i], nu[j]);
        p(i, j) = span * counter[d] / static_cast<double>(grid.resolution - 1);
      }
    }
    bool feasible = true;
    for (Eigen::Index i = 0; i + 1 < n && feasible; ++i) {
      p(i, m - 1) = mu[i] - p.row(i).head(m - 1).sum();
      feasible = p(i, m - 1) >= -kClamp;
    }
    for (Eigen::Index j = 0; j < m && feasible; ++j) {
      p(n - 1, j) = nu[j] - p.col(j).head(n - 1).sum();
      feasible = p(n - 1, j) >= -kClamp;
    }
    if (!feasible) continue;
    p = p.cwiseMax(0.0);
    for (Eigen::Index i = 0; i < n; ++i) cells.segment(i * m, m) = p.row(i).transpose();
    best = std::min(best, cells.dot(h * cells));
  } while (next_point(counter, grid.resolution));
  return best;
}

double permutation_gw_upper(const MmSpace& x, const MmSpace& y) {
  const Eigen::Index n = x.size();
  if (y.size() != n || n > 6) throw Error(ErrorCode::NotApplicable, "needs equal sizes n <= 6");
  const double w = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(x.weights()[i] - w) > 1e-12 || std::abs(y.weights()[i] - w) > 1e-12) {
      throw Error(ErrorCode::NotApplicable, "needs uniform weights");
    }
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = w;
    best = std::min(best, naive_gw_objective(x.dist(), y.dist(), p));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double brute_lgw_inner(const MmSpace& s, const MmSpace& x, const MmSpace& y, const Plan2& piSX, const Plan2& piSY,
                       int resolution) {
  const Eigen::Index nS = s.size();
  if (nS > 3) throw Error(ErrorCode::TooLarge, "brute_lgw_inner needs nS <= 3");
  if (resolution < 2) throw Error(ErrorCode::InvalidParameter, "resolution must be at least 2");
  if (piSX.rows() != nS || piSY.rows() != nS || piSX.cols() != x.size() || piSY.cols() != y.size()) {
    throw Error(ErrorCode::ShapeMismatch, "anchor plans do not match the spaces");
  }

  // Per reference atom: supports of the two conditionals and, when both have
  // two atoms, the range of the single free cell.
  struct Block {
    std::vector<Eigen::Index> xs, ys;
    Vector a, b;
    bool free = false;
  };
  std::vector<Block> blocks(static_cast<std::size_t>(nS));
  int dims = 0;
  for (Eigen::Index r = 0; r < nS; ++r) {
    Block& blk = blocks[static_cast<std::size_t>(r)];
    const double sx = piSX.mass().row(r).sum();
    const double sy = piSY.mass().row(r).sum();
    std::vector<double> av, bv;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (piSX.mass()(r, i) > 0.0) blk.xs.push_back(i), av.push_back(piSX.mass()(r, i) / sx);
    for (Eigen::Index j = 0; j < y.size(); ++j)
      if (piSY.mass()(r, j) > 0.0) blk.ys.push_back(j), bv.push_back(piSY.mass()(r, j) / sy);
    blk.a = Eigen::Map<Vector>(av.data(), static_cast<Eigen::Index>(av.size()));
    blk.b = Eigen::Map<Vector>(bv.data(), static_cast<Eigen::Index>(bv.size()));
    const std::size_t free_dims = (blk.xs.size() - 1) * (blk.ys.size() - 1);
    if (free_dims > 1) throw Error(ErrorCode::TooLarge, "conditional polytope has free dimension > 1");
    blk.free = free_dims == 1;
    dims += blk.free ? 1 : 0;
  }
  if (grid_points(resolution, dims) > kMaxGridPoints) throw Error(ErrorCode::TooLarge, "grid too large");

  std::vector<int> counter(static_cast<std::size_t>(dims), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    Matrix pair = Matrix::Zero(x.size(), y.size());
    std::size_t d = 0;
    for (Eigen::Index r = 0; r < nS; ++r) {
      const Block& blk = blocks[static_cast<std::size_t>(r)];
      const double sigma = s.weights()[r];
      if (!blk.free) {
        // A 1 x k or k x 1 conditional polytope has a single point.
        for (std::size_t i = 0; i < blk.xs.size(); ++i)
          for (std::size_t j = 0; j < blk.ys.size(); ++j)
            pair(blk.xs[i], blk.ys[j]) += sigma * (blk.xs.size() == 1 ? blk.b[static_cast<Eigen::Index>(j)]
                                                                      : blk.a[static_cast<Eigen::Index>(i)]);
        continue;
      }
      const double t = std::min(blk.a[0], blk.b[0]) * counter[d++] / static_cast<double>(resolution - 1);
      const double c01 = blk.a[0] - t;
      const double c10 = blk.b[0] - t;
      const double c11 = blk.a[1] - c10;
      if (c01 < -kClamp || c10 < -kClamp || c11 < -kClamp) {
        pair(0, 0) = std::numeric_limits<double>::quiet_NaN();
        break;
      }
      pair(blk.xs[0], blk.ys[0]) += sigma * t;
      pair(blk.xs[0], blk.ys[1]) += sigma * std::max(c01, 0.0);
      pair(blk.xs[1], blk.ys[0]) += sigma * std::max(c10, 0.0);
      pair(blk.xs[1], blk.ys[1]) += sigma * std::max(c11, 0.0);
    }
    if (std::isnan(pair(0, 0))) continue;
    best = std::min(best, naive_gw_objective(x.dist(), y.dist(), pair));
  } while (next_point(counter, resolution));
  return best;
}

}  // namespace gromovlab::oracle
