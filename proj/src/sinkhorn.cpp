#include "gromovlab/sinkhorn.hpp"

#include "gromovlab/error.hpp"

#include <cmath>
#include <limits>

namespace gromovlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector safe_log(const Vector& w) {
  Vector out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] < 0.0 || !std::isfinite(w[i])) throw Error(ErrorCode::InvalidParameter, "marginal must be nonnegative");
    out[i] = w[i] > 0.0 ? std::log(w[i]) : -kInf;
  }
  return out;
}

// log sum_j exp(z(j)), tolerating -inf entries.
template <class Fn>
double log_sum_exp(Eigen::Index count, Fn&& z) {
  double hi = -kInf;
  for (Eigen::Index j = 0; j < count; ++j) hi = std::max(hi, z(j));
  if (hi == -kInf) return -kInf;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < count; ++j) {
    const double v = z(j);
    if (v != -kInf) acc += std::exp(v - hi);
  }
  return hi + std::log(acc);
}

void check_finite(const Vector& v, const Vector& log_mass) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (log_mass[i] != -kInf && !std::isfinite(v[i])) {
      throw Error(ErrorCode::NumericalOverflow, "sinkhorn potential is not finite");
    }
  }
}

}  // namespace

SinkhornResult sinkhorn(const Matrix& cost, const Vector& mu, const Vector& nu, double eta, int max_iter, double tol,
                        const SinkhornResult* warm) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  if (mu.size() != n || nu.size() != m) throw Error(ErrorCode::ShapeMismatch, "cost shape does not match marginals");
  if (!(eta > 0.0)) throw Error(ErrorCode::InvalidParameter, "eta must be positive");
  if (!cost.allFinite()) throw Error(ErrorCode::InvalidParameter, "cost must be finite");

  const Vector log_mu = safe_log(mu);
  const Vector log_nu = safe_log(nu);

  SinkhornResult r;
  r.f = Vector::Zero(n);
  r.g = Vector::Zero(m);
  if (warm != nullptr && warm->f.size() == n && warm->g.size() == m) {
    r.f = warm->f;
    r.g = warm->g;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (log_mu[i] == -kInf) r.f[i] = -kInf;
    else if (!std::isfinite(r.f[i])) r.f[i] = 0.0;
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    if (log_nu[j] == -kInf) r.g[j] = -kInf;
    else if (!std::isfinite(r.g[j])) r.g[j] = 0.0;
  }

  auto row_lse = [&](Eigen::Index i) {
    return log_sum_exp(m, [&](Eigen::Index j) { return (r.g[j] - cost(i, j)) / eta; });
  };
  auto col_lse = [&](Eigen::Index j) {
    return log_sum_exp(n, [&](Eigen::Index i) { return (r.f[i] - cost(i, j)) / eta; });
  };

  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (log_mu[i] != -kInf) r.f[i] = eta * (log_mu[i] - row_lse(i));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (log_nu[j] != -kInf) r.g[j] = eta * (log_nu[j] - col_lse(j));
    }
    check_finite(r.f, log_mu);
    check_finite(r.g, log_nu);
    double violation = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double row = log_mu[i] == -kInf ? 0.0 : std::exp(r.f[i] / eta + row_lse(i));
      violation += std::abs(row - mu[i]);
    }
    r.violation = violation;
    if (violation <= tol) {
      r.converged = true;
      break;
    }
  }
  if (r.iterations > max_iter) r.iterations = max_iter;

  r.plan.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double z = r.f[i] + r.g[j];
      r.plan(i, j) = z == -kInf ? 0.0 : std::exp((z - cost(i, j)) / eta);
    }
  }
  if (!r.plan.allFinite()) throw Error(ErrorCode::NumericalOverflow, "sinkhorn plan is not finite");
  return r;
}

Plan2 sinkhorn_plan(const Matrix& cost, const Vector& mu, const Vector& nu, double eta, int max_iter, double tol) {
  SinkhornResult r = sinkhorn(cost, mu, nu, eta, max_iter, tol);
  return Plan2(std::move(r.plan), mu, nu);
}

MultiSinkhornResult multi_sinkhorn(const Tensor& cost, const std::vector<Vector>& marginals,
                                   const std::vector<bool>& constrained, double eta, int max_iter, double tol,
                                   const std::vector<Vector>* warm) {
  const std::size_t rank = cost.rank();
  if (marginals.size() != rank || constrained.size() != rank) {
    throw Error(ErrorCode::ShapeMismatch, "marginal count differs from tensor rank");
  }
  if (!(eta > 0.0)) throw Error(ErrorCode::InvalidParameter, "eta must be positive");

  std::vector<Vector> log_marg(rank);
  MultiSinkhornResult r;
  r.potentials.resize(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    if (marginals[k].size() != cost.extent(k)) throw Error(ErrorCode::ShapeMismatch, "marginal length mismatch");
    r.potentials[k] = Vector::Zero(cost.extent(k));
    if (!constrained[k]) continue;
    log_marg[k] = safe_log(marginals[k]);
    if (warm != nullptr && warm->size() == rank && (*warm)[k].size() == cost.extent(k)) {
      r.potentials[k] = (*warm)[k];
    }
    for (Eigen::Index a = 0; a < cost.extent(k); ++a) {
      if (log_marg[k][a] == -kInf) r.potentials[k][a] = -kInf;
      else if (!std::isfinite(r.potentials[k][a])) r.potentials[k][a] = 0.0;
    }
  }

  // z[x] = (sum_k f_k[x_k] - cost[x]) / eta, updated incrementally.
  std::vector<double> z(cost.size());
  for (std::size_t x = 0; x < cost.size(); ++x) {
    double s = 0.0;
    for (std::size_t k = 0; k < rank; ++k) s += r.potentials[k][cost.coordinate(x, k)];
    z[x] = s == -kInf ? -kInf : (s - cost[x]) / eta;
  }

  auto axis_log_marginal = [&](std::size_t k) {
    const Eigen::Index len = cost.extent(k);
    Vector hi = Vector::Constant(len, -kInf);
    for (std::size_t x = 0; x < z.size(); ++x) {
      const Eigen::Index a = cost.coordinate(x, k);
      hi[a] = std::max(hi[a], z[x]);
    }
    Vector acc = Vector::Zero(len);
    for (std::size_t x = 0; x < z.size(); ++x) {
      const Eigen::Index a = cost.coordinate(x, k);
      if (z[x] != -kInf) acc[a] += std::exp(z[x] - hi[a]);
    }
    Vector out(len);
    for (Eigen::Index a = 0; a < len; ++a) out[a] = hi[a] == -kInf ? -kInf : hi[a] + std::log(acc[a]);
    return out;
  };

  bool any_constrained = false;
  for (std::size_t k = 0; k < rank; ++k) any_constrained = any_constrained || constrained[k];

  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    for (std::size_t k = 0; k < rank; ++k) {
      if (!constrained[k]) continue;
      const Vector lm = axis_log_marginal(k);
      Vector delta = Vector::Zero(lm.size());
      for (Eigen::Index a = 0; a < lm.size(); ++a) {
        if (log_marg[k][a] == -kInf || lm[a] == -kInf) continue;
        delta[a] = eta * (log_marg[k][a] - lm[a]);
        r.potentials[k][a] += delta[a];
        if (!std::isfinite(r.potentials[k][a])) {
          throw Error(ErrorCode::NumericalOverflow, "multi-marginal potential is not finite");
        }
      }
      for (std::size_t x = 0; x < z.size(); ++x) {
        if (z[x] != -kInf) z[x] += delta[cost.coordinate(x, k)] / eta;
      }
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < rank; ++k) {
      if (!constrained[k]) continue;
      const Vector lm = axis_log_marginal(k);
      double v = 0.0;
      for (Eigen::Index a = 0; a < lm.size(); ++a) v += std::abs((lm[a] == -kInf ? 0.0 : std::exp(lm[a])) - marginals[k][a]);
      worst = std::max(worst, v);
    }
    r.violation = worst;
    if (worst <= tol || !any_constrained) {
      r.converged = true;
      break;
    }
  }
  if (r.iterations > max_iter) r.iterations = max_iter;

  r.plan = Tensor(cost.shape());
  if (!any_constrained) {
    // Nothing pins the mass: normalize the Gibbs kernel.
    double hi = -kInf;
    for (double v : z) hi = std::max(hi, v);
    double total = 0.0;
    for (std::size_t x = 0; x < z.size(); ++x) total += (r.plan[x] = std::exp(z[x] - hi));
    for (std::size_t x = 0; x < z.size(); ++x) r.plan[x] /= total;
    return r;
  }
  for (std::size_t x = 0; x < z.size(); ++x) {
    r.plan[x] = z[x] == -kInf ? 0.0 : std::exp(z[x]);
    if (!std::isfinite(r.plan[x])) throw Error(ErrorCode::NumericalOverflow, "multi-marginal plan is not finite");
  }
  return r;
}

}  // namespace gromovlab
