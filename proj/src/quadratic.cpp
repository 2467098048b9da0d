#include "gromovlab/quadratic.hpp"

namespace gromovlab {

Matrix linearized_cost(const Matrix& a, const Matrix& b, const Matrix& p) {
  const Vector rows = p.rowwise().sum();
  const Vector cols = p.colwise().sum().transpose();
  const Vector left = a.cwiseAbs2() * rows;
  const Vector right = b.cwiseAbs2() * cols;
  Matrix c = -2.0 * (a * p * b.transpose());
  c.colwise() += left;
  c.rowwise() += right.transpose();
  return c;
}

double quadratic_value(const Matrix& a, const Matrix& b, const Matrix& p) {
  const Vector rows = p.rowwise().sum();
  const Vector cols = p.colwise().sum().transpose();
  const double left = rows.dot(a.cwiseAbs2() * rows);
  const double right = cols.dot(b.cwiseAbs2() * cols);
  const double cross = p.cwiseProduct(a * p * b.transpose()).sum();
  return left + right - 2.0 * cross;
}

}  // namespace gromovlab
