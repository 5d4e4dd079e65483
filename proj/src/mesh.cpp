#include "l1tik/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace l1tik {

Grid::Grid(Eigen::Index n) : n_(n) {
  if (n < 1) {
    throw std::invalid_argument("grid size must be positive, got " + std::to_string(n));
  }
}

Eigen::VectorXd Grid::points() const {
  Eigen::VectorXd x(n_);
  for (Eigen::Index i = 0; i < n_; ++i) x[i] = point(i);
  return x;
}

Grid make_grid(Eigen::Index n) { return Grid(n); }

Signal::Signal(const Grid& grid, Eigen::VectorXd values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("signal length " + std::to_string(values_.size()) +
                                " does not match grid size " +
                                std::to_string(grid_.size()));
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("signal contains non-finite values");
  }
}

Signal Signal::zeros(const Grid& grid) {
  return Signal(grid, Eigen::VectorXd::Zero(grid.size()));
}

Signal Signal::constant(const Grid& grid, double value) {
  return Signal(grid, Eigen::VectorXd::Constant(grid.size(), value));
}

Signal Signal::operator+(const Signal& other) const {
  require_same_grid(*this, other);
  return Signal(grid_, values_ + other.values_);
}

Signal Signal::operator-(const Signal& other) const {
  require_same_grid(*this, other);
  return Signal(grid_, values_ - other.values_);
}

Signal Signal::operator*(double scale) const { return Signal(grid_, values_ * scale); }

void require_same_grid(const Signal& u, const Signal& v) {
  if (!(u.grid() == v.grid())) {
    throw std::invalid_argument("grid mismatch: " + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()));
  }
}

double inner(const Signal& u, const Signal& v) {
  require_same_grid(u, v);
  return weighted_inner(u.values(), v.values());
}

double norm(const Signal& u, Norm mode) {
  switch (mode) {
    case Norm::L1:
      return weighted_l1(u.values());
    case Norm::L2:
      return std::sqrt(weighted_sq_l2(u.values()));
    case Norm::Linf:
      return u.values().lpNorm<Eigen::Infinity>();
  }
  throw std::invalid_argument("unknown norm");
}

double bregman_error(const Signal& u, const Signal& u_dag) {
  require_same_grid(u, u_dag);
  return 0.5 * weighted_sq_l2(u.values() - u_dag.values());
}

}  // namespace l1tik
