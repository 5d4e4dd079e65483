#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace l1tik {

/// Uniform midpoint mesh on [0, 1]. Cell i (0-based) has midpoint
/// (2i + 1) / (2n) and measure 1/n.
class Grid {
 public:
  explicit Grid(Eigen::Index n);

  Eigen::Index size() const { return n_; }
  double weight() const { return 1.0 / static_cast<double>(n_); }
  double point(Eigen::Index i) const {
    return (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n_));
  }
  Eigen::VectorXd points() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Eigen::Index n_;
};

Grid make_grid(Eigen::Index n);

/// Pointwise samples of a function on a Grid.
class Signal {
 public:
  Signal(const Grid& grid, Eigen::VectorXd values);

  static Signal zeros(const Grid& grid);
  static Signal constant(const Grid& grid, double value);
  template <typename F>
  static Signal sample(const Grid& grid, F&& f) {
    Eigen::VectorXd v(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) v[i] = f(grid.point(i));
    return Signal(grid, std::move(v));
  }

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return grid_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

  Signal operator+(const Signal& other) const;
  Signal operator-(const Signal& other) const;
  Signal operator*(double scale) const;

 private:
  Grid grid_;
  Eigen::VectorXd values_;
};

enum class Norm { L1, L2, Linf };

// Weighted (unit-measure) forms on raw sample vectors. These accept any Eigen
// expression so callers can avoid materializing temporaries.
template <typename DerivedU, typename DerivedV>
double weighted_inner(const Eigen::MatrixBase<DerivedU>& u,
                      const Eigen::MatrixBase<DerivedV>& v) {
  return u.dot(v) / static_cast<double>(u.size());
}

template <typename Derived>
double weighted_l1(const Eigen::MatrixBase<Derived>& u) {
  return u.template lpNorm<1>() / static_cast<double>(u.size());
}

template <typename Derived>
double weighted_sq_l2(const Eigen::MatrixBase<Derived>& u) {
  return u.squaredNorm() / static_cast<double>(u.size());
}

/// Throws std::invalid_argument if the grids differ.
void require_same_grid(const Signal& u, const Signal& v);

double inner(const Signal& u, const Signal& v);
double norm(const Signal& u, Norm mode);

/// Bregman distance of R(u) = ||u||^2 / 2, i.e. ||u - u_dag||^2 / 2.
double bregman_error(const Signal& u, const Signal& u_dag);

}  // namespace l1tik
