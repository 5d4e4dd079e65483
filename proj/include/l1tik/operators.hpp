#pragma once

#include "l1tik/mesh.hpp"

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace l1tik {

enum class KernelId { DirichletGreen };

/// Green's function of -d^2/dx^2 on [0, 1] with homogeneous Dirichlet
/// boundary conditions: k(x, y) = min{x (1 - y), y (1 - x)}.
inline double green_kernel(double x, double y) {
  const double a = x * (1.0 - y);
  const double b = y * (1.0 - x);
  return a < b ? a : b;
}

/// Midpoint-rule discretization of an integral operator. matrix()(j, i) is
/// (1/n) k(x_j, x_i), so apply() is a plain matrix-vector product and the
/// adjoint with respect to the weighted inner product is the transpose.
class KernelOperator {
 public:
  KernelOperator(const Grid& grid, Eigen::MatrixXd matrix, KernelId kernel);

  const Grid& grid() const { return grid_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  KernelId kernel() const { return kernel_; }

  /// A A^T, the Hessian of the (n-scaled) dual objective.
  const Eigen::MatrixXd& gram() const { return gram_; }
  /// A^T A, the normal-equation matrix of L2 fitting.
  const Eigen::MatrixXd& normal() const { return normal_; }
  /// Power-iteration estimate of the largest eigenvalue of gram().
  double gram_norm() const { return gram_norm_; }

 private:
  Grid grid_;
  Eigen::MatrixXd matrix_;
  KernelId kernel_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd normal_;
  double gram_norm_;
};

KernelOperator assemble(const Grid& grid);

Signal apply(const KernelOperator& op, const Signal& f);
Signal apply_adjoint(const KernelOperator& op, const Signal& p);

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
double power_iteration(const Eigen::MatrixXd& m, int max_iter = 500, double tol = 1e-12);

struct TestProblem {
  std::string name;
  Signal u_dag;
  /// Exact data T u_dag sampled from its closed form, not from the matrix.
  Signal g_dag_analytic;
  std::string description;
  /// ||omega||_inf when u_dag = T* omega is known in closed form, else 0.
  double source_sup_norm = 0.0;
};

/// Known names: constant_one, sine_<k> (k >= 1), benchmark_omega_one.
TestProblem make_test_problem(std::string_view name, const Grid& grid);

}  // namespace l1tik
