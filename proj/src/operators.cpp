#include "l1tik/operators.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace l1tik {

KernelOperator::KernelOperator(const Grid& grid, Eigen::MatrixXd matrix, KernelId kernel)
    : grid_(grid), matrix_(std::move(matrix)), kernel_(kernel) {
  if (matrix_.rows() != grid_.size() || matrix_.cols() != grid_.size()) {
    throw std::invalid_argument("operator matrix does not match grid");
  }
  gram_.noalias() = matrix_ * matrix_.transpose();
  normal_.noalias() = matrix_.transpose() * matrix_;
  gram_norm_ = power_iteration(gram_);
}

KernelOperator assemble(const Grid& grid) {
  const Eigen::Index n = grid.size();
  const Eigen::VectorXd x = grid.points();
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(j, i) = grid.weight() * green_kernel(x[j], x[i]);
  }
  return KernelOperator(grid, std::move(a), KernelId::DirichletGreen);
}

Signal apply(const KernelOperator& op, const Signal& f) {
  if (!(f.grid() == op.grid())) throw std::invalid_argument("apply: grid mismatch");
  return Signal(op.grid(), op.matrix() * f.values());
}

Signal apply_adjoint(const KernelOperator& op, const Signal& p) {
  if (!(p.grid() == op.grid())) throw std::invalid_argument("apply_adjoint: grid mismatch");
  return Signal(op.grid(), op.matrix().transpose() * p.values());
}

double power_iteration(const Eigen::MatrixXd& m, int max_iter, double tol) {
  const Eigen::Index n = m.rows();
  if (n == 0) return 0.0;
  // Start away from any eigenvector orthogonal to the constant.
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0).normalized();
  double lambda = 0.0;
  for (int k = 0; k < max_iter; ++k) {
    Eigen::VectorXd w = m * v;
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (std::abs(next - lambda) <= tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

namespace {

constexpr double kPi = std::numbers::pi;

int parse_sine_index(std::string_view name) {
  constexpr std::string_view prefix = "sine_";
  if (!name.starts_with(prefix)) return 0;
  const std::string_view digits = name.substr(prefix.size());
  int k = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || k < 1) return 0;
  return k;
}

}  // namespace

TestProblem make_test_problem(std::string_view name, const Grid& grid) {
  if (name == "constant_one") {
    return {std::string(name), Signal::constant(grid, 1.0),
            Signal::sample(grid, [](double x) { return 0.5 * x * (1.0 - x); }),
            "u = 1, g = x(1-x)/2", 0.0};
  }
  if (name == "benchmark_omega_one") {
    // u = T*1 = x(1-x)/2; g = T u solves -g'' = u with g(0) = g(1) = 0.
    return {std::string(name),
            Signal::sample(grid, [](double x) { return 0.5 * x * (1.0 - x); }),
            Signal::sample(grid,
                           [](double x) {
                             const double x3 = x * x * x;
                             return (x - 2.0 * x3 + x3 * x) / 24.0;
                           }),
            "u = T*omega with omega = 1", 1.0};
  }
  if (const int k = parse_sine_index(name); k > 0) {
    const double w = k * kPi;
    return {std::string(name), Signal::sample(grid, [w](double x) { return std::sin(w * x); }),
            Signal::sample(grid, [w](double x) { return std::sin(w * x) / (w * w); }),
            "u = sin(k pi x), g = u / (k pi)^2", w * w};
  }
  throw std::invalid_argument("unknown test problem '" + std::string(name) + "'");
}

}  // namespace l1tik
