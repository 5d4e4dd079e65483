#pragma once

#include "l1tik/mesh.hpp"
#include "l1tik/operators.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace l1tik {

enum class Fidelity { L1, L2 };

std::string to_string(Fidelity fidelity);
Fidelity parse_fidelity(std::string_view text);

struct SolveConfig {
  double alpha = 1.0;
  double gap_tol = 1e-8;
  int max_iter = 50000;
  Fidelity fidelity = Fidelity::L1;
  /// Iterations between active-set refinement attempts in the dual solver;
  /// 0 disables refinement.
  int refine_every = 50;
};

struct SolveResult {
  Signal u;
  std::optional<Signal> p;
  double primal_value = 0.0;
  std::optional<double> dual_value;
  /// Relative gap (P - D) / max(1, |P|).
  std::optional<double> gap;
  int iterations = 0;
  bool converged = false;
};

/// L1: ||Tu - g||_1 / alpha + ||u||^2 / 2.
/// L2: ||Tu - g||_2^2 / (2 alpha) + ||u||^2 / 2.
double primal_objective(const KernelOperator& op, const Signal& g_obs, double alpha,
                        const Signal& u, Fidelity fidelity);

/// Dual objective -||T* p||^2 / 2 + <p, g>.
double dual_objective(const KernelOperator& op, const Signal& g_obs, const Signal& p);

/// Absolute gap P(u) - D(p) for the L1 problem. Throws if ||p||_inf > 1/alpha.
double duality_gap(const KernelOperator& op, const Signal& g_obs, double alpha,
                   const Signal& u, const Signal& p);

/// u = (T*T + alpha I)^{-1} T* g by Cholesky.
SolveResult solve_l2(const KernelOperator& op, const Signal& g_obs, double alpha);

/// Maximizes the dual over the box |p_i| <= 1/alpha with an accelerated
/// projected gradient method, then returns u = T* p. The method restarts
/// momentum whenever the dual value decreases. Before the first iteration
/// and periodically afterwards it runs primal-dual active-set rounds seeded
/// with the bound-active coordinates of the current iterate; the refined
/// point is kept only if it lowers the gap.
SolveResult solve_l1_dual(const KernelOperator& op, const Signal& g_obs,
                          const SolveConfig& cfg,
                          const std::optional<Signal>& warm_start = std::nullopt);

/// Dispatches on cfg.fidelity.
SolveResult solve(const KernelOperator& op, const Signal& g_obs, const SolveConfig& cfg);

}  // namespace l1tik
