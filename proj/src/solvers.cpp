#include "l1tik/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace l1tik {

std::string to_string(Fidelity fidelity) { return fidelity == Fidelity::L1 ? "l1" : "l2"; }

Fidelity parse_fidelity(std::string_view text) {
  if (text == "l1" || text == "L1") return Fidelity::L1;
  if (text == "l2" || text == "L2") return Fidelity::L2;
  throw std::invalid_argument("unknown fidelity '" + std::string(text) + "'");
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be positive and finite");
  }
}

void check_grid(const KernelOperator& op, const Signal& s, const char* what) {
  if (!(s.grid() == op.grid())) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

}  // namespace

double primal_objective(const KernelOperator& op, const Signal& g_obs, double alpha,
                        const Signal& u, Fidelity fidelity) {
  check_alpha(alpha);
  check_grid(op, g_obs, "primal_objective");
  check_grid(op, u, "primal_objective");
  const Eigen::VectorXd r = op.matrix() * u.values() - g_obs.values();
  const double penalty = 0.5 * weighted_sq_l2(u.values());
  if (fidelity == Fidelity::L1) return weighted_l1(r) / alpha + penalty;
  return weighted_sq_l2(r) / (2.0 * alpha) + penalty;
}

double dual_objective(const KernelOperator& op, const Signal& g_obs, const Signal& p) {
  check_grid(op, g_obs, "dual_objective");
  check_grid(op, p, "dual_objective");
  const Eigen::VectorXd tp = op.matrix().transpose() * p.values();
  return -0.5 * weighted_sq_l2(tp) + weighted_inner(p.values(), g_obs.values());
}

double duality_gap(const KernelOperator& op, const Signal& g_obs, double alpha,
                   const Signal& u, const Signal& p) {
  check_alpha(alpha);
  if (norm(p, Norm::Linf) > (1.0 / alpha) * (1.0 + 1e-12)) {
    throw std::invalid_argument("dual variable violates |p| <= 1/alpha");
  }
  return primal_objective(op, g_obs, alpha, u, Fidelity::L1) - dual_objective(op, g_obs, p);
}

SolveResult solve_l2(const KernelOperator& op, const Signal& g_obs, double alpha) {
  check_alpha(alpha);
  check_grid(op, g_obs, "solve_l2");
  Eigen::MatrixXd system = op.normal();
  system.diagonal().array() += alpha;
  const Eigen::VectorXd rhs = op.matrix().transpose() * g_obs.values();
  const Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) throw std::runtime_error("solve_l2: factorization failed");
  Eigen::VectorXd u = llt.solve(rhs);
  // One step of iterative refinement keeps the normal-equation residual at
  // round-off level for small alpha.
  u += llt.solve(rhs - system * u);

  Signal us(op.grid(), std::move(u));
  const double value = primal_objective(op, g_obs, alpha, us, Fidelity::L2);
  return {us, std::nullopt, value, std::nullopt, std::nullopt, 1, true};
}

namespace {

// Raw-vector form of the L1 dual. With w = 1/n the dual objective is
// w * h(p), h(p) = -p^T Q p / 2 + p^T g, Q = A A^T, and the primal-dual gap of
// the pair (A^T p, p) is w * sum_i (b |r_i| + p_i r_i) with r = Q p - g and
// b = 1/alpha. That form is nonnegative term by term on the box.
class DualProblem {
 public:
  DualProblem(const KernelOperator& op, const Eigen::VectorXd& g, double alpha)
      : a_(op.matrix()), q_(op.gram()), g_(g), bound_(1.0 / alpha), alpha_(alpha),
        weight_(op.grid().weight()) {}

  double bound() const { return bound_; }

  Eigen::VectorXd clamp(const Eigen::VectorXd& p) const {
    return p.cwiseMax(-bound_).cwiseMin(bound_);
  }

  double h(const Eigen::VectorXd& p, const Eigen::VectorXd& qp) const {
    return -0.5 * p.dot(qp) + p.dot(g_);
  }

  double primal(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd r = a_ * u - g_;
    return weight_ * (r.lpNorm<1>() / alpha_ + 0.5 * u.squaredNorm());
  }

  // Relative gap as defined in SolveResult.
  double relative_gap(const Eigen::VectorXd& p) const {
    const Eigen::VectorXd u = a_.transpose() * p;
    const Eigen::VectorXd r = a_ * u - g_;
    const double gap = weight_ * (bound_ * r.lpNorm<1>() + p.dot(r));
    const double primal_value = weight_ * (r.lpNorm<1>() / alpha_ + 0.5 * u.squaredNorm());
    return gap / std::max(1.0, std::abs(primal_value));
  }

  // Primal-dual active-set rounds: fix the coordinates held at the bound,
  // solve the stationarity system on the rest, then move violators between
  // the two sets. Stops at a KKT point, after max_rounds, or when a set
  // repeats.
  Eigen::VectorXd refine(const Eigen::VectorXd& p, int max_rounds) const {
    const Eigen::Index n = p.size();
    const double edge = bound_ * (1.0 - 1e-9);
    Eigen::VectorXd grad = g_ - q_ * p;
    std::vector<signed char> state(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (p[i] >= edge && grad[i] >= 0.0) state[i] = 1;
      if (p[i] <= -edge && grad[i] <= 0.0) state[i] = -1;
    }

    std::vector<std::vector<signed char>> seen;
    Eigen::VectorXd cand(n);
    for (int round = 0; round < max_rounds; ++round) {
      seen.push_back(state);
      std::vector<Eigen::Index> free;
      std::vector<Eigen::Index> active;
      Eigen::VectorXd fixed = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (state[i] == 0) {
          free.push_back(i);
        } else {
          active.push_back(i);
          fixed[i] = state[i] * bound_;
        }
      }
      cand = fixed;
      if (!free.empty()) {
        const Eigen::VectorXd rhs = g_(free) - q_(free, Eigen::all) * fixed;
        const Eigen::MatrixXd qff = q_(free, free);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(qff);
        Eigen::VectorXd x = ldlt.solve(rhs);
        x += ldlt.solve(rhs - qff * x);
        cand(free) = x;
      }

      bool changed = false;
      for (const Eigen::Index i : free) {
        if (cand[i] > bound_) {
          state[i] = 1;
          changed = true;
        } else if (cand[i] < -bound_) {
          state[i] = -1;
          changed = true;
        }
      }
      grad = g_ - q_ * cand;
      for (const Eigen::Index i : active) {
        if ((state[i] == 1 && grad[i] < 0.0) || (state[i] == -1 && grad[i] > 0.0)) {
          state[i] = 0;
          changed = true;
        }
      }
      if (!changed) break;
      if (std::find(seen.begin(), seen.end(), state) != seen.end()) break;
    }
    return clamp(cand);
  }

  const Eigen::MatrixXd& q() const { return q_; }
  const Eigen::VectorXd& g() const { return g_; }

 private:
  const Eigen::MatrixXd& a_;
  const Eigen::MatrixXd& q_;
  const Eigen::VectorXd& g_;
  double bound_;
  double alpha_;
  double weight_;
};

constexpr int kGapCheckEvery = 10;
constexpr int kRefineRounds = 30;

}  // namespace

SolveResult solve_l1_dual(const KernelOperator& op, const Signal& g_obs, const SolveConfig& cfg,
                          const std::optional<Signal>& warm_start) {
  check_alpha(cfg.alpha);
  check_grid(op, g_obs, "solve_l1_dual");
  if (!(cfg.gap_tol > 0.0)) throw std::invalid_argument("gap_tol must be positive");
  if (cfg.max_iter < 0) throw std::invalid_argument("max_iter must be nonnegative");

  const Eigen::VectorXd& g = g_obs.values();
  const DualProblem dual(op, g, cfg.alpha);
  const Eigen::MatrixXd& q = dual.q();
  const double lipschitz = 1.05 * op.gram_norm();

  Eigen::VectorXd p;
  if (warm_start) {
    check_grid(op, *warm_start, "solve_l1_dual warm start");
    p = dual.clamp(warm_start->values());
  } else {
    // Best multiple of g along the unconstrained 1-D maximizer, clamped.
    const Eigen::VectorXd qg = q * g;
    const double curvature = g.dot(qg);
    p = Eigen::VectorXd::Zero(g.size());
    if (curvature > 0.0) {
      const Eigen::VectorXd trial = dual.clamp((g.squaredNorm() / curvature) * g);
      if (dual.h(trial, q * trial) > 0.0) p = trial;
    }
  }

  Eigen::VectorXd qp = q * p;
  double hp = dual.h(p, qp);
  Eigen::VectorXd y = p;
  Eigen::VectorXd qy = qp;
  double t = 1.0;

  Eigen::VectorXd best = p;
  double best_gap = dual.relative_gap(p);
  int iterations = 0;

  const auto adopt = [&](const Eigen::VectorXd& cand, double cand_gap) {
    best = cand;
    best_gap = cand_gap;
    p = cand;
    qp = q * p;
    hp = dual.h(p, qp);
    y = p;
    qy = qp;
    t = 1.0;
  };

  if (best_gap > cfg.gap_tol && cfg.refine_every > 0) {
    const Eigen::VectorXd cand = dual.refine(p, kRefineRounds);
    const double cand_gap = dual.relative_gap(cand);
    if (cand_gap < best_gap) adopt(cand, cand_gap);
  }

  while (best_gap > cfg.gap_tol && iterations < cfg.max_iter) {
    ++iterations;
    Eigen::VectorXd next = dual.clamp(y + (g - qy) / lipschitz);
    Eigen::VectorXd qnext = q * next;
    const double hnext = dual.h(next, qnext);
    if (hnext < hp) {
      // Momentum overshoot: restart from the last accepted point.
      y = p;
      qy = qp;
      t = 1.0;
      continue;
    }
    const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / tnext;
    y = next + beta * (next - p);
    qy = qnext + beta * (qnext - qp);
    p = std::move(next);
    qp = std::move(qnext);
    hp = hnext;
    t = tnext;

    if (iterations % kGapCheckEvery == 0) {
      const double gap = dual.relative_gap(p);
      if (gap < best_gap) {
        best = p;
        best_gap = gap;
      }
    }
    if (cfg.refine_every > 0 && iterations % cfg.refine_every == 0 && best_gap > cfg.gap_tol) {
      const Eigen::VectorXd cand = dual.refine(p, kRefineRounds);
      const double cand_gap = dual.relative_gap(cand);
      if (cand_gap < best_gap) adopt(cand, cand_gap);
    }
  }

  Signal ps(op.grid(), best);
  Signal us(op.grid(), op.matrix().transpose() * best);
  const double primal_value = dual.primal(us.values());
  const double dual_value = op.grid().weight() * dual.h(best, q * best);
  return {us, ps, primal_value, dual_value, best_gap, iterations, best_gap <= cfg.gap_tol};
}

SolveResult solve(const KernelOperator& op, const Signal& g_obs, const SolveConfig& cfg) {
  if (cfg.fidelity == Fidelity::L2) return solve_l2(op, g_obs, cfg.alpha);
  return solve_l1_dual(op, g_obs, cfg);
}

}  // namespace l1tik
