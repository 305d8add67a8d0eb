#include "ucmpc/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ucmpc {

Mat sdp_block_value(const SdpBlock& block, const Vec& x) {
  Mat m = block.F0;
  for (int k = 0; k < static_cast<int>(block.Fk.size()); ++k) {
    if (x[k] != 0.0) m += x[k] * block.Fk[k];
  }
  return 0.5 * (m + m.transpose());
}

double sdp_min_eigenvalue(const SdpProblem& problem, const Vec& x) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& b : problem.blocks) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sdp_block_value(b, x));
    worst = std::min(worst, es.eigenvalues().minCoeff());
  }
  return worst;
}

namespace {

bool all_positive_definite(const SdpProblem& p, const Vec& x,
                           std::vector<Eigen::LLT<Mat>>* llts) {
  llts->clear();
  for (const auto& b : p.blocks) {
    Eigen::LLT<Mat> llt(sdp_block_value(b, x));
    if (llt.info() != Eigen::Success) return false;
    llts->push_back(std::move(llt));
  }
  return true;
}

double barrier_value(const SdpProblem& p, const Vec& x, double t,
                     const std::vector<Eigen::LLT<Mat>>& llts) {
  double val = t * p.c.dot(x);
  for (const auto& llt : llts) {
    double logdet = 0.0;
    const auto& l = llt.matrixLLT();
    for (int i = 0; i < l.rows(); ++i) logdet += std::log(l(i, i));
    val -= 2.0 * logdet;
  }
  return val;
}

// Damped Newton minimization of t*c'x - sum logdet(M_b(x)). Returns false if
// no progress is possible (caller decides whether that is fatal).
// early_stop, if provided, aborts centering once satisfied.
int center(const SdpProblem& p, Vec& x, double t, int iter_budget,
           const std::function<bool(const Vec&)>& early_stop) {
  const int k_vars = p.num_vars;
  std::vector<Eigen::LLT<Mat>> llts;
  if (!all_positive_definite(p, x, &llts)) {
    throw std::logic_error("sdp center: start point not strictly feasible");
  }
  int used = 0;
  for (; used < iter_budget; ++used) {
    if (early_stop && early_stop(x)) break;
    // Gradient and Hessian of the barrier.
    Vec grad = t * p.c;
    Mat hess = Mat::Zero(k_vars, k_vars);
    for (size_t bi = 0; bi < p.blocks.size(); ++bi) {
      const auto& b = p.blocks[bi];
      const int nb = static_cast<int>(b.F0.rows());
      Mat s_inv = llts[bi].solve(Mat::Identity(nb, nb));
      std::vector<Mat> a(k_vars);
      for (int k = 0; k < k_vars; ++k) {
        a[k] = s_inv * b.Fk[k];
        grad[k] -= a[k].trace();
      }
      for (int k = 0; k < k_vars; ++k) {
        for (int l = k; l < k_vars; ++l) {
          const double v = a[k].cwiseProduct(a[l].transpose()).sum();
          hess(k, l) += v;
          if (l != k) hess(l, k) += v;
        }
      }
    }
    // Newton direction with a small regularization fallback.
    Vec dx;
    double reg = 0.0;
    for (;;) {
      Eigen::LDLT<Mat> ldlt(hess + reg * Mat::Identity(k_vars, k_vars));
      dx = ldlt.solve(-grad);
      if (ldlt.info() == Eigen::Success && dx.allFinite() &&
          grad.dot(dx) < 0.0) {
        break;
      }
      reg = (reg == 0.0) ? 1e-10 * std::max(1.0, hess.norm()) : reg * 100.0;
      if (reg > 1e12 * std::max(1.0, hess.norm())) return used;
    }
    const double decrement = -grad.dot(dx);
    if (decrement * 0.5 <= 1e-11) break;
    // Backtracking line search keeping all blocks positive definite.
    const double f0 = barrier_value(p, x, t, llts);
    double alpha = 1.0;
    bool stepped = false;
    std::vector<Eigen::LLT<Mat>> trial_llts;
    while (alpha > 1e-13) {
      Vec xt = x + alpha * dx;
      if (all_positive_definite(p, xt, &trial_llts)) {
        const double ft = barrier_value(p, xt, t, trial_llts);
        if (ft <= f0 - 0.25 * alpha * decrement) {
          x = xt;
          llts = std::move(trial_llts);
          stepped = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!stepped) break;
  }
  return used;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& opts) {
  SdpSolution sol;
  const int k_vars = problem.num_vars;
  int total_dim = 0;
  for (const auto& b : problem.blocks) {
    if (static_cast<int>(b.Fk.size()) != k_vars) {
      throw std::invalid_argument("solve_sdp: coefficient count mismatch");
    }
    total_dim += static_cast<int>(b.F0.rows());
  }
  if (problem.blocks.empty() || k_vars == 0) {
    throw std::invalid_argument("solve_sdp: empty problem");
  }

  // Phase 1: minimize s with blocks M_b(x) + s I, starting from x = 0 and s
  // large enough to clear the worst eigenvalue. Stop as soon as the interior
  // margin is comfortable.
  SdpProblem aug;
  aug.num_vars = k_vars + 1;
  aug.c = Vec::Zero(k_vars + 1);
  aug.c[k_vars] = 1.0;
  for (const auto& b : problem.blocks) {
    SdpBlock ab;
    ab.F0 = b.F0;
    ab.Fk = b.Fk;
    ab.Fk.push_back(Mat::Identity(b.F0.rows(), b.F0.cols()));
    aug.blocks.push_back(std::move(ab));
  }
  Vec x0 = Vec::Zero(k_vars);
  double s0 = -sdp_min_eigenvalue(problem, x0) + 1.0;
  Vec xs(k_vars + 1);
  xs.head(k_vars) = x0;
  xs[k_vars] = std::max(s0, 1.0);

  const double margin_target = 10.0 * opts.feas_margin;
  auto deep_enough = [&](const Vec& v) { return v[k_vars] < -margin_target; };
  int iters = 0;
  double t = opts.t_init;
  for (int round = 0; round < 60 && iters < opts.max_newton; ++round) {
    iters += center(aug, xs, t, opts.max_newton - iters, deep_enough);
    if (deep_enough(xs)) break;
    if ((k_vars + 1.0) * total_dim / t < 0.1 * opts.feas_margin) break;
    t *= opts.t_growth;
  }
  sol.newton_iters = iters;
  if (!deep_enough(xs)) {
    // Phase 1 bottomed out without reaching a strict interior: infeasible
    // (or only marginally feasible, which the shifted LMIs treat the same).
    sol.feasible = false;
    return sol;
  }
  Vec x = xs.head(k_vars);

  // Phase 2: barrier path following on the real objective.
  t = opts.t_init;
  while (total_dim / t >
             opts.gap_tol * std::max(1.0, std::abs(problem.c.dot(x))) &&
         iters < opts.max_newton) {
    iters += center(problem, x, t, opts.max_newton - iters, nullptr);
    t *= opts.t_growth;
  }
  sol.newton_iters = iters;
  sol.feasible = true;
  sol.x = x;
  sol.objective = problem.c.dot(x);
  return sol;
}

}  // namespace ucmpc
