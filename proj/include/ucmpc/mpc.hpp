#pragma once

#include "ucmpc/lin_core.hpp"
#include "ucmpc/qp.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace ucmpc {

/// Extra per-stage linear state constraint a'x <= b (e.g. re-linearized
/// keep-out half-spaces).
struct LinearStateConstraint {
  Vec a;
  double b = 0.0;
};

/// Receding-horizon problem over the ZOH-discretized nominal dynamics.
/// Stage cost (integrated with factor dt):
///   (Cy x - r)' Wy (Cy x - r) + u' Wu u + ((u_k - u_{k-1})/dt)' Wdu (...)
/// plus an optional terminal output weight Wyf.
struct MpcProblem {
  Mat Ad;
  Mat Bd;
  double dt = 0.0;
  int N = 0;

  Mat Cy;
  Mat Wy;
  Mat Wu;
  Mat Wdu;   // zero disables the rate variables
  Mat Wyf;   // zero disables the terminal cost

  Box Xn;    // state box, stages 1..N
  Box Un;    // input box, stages 0..N-1
  std::optional<Box> Xf;  // optional terminal box at stage N

  /// Output-space reference at absolute time t.
  std::function<Vec(double)> reference;

  /// Additional state half-spaces applied at stages 1..N.
  std::vector<LinearStateConstraint> state_halfspaces;

  int n() const { return static_cast<int>(Ad.rows()); }
  int m() const { return static_cast<int>(Bd.cols()); }
};

struct MpcSolution {
  bool solved = false;
  bool numeric_fault = false;
  Mat u_seq;        // m x N
  Mat x_seq;        // n x (N+1)
  double objective = 0.0;
  double max_slack = 0.0;  // soft solves: largest state-constraint violation
  int qp_iterations = 0;
};

/// Exact zero-order-hold discretization (augmented-matrix exponential).
std::pair<Mat, Mat> discretize(const Mat& a, const Mat& b, double dt);

/// Hard-constrained solve. x0 outside Xn returns an infeasible solution.
MpcSolution solve_mpc(const MpcProblem& problem, const Vec& x0, double t_now,
                      const Vec& u_prev);

/// State-box (and extra half-space) violations become linearly penalized
/// slacks; input bounds stay hard. Exact penalty: slacks are zero whenever
/// the hard problem is feasible and the penalty dominates the multipliers.
MpcSolution solve_mpc_soft(const MpcProblem& problem, const Vec& x0,
                           double t_now, const Vec& u_prev, double penalty);

}  // namespace ucmpc
