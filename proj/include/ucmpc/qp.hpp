#pragma once

#include "ucmpc/lin_core.hpp"

namespace ucmpc {

// Dense convex QP:  minimize 1/2 x'Hx + q'x  subject to  G x <= h.
// Primal-dual interior point with Mehrotra-style centering, sized for
// condensed receding-horizon problems (hundreds of variables).

enum class QpStatus { kOptimal, kMaxIterations, kInfeasible };

struct QpSolution {
  QpStatus status = QpStatus::kMaxIterations;
  Vec x;
  double objective = 0.0;
  int iterations = 0;
};

struct QpOptions {
  double tol = 1e-10;   // residual + complementarity target (scaled)
  int max_iters = 60;
};

QpSolution solve_qp(const Mat& h, const Vec& q, const Mat& g, const Vec& hvec,
                    const QpOptions& opts = {});

}  // namespace ucmpc
