#pragma once

#include "ucmpc/lin_core.hpp"

#include <vector>

namespace ucmpc {

// Minimal dense semidefinite solver for small block-affine problems:
//   minimize c'x  subject to  F0_b + sum_k x_k Fk_b  PSD  for each block b.
// Log-det barrier with damped Newton steps; a phase-1 max-shift problem
// finds a strictly feasible start. Intended for the gain-synthesis LMIs
// (tens of variables, blocks up to ~20x20).

struct SdpBlock {
  Mat F0;
  std::vector<Mat> Fk;  // one symmetric coefficient per decision variable
};

struct SdpProblem {
  int num_vars = 0;
  Vec c;
  std::vector<SdpBlock> blocks;
};

struct SdpOptions {
  double gap_tol = 1e-9;        // duality-gap stop (per total block size)
  double t_init = 1.0;          // initial barrier weight
  double t_growth = 12.0;       // barrier weight multiplier
  int max_newton = 400;         // total Newton iterations allowed
  double feas_margin = 1e-9;    // required interior margin out of phase 1
};

struct SdpSolution {
  bool feasible = false;
  Vec x;
  double objective = 0.0;
  int newton_iters = 0;
};

/// Evaluate one block at x.
Mat sdp_block_value(const SdpBlock& block, const Vec& x);

/// Smallest eigenvalue over all blocks at x.
double sdp_min_eigenvalue(const SdpProblem& problem, const Vec& x);

SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& opts = {});

}  // namespace ucmpc
