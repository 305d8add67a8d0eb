#pragma once

#include "ucmpc/lin_core.hpp"
#include "ucmpc/sdp.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace ucmpc {

// Peak-to-peak gain (induced L-infinity) state-feedback synthesis: choose
// u = Kx x minimizing a certified bound beta on the peak of
// z = Cz x + Dz u under unit-peak disturbance w entering through Bu,
// via the standard two-block LMI family with a line search over the decay
// rate lambda.

struct PpgProblem {
  Mat A;
  Mat B;
  Mat Bu;
  Mat Cz;
  Mat Dz;
  std::vector<double> lambda_grid;

  PpgProblem() = default;
  PpgProblem(Mat a, Mat b, Mat bu, Mat cz, Mat dz,
             std::vector<double> grid = {});

  static PpgProblem from_plant(const LtiPlant& plant, Mat cz, Mat dz,
                               std::vector<double> grid = {});

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int nw() const { return static_cast<int>(Bu.cols()); }
  int q() const { return static_cast<int>(Cz.rows()); }
};

/// Default line-search grid: 40 uniform points on (0, 2*|min Re eig(A)| + 1].
std::vector<double> default_lambda_grid(const Mat& a);

struct PpgResult {
  bool feasible = false;
  Mat Kx;
  double beta = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  Mat V;
  Mat Y;
};

/// Evaluate the two synthesis inequalities at a candidate point. First block
/// must be negative definite, second positive definite.
std::pair<Mat, Mat> ppg_blocks_at(const PpgProblem& problem, double lambda,
                                  const Mat& v, const Mat& y, double mu,
                                  double beta);

/// Eigenvalue margins of a result: {max eig of block one (want < 0),
/// min eig of block two (want > 0)}.
std::pair<double, double> ppg_certificate_margins(const PpgProblem& problem,
                                                  const PpgResult& result);

/// Minimize beta at fixed lambda. Non-fatal infeasibility is reported through
/// the feasible flag.
PpgResult solve_ppg_fixed_lambda(const PpgProblem& problem, double lambda,
                                 const SdpOptions& opts = {});

/// Best result over the lambda grid (smallest beta, ties to smaller lambda).
/// Throws InfeasibleError with per-lambda diagnostics if nothing is feasible.
PpgResult synthesize_kx(const PpgProblem& problem, const SdpOptions& opts = {});

/// Certify a fixed gain: same LMIs with Y bound to Kx*V (still affine), line
/// searched over the grid. Result carries the given Kx and the certificate.
PpgResult certify_ppg(const PpgProblem& problem, const Mat& kx,
                      const SdpOptions& opts = {});

/// Disturbance signal that is constant between switch times.
struct PiecewiseConstantSignal {
  std::vector<double> t_start;  // ascending, first entry 0
  std::vector<Vec> value;
  const Vec& at(double t) const;
};

/// Peak of ||z(t)||_2 from x(0)=0 under the given disturbance, integrated
/// exactly per step (the disturbance is held over each step).
double simulate_peak_to_peak(const PpgProblem& problem, const Mat& kx,
                             const PiecewiseConstantSignal& w, double horizon,
                             double dt);

/// Randomized bang-bang soundness check: `trials` disturbances with
/// ||w(t)||_2 <= 1 and sign switches at random times, horizon of 20 slowest
/// closed-loop time constants. Returns the max observed peak; throws if it
/// exceeds beta beyond roundoff.
double verify_ppg_by_simulation(const PpgResult& result,
                                const PpgProblem& problem, int trials,
                                std::uint64_t seed = 2026);

}  // namespace ucmpc
