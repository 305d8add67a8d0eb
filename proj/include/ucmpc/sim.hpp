#pragma once

#include "ucmpc/l1_design.hpp"
#include "ucmpc/l1_runtime.hpp"
#include "ucmpc/mpc.hpp"
#include "ucmpc/scenarios.hpp"

#include <string>
#include <vector>

namespace ucmpc {

struct MpcSolveRecord {
  double t = 0.0;
  bool solved = false;
  bool numeric_fault = false;
  int iterations = 0;
  double objective = 0.0;
  double max_slack = 0.0;
};

struct SimFailure {
  double t = 0.0;
  std::string what;
};

/// Closed-loop time series, one entry per logged sample. Constraint flags
/// are never stored; they are recomputed from these values by verify_bounds
/// and the CSV writer.
struct SimLog {
  int n = 0;
  int m = 0;
  double dt_log = 0.0;  // actual logging period (a multiple of dt_sim)

  std::vector<double> t;
  std::vector<Vec> x;          // true state
  std::vector<Vec> x_n;        // nominal state
  std::vector<Vec> x_hat;      // predictor state
  std::vector<Vec> sigma_hat;  // uncertainty estimate
  std::vector<Vec> u_bar;      // MPC input to the nominal system (= u_n)
  std::vector<Vec> u_a;        // adaptive input
  std::vector<Vec> u;          // input applied to the true plant
  std::vector<int> mpc_ok;     // most recent solve succeeded

  // Reference-oracle extension (filled only when requested).
  std::vector<Vec> x_r;
  std::vector<double> gap_xr_x;   // ||x_r - x||_inf
  std::vector<double> gap_xr_xn;  // ||x_r - x_n||_inf

  std::vector<MpcSolveRecord> mpc;
  std::vector<SimFailure> failures;  // infeasible solves, numeric faults
  bool aborted = false;
};

struct RunOptions {
  bool disable_w = false;    // zero the unmatched disturbance
  bool disable_ua = false;   // ablation: adaptive input forced to zero
  bool with_oracle = false;  // co-integrate the analysis-only reference system
  double dt_log = 1e-2;
  Mat kx_override;           // empty: use scenario.gain()
};

/// Composite-law closed loop: RK4 of the true plant at dt_sim under
/// u = u_bar + Kx (x - x_n) + u_a, nominal system propagated under u_bar
/// alone, MPC re-solved every t_delta from the nominal state (never the true
/// one) over the tightened boxes, estimation every T_runtime. Infeasible
/// solves and numeric faults become failure records, not exceptions.
SimLog run_ucmpc(const Scenario& scenario, const TighteningReport& report,
                 double duration, double dt_sim, const RunOptions& opts = {});

/// Baseline: soft-constrained MPC solved from the true state over the
/// untightened boxes, applied directly (no feedback correction, no adaptive
/// input). Violations are recorded as data.
SimLog run_vanilla_mpc(const Scenario& scenario, double duration,
                       double dt_sim, const RunOptions& opts = {});

/// run_ucmpc with the reference-system oracle enabled: co-integrates the
/// non-implementable reference loop (its adaptive input is the filtered true
/// matched uncertainty along its own trajectory) and logs the gap norms.
/// Analysis fixture only.
SimLog run_reference_oracle(const Scenario& scenario,
                            const TighteningReport& report, double duration,
                            double dt_sim, const RunOptions& opts = {});

struct ClaimCheck {
  std::string name;
  bool pass = true;
  double worst_margin = 0.0;  // min over samples; negative = violation
  double worst_time = 0.0;
};

struct VerificationSummary {
  bool all_pass = true;
  std::vector<ClaimCheck> claims;
};

/// Recomputes every certified containment at every logged sample:
/// per-channel |x - x_n| <= tilde_rho, per-channel |u_a| <= rho_ua,
/// x in X, u in U. Failures are data, not exceptions.
VerificationSummary verify_bounds(const SimLog& log, const Scenario& scenario,
                                  const TighteningReport& report);

/// Time-series CSV: t, x1..xn, xn1..xnn, xhat1..xhatn, sighat1..sighatn,
/// ua1..uam, u1..um, tube_ok, ua_ok, x_in_X, u_in_U, mpc_ok (+ oracle
/// columns when present). Flags are recomputed from the logged values;
/// without a report the tube/ua flags default to pass.
void write_csv(const SimLog& log, const Scenario& scenario,
               const TighteningReport* report, const std::string& path);

/// Column names of write_csv output, in order.
std::vector<std::string> csv_columns(const SimLog& log);

}  // namespace ucmpc
