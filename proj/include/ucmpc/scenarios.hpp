#pragma once

#include "ucmpc/gravity.hpp"
#include "ucmpc/l1_design.hpp"
#include "ucmpc/mpc.hpp"
#include "ucmpc/ppg.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ucmpc {

/// A complete case study: nominal plant, truth model, uncertainty
/// description, constraint boxes, controller configuration, and reference.
/// The truth decomposes as xdot = A x + B (u + f(t,x)) + Bu w(t); the
/// simulator composes it from true_matched / true_unmatched.
struct Scenario {
  std::string name;

  LtiPlant plant;
  Mat Kx_fixed;    // 0x0: synthesize from `ppg`
  PpgProblem ppg;  // populated for gain synthesis / certification scenarios

  UncertaintyBounds uncertainty;
  Box X, U, X0;
  Vec x0;  // concrete simulation start, inside X0

  L1Config l1;
  DesignOptions design;

  // Nominal-MPC configuration (prediction step = re-solve period t_delta).
  Mat Cy, Wy, Wu, Wdu;
  int horizon = 0;
  double t_delta = 0.0;
  std::function<Vec(double)> reference;
  /// Extra per-solve state half-spaces, re-linearized at the current state.
  std::function<std::vector<LinearStateConstraint>(const Vec&)>
      stage_constraints;
  /// Shrink stage rows by the certified tube so they hold for the true state.
  /// Off when the feasible region pinches at the mission target (a corridor
  /// whose apex is the target admits no tube-tightened subset there); the rows
  /// then bind the nominal plan only and containment is checked on the flown
  /// trajectory.
  bool tighten_stage_rows = true;

  std::function<Vec(double, const Vec&)> true_matched;  // f(t, x), m-vector
  std::function<Vec(double)> true_unmatched;            // w(t), nw-vector

  double duration = 0.0;
  double dt_sim = 0.0;
  double soft_penalty = 1e5;  // vanilla-MPC slack penalty

  /// Constants that appear only inside the callback members, exposed so the
  /// content hash covers them too.
  Vec extra_constants;

  /// Kx_fixed validated against the plant, or PPG synthesis when absent.
  FeedbackGain gain() const;

  /// Stable digest of every numeric constant above; binds design reports to
  /// the scenario they were computed for.
  uint64_t content_hash() const;
};

Scenario f16_scenario();
Scenario f16_siso_scenario();

enum class AsteroidPhase { kCircumnavigate, kLand };
Scenario asteroid_scenario(AsteroidPhase phase = AsteroidPhase::kCircumnavigate);

/// Reduced-scale single-state case used by the analysis-suite checks; small
/// enough to simulate at the certified estimation rate.
Scenario scalar_scenario();

/// "f16", "f16-siso", "asteroid", "asteroid-phase2", "scalar".
Scenario scenario_by_name(const std::string& name);
std::vector<std::string> builtin_scenarios();

// Landing-geometry helpers (absolute-frame positions, km).

/// Closest point on the ellipsoid sum_i (p_i/semi_i)^2 = 1 to p, via 1-D
/// Newton on the Lagrange scalar equation (<= 50 iterations, else throws).
Vec ellipsoid_closest_point(const Vec& semi, const Vec& p);

/// Outward unit normal of the same ellipsoid at a surface point q.
Vec ellipsoid_outward_normal(const Vec& semi, const Vec& q);

/// Keep-out half-space n'(pos - q) >= 0 at the closest boundary point to
/// current_pos, rewritten over the 6-dim delta state (delta = X - x0_abs).
std::vector<LinearStateConstraint> phase1_avoidance_rows(
    const Vec& semi, const Vec& x0_abs_pos, const Vec& current_abs_pos);

/// Four half-spaces of a square pyramid (apex, unit axis pointing away from
/// the surface, half-angle): inside means n_k'(pos - apex) >= 0 for all k.
std::vector<LinearStateConstraint> phase2_pyramid_rows(const Vec& apex_abs,
                                                       const Vec& axis_unit,
                                                       double half_angle_rad,
                                                       const Vec& x0_abs_pos);

}  // namespace ucmpc
