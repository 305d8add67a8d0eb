#pragma once

#include "ucmpc/lin_core.hpp"
#include "ucmpc/tf_norms.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ucmpc {

/// Scenario-supplied uncertainty description. The suprema over boxes are
/// evaluator callbacks because they are modelling knowledge (typically
/// closed-form in the box extents), not something the toolkit derives.
struct UncertaintyBounds {
  /// Per-matched-channel Lipschitz-in-state constants over a box (m-vector).
  std::function<Vec(const Box&)> L_fj;
  /// Per-matched-channel magnitude bounds over a box (m-vector).
  std::function<Vec(const Box&)> b_fj;
  /// Lipschitz-in-time constant; carried for completeness, consumed nowhere.
  std::function<double(const Box&)> l_f;
  /// Per-unmatched-channel disturbance magnitude bounds ((n-m)-vector).
  Vec b_wj;

  double L_f(const Box& z) const;
  double b_f(const Box& z) const;
  double b_w() const;
};

/// Adaptive-loop design knobs.
struct L1Config {
  FilterBank filters;        // initial low-pass bank, escalated on failure
  Mat Ae;                    // Hurwitz prediction-error gain
  double gamma1 = 0.0;       // reference-to-true state gap target
  double T = 0.0;            // certified sample time; 0 = select automatically
  double T_runtime = 0.0;    // loop sample time; 0 = run at the certified T
  double Tx_offdiag = 0.01;  // off-channel weight of the componentwise transforms
  double tol = 1e-6;         // fixed-point convergence tolerance on b_f
  double kf_growth = 2.0;    // bandwidth escalation factor
};

struct DesignOptions {
  bool scale_unmatched = true;  // equalize per-channel disturbance bounds
  L1NormOptions norm_opts{};
};

/// Everything the constraint-tightening step derives; consumed by the MPC
/// setup and by the runtime bound checks.
struct TighteningReport {
  double rho_r = 0.0;  // reference-state peak bound
  double rho = 0.0;    // true-state peak bound, rho_r + gamma1
  Vec check_rho_r;     // componentwise reference bounds (n)
  Vec tilde_rho;       // componentwise |x - x_n| bounds (n)
  Vec rho_ua;          // per-channel |u_a| bounds (m)
  Vec tilde_rho_u;     // per-channel |u - u_n| bounds (m)
  double gamma2 = 0.0;
  Box Xr;  // reference-state box after fixed-point refinement
  Box Xa;  // true-state box the Lipschitz constants are certified over
  Box Xn;  // tightened state constraints for the nominal MPC
  Box Un;  // tightened input constraints for the nominal MPC
  Vec Lambda;  // diagonal of the unmatched scaling (n-m; identity if unused)
  double uopt_bound = 0.0;
  FilterBank filters_final;
  double T_final = 0.0;  // certified sample time the bounds hold at
  std::vector<std::string> caveats;
};

/// Peak bound on the MPC feedforward consistent with u_n = Kx x_n + u_opt,
/// x_n in X, u_n in U: per-channel interval endpoints of U minus Kx*X.
/// Throws InfeasibleError when some channel's difference is empty.
double uopt_bound(const Box& u, const Box& x, const FeedbackGain& kx);

/// Small-gain stability test at a candidate reference peak rho_r:
///   g_xm * b_f(Xr) < rho_r - h_xm*uopt - h_xu*b_w - rho_in   (reference peak)
///   g_xm * L_f(Xa) < 1                                        (contraction)
/// with Xr = {||z||_inf <= rho_r} ∩ X and Xa likewise at rho_r + gamma1.
bool check_stability(const NormTable& norms, const UncertaintyBounds& bounds,
                     double rho_r, double gamma1, double uopt, const Box& x);

/// Smallest rho_r passing check_stability for the given (fixed-filter) norms,
/// by bisection over [rho_in + margin, 10 * max half-width of X]. Throws
/// InfeasibleError carrying the failing margins when no candidate passes;
/// bandwidth escalation is the caller's move (it invalidates `norms`).
double solve_rho_r(const NormTable& norms, const UncertaintyBounds& bounds,
                   double gamma1, double uopt, const Box& x);

struct ChannelBounds {
  Vec check_rho_r;
  Vec tilde_rho;
};

/// Componentwise reference and tube bounds from precomputed transformed
/// norms, at a fixed uncertainty level b_f over the current Xr:
///   check_rho_r[i] = g^i*b_f + h^i*uopt + hu^i*b_w + rho_in^i
///   tilde_rho[i]   = g^i*b_f + hu^i*b_w + gamma1
/// Throws InfeasibleError (channel-indexed) if a channel exceeds rho_r by
/// more than numerical slack.
ChannelBounds channel_bounds_at(const ChannelNormTable& cn, double b_f,
                                double b_w, double uopt, double gamma1,
                                double rho_r);

/// Spec-level entry: builds the componentwise transforms and norms, then
/// evaluates channel_bounds_at with b_f taken over {||z||_inf <= rho_r} ∩ X.
ChannelBounds per_channel_state_bounds(const LtiPlant& plant,
                                       const FeedbackGain& kx,
                                       const FilterBank& filters,
                                       const UncertaintyBounds& bounds,
                                       const L1Config& config, double rho_r,
                                       double uopt, const Box& x, const Box& x0,
                                       const L1NormOptions& opts = {});

struct FixedPointResult {
  Box Xr;
  Vec check_rho_r;
  Vec tilde_rho;
  double b_f = 0.0;  // converged b_f over the final Xr
  int iterations = 0;
};

/// Alternates componentwise bounds and Xr = {|z_i| <= check_rho_r[i]} ∩ X
/// until b_f over Xr settles within tol. b_f is non-increasing round over
/// round; iteration cap 50, exceeded -> runtime_error with the last two
/// values.
FixedPointResult fixed_point_bf(const ChannelNormTable& cn,
                                const UncertaintyBounds& bounds, const Box& x,
                                double rho_r, double uopt, double gamma1,
                                double b_w, double tol);

struct InputBounds {
  Vec rho_ua;
  Vec tilde_rho_u;
};

/// rho_ua[j] = c_norm[j] * b_fj(Xr) + gamma2;
/// tilde_rho_u[j] = rho_ua[j] + sum_i |Kx[j,i]| tilde_rho[i].
InputBounds input_bounds(const NormTable& norms,
                         const UncertaintyBounds& bounds, const Mat& kx,
                         const Box& xr, const Vec& tilde_rho, double gamma2);

/// Column scaling that equalizes the per-channel disturbance bounds at
/// b_w = max_j b_wj: Lambda = diag(b_wj / b_w), Bu_bar = Bu * Lambda.
/// Zero-bound channels get a 1e-12 floor and a warning line in `warnings`.
std::pair<Mat, Vec> scale_w(const LtiPlant& plant, const Vec& b_wj,
                            std::vector<std::string>* warnings = nullptr);

/// Xn = X ⊖ Π[-tilde_rho, tilde_rho], Un = U ⊖ Π[-tilde_rho_u, tilde_rho_u].
/// Throws InfeasibleError naming the axis when a difference is empty.
std::pair<Box, Box> tighten(const Box& x, const Box& u, const Vec& tilde_rho,
                            const Vec& tilde_rho_u);

/// End-to-end design: feedforward budget, stability margin search with
/// bandwidth escalation, componentwise fixed point, sample-time selection,
/// input bounds, constraint tightening. Throws InfeasibleError when any
/// stage fails beyond recovery.
TighteningReport design_tightening(const LtiPlant& plant,
                                   const FeedbackGain& kx, const Box& x,
                                   const Box& u, const Box& x0,
                                   const UncertaintyBounds& bounds,
                                   const L1Config& config,
                                   const DesignOptions& opts = {});

}  // namespace ucmpc
