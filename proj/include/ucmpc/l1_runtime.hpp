#pragma once

#include "ucmpc/lin_core.hpp"
#include "ucmpc/tf_norms.hpp"

namespace ucmpc {

/// State predictor driven alongside the plant; sigma_hat is the lumped
/// uncertainty estimate in state-derivative units, held constant between
/// estimation instants.
struct PredictorState {
  Vec x_hat;
  Vec sigma_hat;
  Vec x_tilde;  // x_hat - x at the latest step
  double t_last_update = 0.0;

  static PredictorState start_at(const Vec& x0);
};

/// Per-channel first-order low-pass memory; for a unit-DC-gain first-order
/// filter the internal state equals the output.
struct FilterState {
  Vec xi;
  Vec u_a;

  static FilterState zeros(int m);
};

/// One RK4 step of the predictor
///   d/dt x_hat = (A + B Kx) x + B (u_opt + u_a) + sigma_hat + Ae (x_hat - x)
/// holding x, the inputs, and sigma_hat constant over dt; refreshes x_tilde.
/// Throws on non-finite results.
void predictor_step(PredictorState& ps, const Vec& x, const Vec& u_opt,
                    const Vec& u_a, double dt, const LtiPlant& plant,
                    const FeedbackGain& kx, const Mat& ae);

/// One-step estimation map -Phi(T)^-1 e^(Ae T) with Phi(T) = int_0^T e^(Ae s) ds.
/// Falls back to the T->0 limit -(1/T) I (with a warning) if Phi is singular.
Mat estimation_gain(const Mat& ae, double t);

/// Piecewise-constant estimate refresh at a sample instant:
/// sigma_hat = estimation_gain(Ae, T) * x_tilde, held until the next call.
void estimation_update(PredictorState& ps, double t_sample, const Mat& ae);
/// Hot-loop variant taking the precomputed estimation map.
void estimation_update_with_gain(PredictorState& ps, double t_sample,
                                 const Mat& gain);

/// Feeds -Bdag * sigma_hat through the exact zero-order-hold discretization
/// of each filter channel, xi' = e^(-kf dt) xi + (1 - e^(-kf dt)) v, and
/// returns the filtered adaptive input.
Vec adaptive_input(FilterState& fs, const Vec& sigma_hat, const Mat& bdag,
                   double dt, const FilterBank& filters);

}  // namespace ucmpc
