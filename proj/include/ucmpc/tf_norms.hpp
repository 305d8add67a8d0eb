#pragma once

#include "ucmpc/lin_core.hpp"
#include "ucmpc/state_space.hpp"

#include <vector>

namespace ucmpc {

/// Bank of first-order unit-DC-gain low-pass filters, one per input channel:
/// channel j is kf_j / (s + kf_j).
struct FilterBank {
  Vec kf;

  FilterBank() = default;
  explicit FilterBank(Vec kf_);
  static FilterBank uniform(int m, double kf);

  int channels() const { return static_cast<int>(kf.size()); }
  Mat Kf() const { return kf.asDiagonal(); }
};

struct L1NormOptions {
  double rel_tol = 1e-7;           // refinement convergence target
  double trunc_ratio = 1e-10;      // stop when integrand < ratio * running peak
  double horizon_cap_factor = 1e3; // hard cap, multiples of slowest time const
  int steps_per_fastest = 24;      // initial resolution vs fastest eigenvalue
  int max_refine = 12;
};

/// L1 norm (induced L-infinity gain) of a realization: induced inf-norm of the
/// feedthrough plus the integral of the impulse-response induced inf-norm.
double l1_norm(const StateSpace& ss, const L1NormOptions& opts = {});

/// Convenience form for C = I, D = 0: integral of ||e^(At) B_in|| dt.
double l1_norm_strictly_proper(const Mat& a, const Mat& b_in,
                               const L1NormOptions& opts = {});

// Realization builders for the design transfer functions. `t_out` is an
// output transform applied to the state (identity for the untransformed
// norms, a per-channel weighting for the componentwise bounds).

/// (sI - Am)^-1 * Bin, outputs t_out * x.
StateSpace resolvent_path(const Mat& am, const Mat& b_in, const Mat& t_out);

/// Filter bank C(s) as a square realization.
StateSpace filter_path(const FilterBank& filters);

/// I - C(s) (biproper complement of the filter bank).
StateSpace filter_complement(const FilterBank& filters);

/// (sI - Am)^-1 B (I - C(s)): the residual path from matched uncertainty to
/// the state after ideal low-frequency cancellation.
StateSpace gxm_path(const Mat& am, const Mat& b, const FilterBank& filters,
                    const Mat& t_out);

/// s * t_out * (sI - Am)^-1: initial-condition response path; biproper with
/// feedthrough t_out and strictly proper part t_out * Am * (sI-Am)^-1. Its L1
/// norm majorizes transient_peak_norm, often by orders of magnitude on slow
/// dynamics; kept as a cross-check, not used by the design pipeline.
StateSpace x0_response_path(const Mat& am, const Mat& t_out);

/// Peak transient gain sup_t ||t_out * e^(Am t)||, computed on a refined grid
/// with the same truncation rules as l1_norm. Always >= ||t_out|| (t = 0).
double transient_peak_norm(const Mat& am, const Mat& t_out,
                           const L1NormOptions& opts = {});

/// Exact peak of the unforced response over an initial-condition box:
/// sup_t max_x0-in-box ||t_out * e^(Am t) * x0||_inf, using the row-wise
/// center + |.|*half-width supremum of a linear map over a box.
double x0_peak_response(const Mat& am, const Mat& t_out, const Box& x0,
                        const L1NormOptions& opts = {});

/// C(s) Bdag (sI - Ae): biproper; feedthrough Kf*Bdag plus a strictly proper
/// correction through the filter states.
StateSpace c_bdag_resolvent_path(const FilterBank& filters, const Mat& bdag,
                                 const Mat& ae);

/// (sI - Am)^-1 B C(s) Bdag (sI - Ae) with output transform t_out.
StateSpace hxm_c_bdag_resolvent_path(const Mat& am, const Mat& b,
                                     const FilterBank& filters,
                                     const Mat& bdag, const Mat& ae,
                                     const Mat& t_out);

/// L1 norm of the filter-complement residual path (gxm_path with identity
/// output transform).
double l1_norm_g_xm(const LtiPlant& plant, const FeedbackGain& kx,
                    const FilterBank& filters, const L1NormOptions& opts = {});

/// Initial-condition peak contribution: sup over t and over x0 in X0 of the
/// unforced closed-loop response ||e^(Am t) x0||_inf.
double rho_in(const LtiPlant& plant, const FeedbackGain& kx, const Box& x0,
              const L1NormOptions& opts = {});

/// Norms used across the design pipeline, all for the closed-loop Am.
struct NormTable {
  double h_xm = 0.0;        // matched-input path
  double h_xu = 0.0;        // unmatched-input path
  double g_xm = 0.0;        // filter-complement residual path
  double rho_in = 0.0;      // initial-condition peak term
  double hxm_c_bdag = 0.0;  // state path through the adaptive channel
  double c_bdag_norm = 0.0; // adaptive-input sensitivity to prediction error
  Vec c_norm;               // per-channel filter norms (1 for first order)
};

/// Component-wise variants under the per-state output transforms
/// T_i = diag(offdiag,...,1 at i,...,offdiag).
struct ChannelNormTable {
  std::vector<double> g_xm;
  std::vector<double> h_xm;
  std::vector<double> h_xu;
  std::vector<double> rho_in;
};

NormTable compute_norm_table(const Mat& am, const Mat& b, const Mat& bu,
                             const Mat& bdag, const FilterBank& filters,
                             const Mat& ae, const Box& x0,
                             const L1NormOptions& opts = {});

ChannelNormTable compute_channel_norms(const Mat& am, const Mat& b,
                                       const Mat& bu,
                                       const FilterBank& filters,
                                       double tx_offdiag, const Box& x0,
                                       const L1NormOptions& opts = {});

/// Discrete-interval constants of the estimation law at sampling period T.
struct AlphaConstants {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double gamma0 = 0.0;
  double T = 0.0;
};

/// a0 = max_t int_0^t ||e^(Ae(t-tau)) B|| dtau over [0,T]; a1 likewise with
/// Bu; a2 = max ||e^(Ae t)||; a3 likewise with the one-step estimation map
/// Phi(T)^-1 e^(Ae T); gamma0 = (b_f a0 + a1 b_w)(a2 + a3 + 1).
AlphaConstants alpha_constants(const Mat& ae, const LtiPlant& plant, double T,
                               double b_f, double b_w);

/// Largest T from the geometric grid {1e-1 ... 1e-12} satisfying the
/// sampling-rate condition
///   [hxm_c_bdag / (1 - g_xm * L_f)] * gamma0(T) < gamma1.
/// Throws InfeasibleError naming the violated margin if no grid point works.
double select_T(const NormTable& norms, double l_f, double gamma1, double b_f,
                double b_w, const Mat& ae, const LtiPlant& plant);

}  // namespace ucmpc
