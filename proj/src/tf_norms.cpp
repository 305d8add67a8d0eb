#include "ucmpc/tf_norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ucmpc {

FilterBank::FilterBank(Vec kf_) : kf(std::move(kf_)) {
  if ((kf.array() <= 0.0).any()) {
    throw std::invalid_argument("FilterBank: bandwidths must be positive");
  }
}

FilterBank FilterBank::uniform(int m, double kf_val) {
  return FilterBank(Vec::Constant(m, kf_val));
}

namespace {

struct Spectrum {
  double slowest_decay;  // min over eigenvalues of -Re(lambda)
  double fastest_mode;   // max |lambda|
};

Spectrum analyze(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  auto ev = es.eigenvalues();
  Spectrum s{std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 0; i < ev.size(); ++i) {
    s.slowest_decay = std::min(s.slowest_decay, -ev[i].real());
    s.fastest_mode = std::max(s.fastest_mode, std::abs(ev[i]));
  }
  return s;
}

// Trapezoid integral of ||C e^(At) B|| with step h, truncated when the
// integrand drops below trunc_ratio of its running peak (after the slow
// transient has had time to develop) or at the hard horizon cap.
double impulse_integral(const StateSpace& ss, double h, double tau_slow,
                        const L1NormOptions& opts) {
  const Mat step = matrix_exponential(ss.A * h);
  Mat e = Mat::Identity(ss.states(), ss.states());
  double g_prev = induced_inf_norm(ss.C * ss.B);
  double peak = g_prev;
  double integral = 0.0;
  double t = 0.0;
  const double t_min = 5.0 * tau_slow;
  const double t_cap = opts.horizon_cap_factor * tau_slow;
  while (true) {
    e = e * step;
    t += h;
    const double g = induced_inf_norm(ss.C * e * ss.B);
    integral += 0.5 * (g_prev + g) * h;
    peak = std::max(peak, g);
    g_prev = g;
    if (t >= t_min && g <= opts.trunc_ratio * peak) break;
    if (t >= t_cap) break;
  }
  return integral;
}

// Grid maximum of a gain functional of e^(At), marched with step h and the
// same truncation rules as impulse_integral.
template <typename GainFn>
double peak_scan(const Mat& a, double h, double tau_slow,
                 const L1NormOptions& opts, const GainFn& gain) {
  const Mat step = matrix_exponential(a * h);
  Mat e = Mat::Identity(a.rows(), a.cols());
  double peak = gain(e);
  double t = 0.0;
  const double t_min = 5.0 * tau_slow;
  const double t_cap = opts.horizon_cap_factor * tau_slow;
  while (true) {
    e = e * step;
    t += h;
    const double g = gain(e);
    peak = std::max(peak, g);
    if (t >= t_min && g <= opts.trunc_ratio * peak) break;
    if (t >= t_cap) break;
  }
  return peak;
}

template <typename GainFn>
double refined_peak(const Mat& a, const L1NormOptions& opts,
                    const GainFn& gain) {
  const Spectrum spec = analyze(a);
  if (!(spec.slowest_decay > 0.0)) {
    throw std::invalid_argument("transient peak: matrix is not Hurwitz");
  }
  const double tau_slow = 1.0 / spec.slowest_decay;
  const double rate = std::max(spec.fastest_mode, spec.slowest_decay);
  double h = 1.0 / (opts.steps_per_fastest * rate);
  double best = peak_scan(a, h, tau_slow, opts, gain);
  for (int r = 0; r < opts.max_refine; ++r) {
    h *= 0.5;
    const double fine = peak_scan(a, h, tau_slow, opts, gain);
    const bool settled =
        std::abs(fine - best) <= opts.rel_tol * std::max(std::abs(fine), 1e-30);
    best = fine;
    if (settled) break;
  }
  return best;
}

}  // namespace

double l1_norm(const StateSpace& ss, const L1NormOptions& opts) {
  const double d_norm = induced_inf_norm(ss.D);
  if (ss.inputs() == 0 || ss.outputs() == 0 || ss.states() == 0) {
    return d_norm;
  }
  if (induced_inf_norm(ss.B) == 0.0 || induced_inf_norm(ss.C) == 0.0) {
    return d_norm;
  }
  const Spectrum spec = analyze(ss.A);
  if (!(spec.slowest_decay > 0.0)) {
    throw std::invalid_argument("l1_norm: realization is not Hurwitz");
  }
  const double tau_slow = 1.0 / spec.slowest_decay;
  const double rate = std::max(spec.fastest_mode, spec.slowest_decay);
  double h = 1.0 / (opts.steps_per_fastest * rate);

  // Trapezoid with step halving; Richardson-extrapolate successive levels and
  // stop once the extrapolated value settles.
  double coarse = impulse_integral(ss, h, tau_slow, opts);
  double best = coarse;
  double prev_extrap = std::numeric_limits<double>::quiet_NaN();
  for (int r = 0; r < opts.max_refine; ++r) {
    h *= 0.5;
    const double fine = impulse_integral(ss, h, tau_slow, opts);
    const double extrap = (4.0 * fine - coarse) / 3.0;
    best = extrap;
    const double scale = std::max({std::abs(extrap), d_norm, 1e-30});
    if (std::isfinite(prev_extrap) &&
        std::abs(extrap - prev_extrap) <= opts.rel_tol * scale) {
      break;
    }
    prev_extrap = extrap;
    coarse = fine;
  }
  return d_norm + std::max(best, 0.0);
}

double l1_norm_strictly_proper(const Mat& a, const Mat& b_in,
                               const L1NormOptions& opts) {
  const int nn = static_cast<int>(a.rows());
  return l1_norm(StateSpace(a, b_in, Mat::Identity(nn, nn),
                            Mat::Zero(nn, b_in.cols())),
                 opts);
}

StateSpace resolvent_path(const Mat& am, const Mat& b_in, const Mat& t_out) {
  return StateSpace(am, b_in, t_out, Mat::Zero(t_out.rows(), b_in.cols()));
}

StateSpace filter_path(const FilterBank& filters) {
  const int m = filters.channels();
  Mat kfd = filters.Kf();
  return StateSpace(-kfd, kfd, Mat::Identity(m, m), Mat::Zero(m, m));
}

StateSpace filter_complement(const FilterBank& filters) {
  const int m = filters.channels();
  Mat kfd = filters.Kf();
  return StateSpace(-kfd, kfd, -Mat::Identity(m, m), Mat::Identity(m, m));
}

StateSpace gxm_path(const Mat& am, const Mat& b, const FilterBank& filters,
                    const Mat& t_out) {
  return cascade(filter_complement(filters), resolvent_path(am, b, t_out));
}

StateSpace x0_response_path(const Mat& am, const Mat& t_out) {
  const int nn = static_cast<int>(am.rows());
  return StateSpace(am, Mat::Identity(nn, nn), t_out * am, t_out);
}

StateSpace c_bdag_resolvent_path(const FilterBank& filters, const Mat& bdag,
                                 const Mat& ae) {
  Mat kfd = filters.Kf();
  Mat mixing = kfd * bdag + bdag * ae;
  return StateSpace(-kfd, mixing, -kfd, kfd * bdag);
}

StateSpace hxm_c_bdag_resolvent_path(const Mat& am, const Mat& b,
                                     const FilterBank& filters,
                                     const Mat& bdag, const Mat& ae,
                                     const Mat& t_out) {
  return cascade(c_bdag_resolvent_path(filters, bdag, ae),
                 resolvent_path(am, b, t_out));
}

double l1_norm_g_xm(const LtiPlant& plant, const FeedbackGain& kx,
                    const FilterBank& filters, const L1NormOptions& opts) {
  const Mat am = kx.closed_loop(plant);
  const int nn = plant.n();
  return l1_norm(gxm_path(am, plant.B, filters, Mat::Identity(nn, nn)), opts);
}

double transient_peak_norm(const Mat& am, const Mat& t_out,
                           const L1NormOptions& opts) {
  return refined_peak(
      am, opts, [&](const Mat& e) { return induced_inf_norm(t_out * e); });
}

double x0_peak_response(const Mat& am, const Mat& t_out, const Box& x0,
                        const L1NormOptions& opts) {
  const Vec center = 0.5 * (x0.hi + x0.lo);
  const Vec half = 0.5 * (x0.hi - x0.lo);
  if (center.cwiseAbs().maxCoeff() == 0.0 && half.maxCoeff() == 0.0) {
    return 0.0;
  }
  return refined_peak(am, opts, [&](const Mat& e) {
    const Mat m = t_out * e;
    return ((m * center).cwiseAbs() + m.cwiseAbs() * half).maxCoeff();
  });
}

double rho_in(const LtiPlant& plant, const FeedbackGain& kx, const Box& x0,
              const L1NormOptions& opts) {
  const Mat am = kx.closed_loop(plant);
  const int nn = plant.n();
  return x0_peak_response(am, Mat::Identity(nn, nn), x0, opts);
}

NormTable compute_norm_table(const Mat& am, const Mat& b, const Mat& bu,
                             const Mat& bdag, const FilterBank& filters,
                             const Mat& ae, const Box& x0,
                             const L1NormOptions& opts) {
  const int nn = static_cast<int>(am.rows());
  const Mat eye = Mat::Identity(nn, nn);
  NormTable t;
  t.h_xm = l1_norm(resolvent_path(am, b, eye), opts);
  t.h_xu = l1_norm(resolvent_path(am, bu, eye), opts);
  t.g_xm = l1_norm(gxm_path(am, b, filters, eye), opts);
  t.rho_in = x0_peak_response(am, eye, x0, opts);
  t.hxm_c_bdag =
      l1_norm(hxm_c_bdag_resolvent_path(am, b, filters, bdag, ae, eye), opts);
  t.c_bdag_norm = l1_norm(c_bdag_resolvent_path(filters, bdag, ae), opts);
  // First-order unit-DC-gain low-pass: impulse response is positive with unit
  // integral, so the norm is exactly 1 per channel.
  t.c_norm = Vec::Ones(filters.channels());
  return t;
}

ChannelNormTable compute_channel_norms(const Mat& am, const Mat& b,
                                       const Mat& bu,
                                       const FilterBank& filters,
                                       double tx_offdiag, const Box& x0,
                                       const L1NormOptions& opts) {
  const int nn = static_cast<int>(am.rows());
  ChannelNormTable t;
  for (int i = 0; i < nn; ++i) {
    Vec diag = Vec::Constant(nn, tx_offdiag);
    diag[i] = 1.0;
    Mat ti = diag.asDiagonal();
    t.g_xm.push_back(l1_norm(gxm_path(am, b, filters, ti), opts));
    t.h_xm.push_back(l1_norm(resolvent_path(am, b, ti), opts));
    t.h_xu.push_back(l1_norm(resolvent_path(am, bu, ti), opts));
    t.rho_in.push_back(x0_peak_response(am, ti, x0, opts));
  }
  return t;
}

namespace {

// Trapezoid cumulative integral of ||e^(Ae s) M|| over a uniform grid,
// returning the running max of the cumulative value (the maximum over t of
// the windowed convolution bound).
double windowed_integral_max(const Mat& ae, const Mat& m, double T, int n_pts) {
  if (m.cols() == 0) return 0.0;
  const double h = T / n_pts;
  const Mat step = matrix_exponential(ae * h);
  Mat e = Mat::Identity(ae.rows(), ae.cols());
  double g_prev = induced_inf_norm(m);
  double cum = 0.0;
  double best = 0.0;
  for (int k = 1; k <= n_pts; ++k) {
    e = e * step;
    const double g = induced_inf_norm(e * m);
    cum += 0.5 * (g_prev + g) * h;
    best = std::max(best, cum);
    g_prev = g;
  }
  return best;
}

double grid_max_norm(const Mat& ae, double T, int n_pts) {
  const double h = T / n_pts;
  const Mat step = matrix_exponential(ae * h);
  Mat e = Mat::Identity(ae.rows(), ae.cols());
  double best = induced_inf_norm(e);
  for (int k = 1; k <= n_pts; ++k) {
    e = e * step;
    best = std::max(best, induced_inf_norm(e));
  }
  return best;
}

}  // namespace

AlphaConstants alpha_constants(const Mat& ae, const LtiPlant& plant, double T,
                               double b_f, double b_w) {
  if (!(T > 0.0)) {
    throw std::invalid_argument("alpha_constants: T must be positive");
  }
  if (!is_hurwitz(ae)) {
    throw std::invalid_argument("alpha_constants: Ae must be Hurwitz");
  }
  // One-step estimation map Phi(T)^-1 e^(Ae T), with Phi = int_0^T e^(Ae s) ds
  // computed by the augmented exponential (no cancellation for small T).
  const Mat phi = expm_integral(ae, T);
  const Mat e_aet = matrix_exponential(ae * T);
  const Mat est_map = phi.partialPivLu().solve(e_aet);

  AlphaConstants a;
  a.T = T;
  int n_pts = 64;
  double prev0 = -1.0, prev1 = -1.0, prev2 = -1.0, prev3 = -1.0;
  for (int round = 0; round < 10; ++round) {
    a.a0 = windowed_integral_max(ae, plant.B, T, n_pts);
    a.a1 = windowed_integral_max(ae, plant.Bu, T, n_pts);
    a.a2 = grid_max_norm(ae, T, n_pts);
    a.a3 = windowed_integral_max(ae, est_map, T, n_pts);
    auto settled = [](double cur, double prev) {
      return prev >= 0.0 &&
             std::abs(cur - prev) <= 1e-6 * std::max(std::abs(cur), 1e-30);
    };
    if (settled(a.a0, prev0) && settled(a.a1, prev1) && settled(a.a2, prev2) &&
        settled(a.a3, prev3)) {
      break;
    }
    prev0 = a.a0;
    prev1 = a.a1;
    prev2 = a.a2;
    prev3 = a.a3;
    n_pts *= 2;
  }
  a.gamma0 = (b_f * a.a0 + a.a1 * b_w) * (a.a2 + a.a3 + 1.0);
  return a;
}

double select_T(const NormTable& norms, double l_f, double gamma1, double b_f,
                double b_w, const Mat& ae, const LtiPlant& plant) {
  const double contraction = 1.0 - norms.g_xm * l_f;
  if (!(contraction > 0.0)) {
    throw InfeasibleError(
        "select_T: contraction condition violated, g_xm * L_f = " +
        std::to_string(norms.g_xm * l_f) + " >= 1");
  }
  const double gain = norms.hxm_c_bdag / contraction;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 12; ++k) {
    const double T = std::pow(10.0, -k);
    const AlphaConstants a = alpha_constants(ae, plant, T, b_f, b_w);
    const double lhs = gain * a.gamma0;
    if (lhs < gamma1) return T;
    worst_margin = std::min(worst_margin, lhs - gamma1);
  }
  throw InfeasibleError(
      "select_T: no sampling period in [1e-12, 1e-1] satisfies the rate "
      "condition; smallest violation of gain*gamma0(T) < gamma1 is " +
      std::to_string(worst_margin));
}

}  // namespace ucmpc
