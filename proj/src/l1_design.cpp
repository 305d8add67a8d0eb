#include "ucmpc/l1_design.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

namespace ucmpc {
namespace {

constexpr int kMaxBandwidthEscalations = 20;
// Cap of the reference-peak search, in multiples of the largest X half-width.
constexpr double kRhoMaxFactor = 10.0;
constexpr int kFixedPointCap = 50;

// {||z||_inf <= r} ∩ x.
Box ball_cap(double r, const Box& x) {
  return box_intersect(Box::symmetric(Vec::Constant(x.dim(), r)), x);
}

double checked_max(const Vec& v, const char* what) {
  if (v.size() == 0) return 0.0;
  const double m = v.maxCoeff();
  if (!(m >= 0.0) || v.minCoeff() < 0.0) {
    throw std::runtime_error(std::string(what) +
                             " evaluator produced a negative bound");
  }
  return m;
}

struct StabilityMargins {
  double peak;         // rho_r - h_xm*uopt - h_xu*b_w - rho_in - g_xm*b_f(Xr)
  double contraction;  // 1 - g_xm*L_f(Xa)
};

StabilityMargins stability_margins(const NormTable& norms,
                                   const UncertaintyBounds& bounds,
                                   double rho_r, double gamma1, double uopt,
                                   const Box& x) {
  const Box xr = ball_cap(rho_r, x);
  const Box xa = ball_cap(rho_r + gamma1, x);
  StabilityMargins m;
  m.peak = rho_r - norms.h_xm * uopt - norms.h_xu * bounds.b_w() -
           norms.rho_in - norms.g_xm * bounds.b_f(xr);
  m.contraction = 1.0 - norms.g_xm * bounds.L_f(xa);
  return m;
}

}  // namespace

double UncertaintyBounds::L_f(const Box& z) const {
  return checked_max(L_fj(z), "L_fj");
}

double UncertaintyBounds::b_f(const Box& z) const {
  return checked_max(b_fj(z), "b_fj");
}

double UncertaintyBounds::b_w() const {
  return b_wj.size() ? checked_max(b_wj, "b_wj") : 0.0;
}

double uopt_bound(const Box& u, const Box& x, const FeedbackGain& kx) {
  const Mat& k = kx.Kx;
  const int m = static_cast<int>(k.rows());
  const int n = static_cast<int>(k.cols());
  if (u.dim() != m || x.dim() != n) {
    throw std::invalid_argument("uopt_bound: box dimensions do not match Kx");
  }
  double peak = 0.0;
  for (int j = 0; j < m; ++j) {
    double fb_lo = 0.0, fb_hi = 0.0;  // range of the j-th feedback row over x
    for (int i = 0; i < n; ++i) {
      const double a = k(j, i) * x.lo(i);
      const double b = k(j, i) * x.hi(i);
      fb_lo += std::min(a, b);
      fb_hi += std::max(a, b);
    }
    const double lo = u.lo(j) - fb_lo;
    const double hi = u.hi(j) - fb_hi;
    if (lo > hi) {
      std::ostringstream msg;
      msg << "feedforward budget empty on input channel " << j + 1
          << ": feedback range [" << fb_lo << ", " << fb_hi
          << "] exceeds the input box [" << u.lo(j) << ", " << u.hi(j) << "]";
      throw InfeasibleError(msg.str());
    }
    peak = std::max(peak, std::max(std::abs(lo), std::abs(hi)));
  }
  return peak;
}

bool check_stability(const NormTable& norms, const UncertaintyBounds& bounds,
                     double rho_r, double gamma1, double uopt, const Box& x) {
  const auto m = stability_margins(norms, bounds, rho_r, gamma1, uopt, x);
  return m.peak > 0.0 && m.contraction > 0.0;
}

double solve_rho_r(const NormTable& norms, const UncertaintyBounds& bounds,
                   double gamma1, double uopt, const Box& x) {
  const double rho_max = kRhoMaxFactor * x.half_width().maxCoeff();
  const double margin = 1e-6 * rho_max;
  const double lo0 = norms.rho_in + margin;

  const auto feasible = [&](double r) {
    return check_stability(norms, bounds, r, gamma1, uopt, x);
  };

  const auto fail = [&](double at) -> InfeasibleError {
    const auto m = stability_margins(norms, bounds, at, gamma1, uopt, x);
    std::ostringstream msg;
    msg << "no feasible reference peak bound in [" << lo0 << ", " << rho_max
        << "]; margins at " << at << ": peak " << m.peak << ", contraction "
        << m.contraction;
    return InfeasibleError(msg.str());
  };

  if (lo0 > rho_max) throw fail(rho_max);
  if (feasible(lo0)) return lo0;

  // Find any feasible point, preferring the cheap top-end check.
  double hi = -1.0;
  if (feasible(rho_max)) {
    hi = rho_max;
  } else {
    const int kScan = 32;
    for (int i = 1; i < kScan; ++i) {
      const double r = lo0 * std::pow(rho_max / lo0, double(i) / kScan);
      if (feasible(r)) {
        hi = r;
        break;
      }
    }
    if (hi < 0.0) throw fail(rho_max);
  }

  double lo = lo0;
  while (hi - lo > 1e-6 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

ChannelBounds channel_bounds_at(const ChannelNormTable& cn, double b_f,
                                double b_w, double uopt, double gamma1,
                                double rho_r) {
  const int n = static_cast<int>(cn.g_xm.size());
  ChannelBounds out;
  out.check_rho_r.resize(n);
  out.tilde_rho.resize(n);
  for (int i = 0; i < n; ++i) {
    const double need = cn.g_xm[i] * b_f + cn.h_xm[i] * uopt +
                        cn.h_xu[i] * b_w + cn.rho_in[i];
    if (need > rho_r * (1.0 + 1e-6) + 1e-12) {
      std::ostringstream msg;
      msg << "componentwise bound on state channel " << i + 1 << " (" << need
          << ") exceeds the reference peak bound " << rho_r;
      throw InfeasibleError(msg.str());
    }
    out.check_rho_r(i) = need;
    out.tilde_rho(i) = cn.g_xm[i] * b_f + cn.h_xu[i] * b_w + gamma1;
  }
  return out;
}

ChannelBounds per_channel_state_bounds(const LtiPlant& plant,
                                       const FeedbackGain& kx,
                                       const FilterBank& filters,
                                       const UncertaintyBounds& bounds,
                                       const L1Config& config, double rho_r,
                                       double uopt, const Box& x, const Box& x0,
                                       const L1NormOptions& opts) {
  const Mat am = plant.A + plant.B * kx.Kx;
  const auto cn = compute_channel_norms(am, plant.B, plant.Bu, filters,
                                        config.Tx_offdiag, x0, opts);
  return channel_bounds_at(cn, bounds.b_f(ball_cap(rho_r, x)), bounds.b_w(),
                           uopt, config.gamma1, rho_r);
}

FixedPointResult fixed_point_bf(const ChannelNormTable& cn,
                                const UncertaintyBounds& bounds, const Box& x,
                                double rho_r, double uopt, double gamma1,
                                double b_w, double tol) {
  FixedPointResult fp;
  fp.Xr = ball_cap(rho_r, x);
  double bf = bounds.b_f(fp.Xr);
  for (int iter = 1; iter <= kFixedPointCap; ++iter) {
    const auto cb = channel_bounds_at(cn, bf, b_w, uopt, gamma1, rho_r);
    fp.Xr = box_intersect(Box::symmetric(cb.check_rho_r), x);
    fp.check_rho_r = cb.check_rho_r;
    fp.tilde_rho = cb.tilde_rho;
    fp.iterations = iter;
    const double bf_next = bounds.b_f(fp.Xr);
    if (bf_next > bf + 1e-9 * std::max(1.0, bf)) {
      throw std::runtime_error(
          "uncertainty bound increased on a shrinking box; the b_fj "
          "evaluator is not monotone");
    }
    if (bf - bf_next <= tol) {
      fp.b_f = bf_next;
      return fp;
    }
    bf = bf_next;
  }
  std::ostringstream msg;
  msg << "componentwise fixed point did not converge in " << kFixedPointCap
      << " rounds; last b_f values " << bf << " and "
      << bounds.b_f(fp.Xr);
  throw std::runtime_error(msg.str());
}

InputBounds input_bounds(const NormTable& norms,
                         const UncertaintyBounds& bounds, const Mat& kx,
                         const Box& xr, const Vec& tilde_rho, double gamma2) {
  const Vec bfj = bounds.b_fj(xr);
  const int m = static_cast<int>(bfj.size());
  InputBounds out;
  out.rho_ua.resize(m);
  out.tilde_rho_u.resize(m);
  for (int j = 0; j < m; ++j) {
    out.rho_ua(j) = norms.c_norm(j) * bfj(j) + gamma2;
    out.tilde_rho_u(j) =
        out.rho_ua(j) + (kx.row(j).cwiseAbs() * tilde_rho).value();
  }
  return out;
}

std::pair<Mat, Vec> scale_w(const LtiPlant& plant, const Vec& b_wj,
                            std::vector<std::string>* warnings) {
  const int nw = plant.nw();
  if (static_cast<int>(b_wj.size()) != nw) {
    throw std::invalid_argument("scale_w: b_wj size does not match Bu");
  }
  Vec lambda = Vec::Ones(nw);
  if (nw > 0) {
    const double bw = b_wj.maxCoeff();
    for (int j = 0; j < nw; ++j) {
      if (b_wj(j) > 0.0 && bw > 0.0) {
        lambda(j) = b_wj(j) / bw;
      } else {
        lambda(j) = 1e-12;
        if (warnings) {
          std::ostringstream msg;
          msg << "unmatched channel " << j + 1
              << " has a zero disturbance bound; scaling floored at 1e-12";
          warnings->push_back(msg.str());
        }
      }
    }
  }
  return {plant.Bu * lambda.asDiagonal(), lambda};
}

namespace {

Box erode_symmetric(const Box& b, const Vec& r, const char* axis_kind) {
  Box out = b;
  for (int i = 0; i < b.dim(); ++i) {
    if (b.lo(i) > -Box::kUnbounded) out.lo(i) = b.lo(i) + r(i);
    if (b.hi(i) < Box::kUnbounded) out.hi(i) = b.hi(i) - r(i);
    if (out.lo(i) > out.hi(i)) {
      std::ostringstream msg;
      msg << "tightening empties " << axis_kind << " axis " << i + 1
          << ": margin " << r(i) << " against [" << b.lo(i) << ", " << b.hi(i)
          << "]";
      throw InfeasibleError(msg.str());
    }
  }
  return out;
}

}  // namespace

std::pair<Box, Box> tighten(const Box& x, const Box& u, const Vec& tilde_rho,
                            const Vec& tilde_rho_u) {
  if (x.dim() != tilde_rho.size() || u.dim() != tilde_rho_u.size()) {
    throw std::invalid_argument("tighten: margin dimensions do not match");
  }
  return {erode_symmetric(x, tilde_rho, "state"),
          erode_symmetric(u, tilde_rho_u, "input")};
}

TighteningReport design_tightening(const LtiPlant& plant0,
                                   const FeedbackGain& kx, const Box& x,
                                   const Box& u, const Box& x0,
                                   const UncertaintyBounds& bounds0,
                                   const L1Config& config,
                                   const DesignOptions& opts) {
  const int n = plant0.n();
  const int m = plant0.m();
  const int nw = plant0.nw();
  if (x.dim() != n || u.dim() != m || x0.dim() != n) {
    throw std::invalid_argument("design_tightening: box dimensions");
  }
  if (config.filters.channels() != m) {
    throw std::invalid_argument("design_tightening: filter bank size");
  }
  if (nw > 0 && static_cast<int>(bounds0.b_wj.size()) != nw) {
    throw std::invalid_argument("design_tightening: b_wj size");
  }

  TighteningReport rep;
  rep.Lambda = Vec::Ones(nw);

  LtiPlant plant = plant0;
  UncertaintyBounds bounds = bounds0;
  if (nw > 0 && opts.scale_unmatched) {
    if (bounds0.b_wj.maxCoeff() <= 0.0) {
      // Every unmatched bound is zero: the disturbance terms vanish anyway,
      // and rescaling Bu by the floor value would only degrade the plant.
      rep.caveats.push_back(
          "all unmatched disturbance bounds are zero; channel scaling "
          "skipped");
    } else {
      auto [bu_bar, lambda] = scale_w(plant0, bounds0.b_wj, &rep.caveats);
      rep.Lambda = lambda;
      if ((lambda.array() != 1.0).any()) {
        plant = LtiPlant(plant0.A, plant0.B, bu_bar);
      }
      bounds.b_wj = Vec::Constant(nw, bounds0.b_wj.maxCoeff());
    }
  }
  const double b_w = bounds.b_w();

  try {
    rep.uopt_bound = uopt_bound(u, x, kx);
  } catch (const InfeasibleError&) {
    rep.uopt_bound = u.half_width().maxCoeff();
    rep.caveats.push_back(
        "feedforward budget: feedback alone can consume the input box; "
        "using the largest input half-width instead of the erosion bound");
  }

  const Mat am = plant.A + plant.B * kx.Kx;

  // Everything from the peak bound through the box tightening depends on the
  // filter bandwidth, and a failure at any stage (peak bound infeasible,
  // componentwise bound exceeding it, tightening emptying a box axis, sample
  // period unattainable) can be cured by a faster filter; escalate the bank
  // until the whole pipeline closes.
  FilterBank filters = config.filters;
  std::string last_failure;
  for (int esc = 0; esc <= kMaxBandwidthEscalations; ++esc) {
    if (esc > 0) filters.kf *= config.kf_growth;
    const NormTable norms = compute_norm_table(
        am, plant.B, plant.Bu, plant.Bdag, filters, config.Ae, x0,
        opts.norm_opts);
    if (esc == 0) {
      // These terms do not involve the filter bank, so if they alone exceed
      // the search cap no amount of bandwidth escalation can help; fail now
      // instead of grinding through ever-stiffer norm integrals.
      const double floor = norms.rho_in + norms.h_xm * rep.uopt_bound +
                           norms.h_xu * bounds.b_w();
      const double rho_max = kRhoMaxFactor * x.half_width().maxCoeff();
      if (floor >= rho_max) {
        std::ostringstream msg;
        msg << "reference peak bound is infeasible independent of the filter "
               "bandwidth: rho_in + h_xm*uopt + h_xu*b_w = "
            << floor << " exceeds the search cap " << rho_max;
        throw InfeasibleError(msg.str());
      }
    }
    try {
      const double rho_r =
          solve_rho_r(norms, bounds, config.gamma1, rep.uopt_bound, x);
      rep.rho_r = rho_r;
      rep.rho = rho_r + config.gamma1;
      rep.filters_final = filters;
      rep.Xa = ball_cap(rep.rho, x);

      const auto cn = compute_channel_norms(am, plant.B, plant.Bu, filters,
                                            config.Tx_offdiag, x0,
                                            opts.norm_opts);
      const auto fp = fixed_point_bf(cn, bounds, x, rho_r, rep.uopt_bound,
                                     config.gamma1, b_w, config.tol);
      rep.Xr = fp.Xr;
      rep.check_rho_r = fp.check_rho_r;
      rep.tilde_rho = fp.tilde_rho;

      const double l_f_xa = bounds.L_f(rep.Xa);
      const double b_f_xa = bounds.b_f(rep.Xa);
      if (config.T > 0.0) {
        const double gain = norms.hxm_c_bdag / (1.0 - norms.g_xm * l_f_xa);
        const double g0 =
            alpha_constants(config.Ae, plant, config.T, b_f_xa, b_w).gamma0;
        if (!(gain * g0 < config.gamma1)) {
          std::ostringstream msg;
          msg << "requested sample time " << config.T
              << " fails the estimation-rate condition: " << gain * g0
              << " >= " << config.gamma1;
          throw InfeasibleError(msg.str());
        }
        rep.T_final = config.T;
      } else {
        rep.T_final = select_T(norms, l_f_xa, config.gamma1, b_f_xa, b_w,
                               config.Ae, plant);
      }

      const auto ac =
          alpha_constants(config.Ae, plant, rep.T_final, b_f_xa, b_w);
      rep.gamma2 = norms.c_norm.maxCoeff() * l_f_xa * config.gamma1 +
                   norms.c_bdag_norm * ac.gamma0;

      const auto ib =
          input_bounds(norms, bounds, kx.Kx, rep.Xr, rep.tilde_rho,
                       rep.gamma2);
      rep.rho_ua = ib.rho_ua;
      rep.tilde_rho_u = ib.tilde_rho_u;

      auto [xn, un] = tighten(x, u, rep.tilde_rho, rep.tilde_rho_u);
      rep.Xn = xn;
      rep.Un = un;

      if (esc > 0) {
        std::ostringstream msg;
        msg << "filter bandwidth escalated from the configured "
            << config.filters.kf.minCoeff() << " to " << filters.kf.minCoeff()
            << " (" << esc << " doublings) to close the design";
        rep.caveats.push_back(msg.str());
      }
      if (config.T_runtime > 0.0 && config.T_runtime > rep.T_final) {
        std::ostringstream msg;
        msg << "runtime sample time " << config.T_runtime
            << " is coarser than the certified " << rep.T_final
            << "; runtime bound containment is empirical at that rate";
        rep.caveats.push_back(msg.str());
      }
      return rep;
    } catch (const InfeasibleError& e) {
      last_failure = e.what();
    }
  }
  throw InfeasibleError("bandwidth escalation exhausted after " +
                        std::to_string(kMaxBandwidthEscalations) +
                        " doublings; last attempt: " + last_failure);
}

}  // namespace ucmpc
