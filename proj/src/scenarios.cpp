#include "ucmpc/scenarios.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

namespace ucmpc {

namespace {

constexpr double kPi = std::numbers::pi;

// FNV-1a over the raw bytes of every numeric constant, with -0 collapsed to
// +0 so equal boxes hash equally.
class Hasher {
 public:
  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ull;
    }
  }
  void add(double v) {
    if (v == 0.0) v = 0.0;
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    bytes(&bits, sizeof bits);
  }
  void add(std::int64_t v) { bytes(&v, sizeof v); }
  void add(const std::string& s) {
    add(static_cast<std::int64_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void add(const Vec& v) {
    add(static_cast<std::int64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) add(v(i));
  }
  void add(const Mat& m) {
    add(static_cast<std::int64_t>(m.rows()));
    add(static_cast<std::int64_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) add(m(i, j));
    }
  }
  void add(const Box& b) {
    add(b.lo);
    add(b.hi);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ull;
};

Vec cross3(const Vec& u, const Vec& v) {
  Vec out(3);
  out << u(1) * v(2) - u(2) * v(1),  //
      u(2) * v(0) - u(0) * v(2),     //
      u(0) * v(1) - u(1) * v(0);
  return out;
}

// Bound envelope for a smooth state-dependent matched term: finite-difference
// jacobian maxima over a 3-level grid of the mission box, inflated by 20%.
// b_fj(Z) = |f(center)| + sum_i gmax_ji * extent_i(Z) is monotone in Z by
// construction; L_fj is the constant inf-norm Lipschitz bound over the box.
struct MatchedEnvelope {
  Vec f0;
  Mat gmax;
  Vec lmax;
};

MatchedEnvelope sample_matched_envelope(const std::function<Vec(const Vec&)>& fm,
                                        const Box& box) {
  const int n = box.dim();
  const Vec center = box.center();
  const int m = static_cast<int>(fm(center).size());

  Vec h(n);
  for (int i = 0; i < n; ++i) {
    const double ext = std::max(std::abs(box.lo(i)), std::abs(box.hi(i)));
    h(i) = std::max(1e-4, 1e-3 * ext);
  }

  int total = 1;
  for (int i = 0; i < n; ++i) total *= 3;

  Mat gmax = Mat::Zero(m, n);
  Vec lmax = Vec::Zero(m);
  Mat jac(m, n);
  for (int idx = 0; idx < total; ++idx) {
    Vec p(n);
    int rem = idx;
    for (int i = 0; i < n; ++i) {
      const int level = rem % 3;
      rem /= 3;
      p(i) = level == 0 ? box.lo(i) : (level == 1 ? center(i) : box.hi(i));
    }
    for (int i = 0; i < n; ++i) {
      Vec pp = p, pm = p;
      pp(i) += h(i);
      pm(i) -= h(i);
      jac.col(i) = (fm(pp) - fm(pm)) / (2.0 * h(i));
    }
    gmax = gmax.cwiseMax(jac.cwiseAbs());
    lmax = lmax.cwiseMax(jac.cwiseAbs().rowwise().sum());
  }

  MatchedEnvelope env;
  env.f0 = 1.2 * fm(center).cwiseAbs();
  env.gmax = 1.2 * gmax;
  env.lmax = 1.2 * lmax;
  return env;
}

}  // namespace

FeedbackGain Scenario::gain() const {
  if (Kx_fixed.size() > 0) return FeedbackGain(plant, Kx_fixed);
  if (ppg.A.size() == 0) {
    throw std::logic_error("scenario '" + name +
                           "' has neither a fixed gain nor a synthesis "
                           "problem");
  }
  const PpgResult res = synthesize_kx(ppg);
  if (!res.feasible) {
    throw InfeasibleError("gain synthesis failed for scenario '" + name + "'");
  }
  return FeedbackGain(plant, res.Kx);
}

std::uint64_t Scenario::content_hash() const {
  // The std::function members cannot be hashed directly; every constant they
  // capture in the built-in scenarios is either one of the fields below or
  // listed in extra_constants by the builder.
  Hasher h;
  h.add(name);
  h.add(plant.A);
  h.add(plant.B);
  h.add(plant.Bu);
  h.add(Kx_fixed);
  h.add(ppg.A);
  h.add(ppg.B);
  h.add(ppg.Bu);
  h.add(ppg.Cz);
  h.add(ppg.Dz);
  h.add(static_cast<std::int64_t>(ppg.lambda_grid.size()));
  for (double v : ppg.lambda_grid) h.add(v);
  h.add(uncertainty.b_wj);
  h.add(X);
  h.add(U);
  h.add(X0);
  h.add(x0);
  h.add(l1.filters.kf);
  h.add(l1.Ae);
  h.add(l1.gamma1);
  h.add(l1.T);
  // T_runtime is deliberately not hashed: it only selects the runtime
  // estimation rate, so one design report serves rate-exploration runs.
  h.add(l1.Tx_offdiag);
  h.add(l1.tol);
  h.add(l1.kf_growth);
  h.add(static_cast<std::int64_t>(design.scale_unmatched));
  h.add(Cy);
  h.add(Wy);
  h.add(Wu);
  h.add(Wdu);
  h.add(static_cast<std::int64_t>(horizon));
  h.add(t_delta);
  h.add(duration);
  h.add(dt_sim);
  h.add(soft_penalty);
  h.add(static_cast<std::int64_t>(tighten_stage_rows));
  h.add(extra_constants);
  return h.value();
}

// ---------------------------------------------------------------------------
// Landing geometry

Vec ellipsoid_closest_point(const Vec& semi, const Vec& p) {
  if (semi.size() != 3 || p.size() != 3) {
    throw std::invalid_argument("ellipsoid_closest_point expects 3-vectors");
  }
  if ((semi.array() <= 0.0).any()) {
    throw std::invalid_argument("ellipsoid_closest_point: semi-axes > 0");
  }
  const Vec a2 = semi.array().square().matrix();

  if (p.norm() < 1e-12) {
    int k = 0;
    semi.minCoeff(&k);
    Vec q = Vec::Zero(3);
    q(k) = semi(k);
    return q;
  }

  // Closest point q_i = a_i^2 p_i / (a_i^2 + t), with the multiplier t the
  // unique root of g(t) = sum (a_i p_i / (a_i^2 + t))^2 = 1 on
  // (-min a_i^2, inf), where g is strictly decreasing.
  auto g = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double r = semi(i) * p(i) / (a2(i) + t);
      s += r * r;
    }
    return s;
  };
  auto dg = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double num = semi(i) * p(i);
      const double den = a2(i) + t;
      s -= 2.0 * num * num / (den * den * den);
    }
    return s;
  };

  double lo, hi;
  if (g(0.0) >= 1.0) {
    // p on or outside the surface: t* in [0, |diag(semi) p|].
    lo = 0.0;
    hi = (semi.asDiagonal() * p).norm();
  } else {
    // p strictly inside: t* in (-min a_i^2, 0).
    lo = -a2.minCoeff() * (1.0 - 1e-9);
    hi = 0.0;
    if (g(lo) <= 1.0) {
      // No component along the shortest axis; the multiplier equation
      // degenerates. Use the radial boundary point instead.
      const double scale =
          1.0 / std::sqrt((p.array() / semi.array()).square().sum());
      return scale * p;
    }
  }

  double t = 0.5 * (lo + hi);
  bool converged = false;
  for (int it = 0; it < 50 && !converged; ++it) {
    const double val = g(t) - 1.0;
    if (std::abs(val) < 1e-13) {
      converged = true;
      break;
    }
    if (val > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    double tn = t - val / dg(t);
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    if (std::abs(tn - t) < 1e-15 * std::max(1.0, std::abs(t))) converged = true;
    t = tn;
  }
  if (!converged) {
    throw std::runtime_error(
        "ellipsoid closest-point iteration did not converge");
  }

  Vec q(3);
  for (int i = 0; i < 3; ++i) q(i) = a2(i) * p(i) / (a2(i) + t);
  return q;
}

Vec ellipsoid_outward_normal(const Vec& semi, const Vec& q) {
  if (semi.size() != 3 || q.size() != 3) {
    throw std::invalid_argument("ellipsoid_outward_normal expects 3-vectors");
  }
  Vec grad = (q.array() / semi.array().square()).matrix();
  const double nn = grad.norm();
  if (nn < 1e-15) {
    throw std::invalid_argument("ellipsoid_outward_normal: center point");
  }
  return grad / nn;
}

std::vector<LinearStateConstraint> phase1_avoidance_rows(
    const Vec& semi, const Vec& x0_abs_pos, const Vec& current_abs_pos) {
  const Vec q = ellipsoid_closest_point(semi, current_abs_pos);
  const Vec n = ellipsoid_outward_normal(semi, q);
  // Keep-out: n'(pos_abs - q) >= 0 with pos_abs = x0_abs_pos + delta_pos,
  // rewritten as a'delta <= b.
  LinearStateConstraint c;
  c.a = Vec::Zero(6);
  c.a.head(3) = -n;
  c.b = n.dot(x0_abs_pos - q);
  return {c};
}

std::vector<LinearStateConstraint> phase2_pyramid_rows(const Vec& apex_abs,
                                                       const Vec& axis_unit,
                                                       double half_angle_rad,
                                                       const Vec& x0_abs_pos) {
  if (apex_abs.size() != 3 || axis_unit.size() != 3 || x0_abs_pos.size() != 3) {
    throw std::invalid_argument("phase2_pyramid_rows expects 3-vectors");
  }
  if (half_angle_rad <= 0.0 || half_angle_rad >= 0.5 * kPi) {
    throw std::invalid_argument("phase2_pyramid_rows: half angle in (0, pi/2)");
  }
  // Tangent frame orthogonal to the axis.
  Vec ref = Vec::Zero(3);
  ref(std::abs(axis_unit(2)) < 0.9 ? 2 : 0) = 1.0;
  Vec t1 = ref - axis_unit * axis_unit.dot(ref);
  t1.normalize();
  const Vec t2 = cross3(axis_unit, t1);

  const double s = std::sin(half_angle_rad);
  const double c = std::cos(half_angle_rad);
  std::vector<LinearStateConstraint> rows;
  rows.reserve(4);
  for (const Vec& dir : {Vec(t1), Vec(-t1), Vec(t2), Vec(-t2)}) {
    // Inward face normal: n'(pos - apex) >= 0 keeps points within
    // half_angle of the axis on this side.
    const Vec n = s * axis_unit - c * dir;
    LinearStateConstraint row;
    row.a = Vec::Zero(6);
    row.a.head(3) = -n;
    row.b = n.dot(x0_abs_pos - apex_abs);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Pitch-axis aircraft scenarios

namespace {

Scenario f16_common(bool siso) {
  Scenario s;
  s.name = siso ? "f16-siso" : "f16";

  Mat a(3, 3);
  a << 0.0, 0.0067, 1.34,  //
      0.0, -0.869, 43.2,   //
      0.0, 0.993, -1.34;
  Mat b_full(3, 2);
  b_full << 0.169, 0.252,  //
      -17.3, -1.58,        //
      -0.169, -0.252;

  if (!siso) {
    Mat bu(3, 1);
    bu << 0.1061, 0.0, 0.1061;
    s.plant = LtiPlant(a, b_full, bu);

    Mat kx(2, 3);
    kx << 4.1075, 1.6612, 16.2228,  //
        -3.0950, 0.0595, -1.6320;
    s.Kx_fixed = kx;

    Mat cz = Mat::Zero(3, 3);
    cz(0, 2) = 1.0;
    Mat dz = Mat::Zero(3, 2);
    dz(1, 0) = 0.1;
    dz(2, 1) = 0.1;
    s.ppg = PpgProblem(a, b_full, bu, cz, dz);

    s.uncertainty.b_wj = Vec{{3.0}};
    s.U = Box::symmetric(Vec{{25.0, 22.0}});
    s.l1.filters = FilterBank::uniform(2, 200.0);
  } else {
    const Mat b = b_full.col(0);
    Mat bu_raw(3, 2);
    bu_raw << 1.5e-1, 7e-4,  //
        1.5e-3, -7e-4,       //
        -1.5e-3, 7.5e-2;
    // The published columns are only orthogonal to B up to ~1e-4; project
    // them exactly onto the complement so the matched/unmatched split is
    // well defined.
    const Mat proj = Mat::Identity(3, 3) - b * pseudo_inverse(b);
    s.plant = LtiPlant(a, b, proj * bu_raw);

    Mat kx(1, 3);
    kx << 1.6238, 0.7151, 4.8245;
    s.Kx_fixed = kx;

    Mat cz = Mat::Zero(3, 3);
    cz(0, 2) = 1.0;
    Mat dz = Mat::Zero(3, 1);
    dz(1, 0) = 0.1;
    s.ppg = PpgProblem(a, b, s.plant.Bu, cz, dz);

    s.uncertainty.b_wj = Vec{{5.0, 1.0}};
    s.U = Box::symmetric(Vec{{25.0}});
    s.l1.filters = FilterBank::uniform(1, 200.0);
  }

  // f1 = -1.44 sin(0.4 pi t) - 0.18 alpha^2 (and, in the two-input case,
  // f2 = 0.18 - 0.36 alpha); alpha is the third state.
  auto alpha_max = [](const Box& z) {
    return std::max(std::abs(z.lo(2)), std::abs(z.hi(2)));
  };
  if (!siso) {
    s.uncertainty.b_fj = [alpha_max](const Box& z) {
      const double am = alpha_max(z);
      return Vec{{1.44 + 0.18 * am * am, 0.18 + 0.36 * am}};
    };
    s.uncertainty.L_fj = [alpha_max](const Box& z) {
      return Vec{{0.36 * alpha_max(z), 0.36}};
    };
  } else {
    s.uncertainty.b_fj = [alpha_max](const Box& z) {
      const double am = alpha_max(z);
      return Vec{{1.44 + 0.18 * am * am}};
    };
    s.uncertainty.L_fj = [alpha_max](const Box& z) {
      return Vec{{0.36 * alpha_max(z)}};
    };
  }
  s.uncertainty.l_f = [](const Box&) { return 1.44 * 0.4 * kPi; };

  s.X = Box::symmetric(Vec{{10.0, 100.0, 4.0}});
  s.X0 = Box::symmetric(Vec{{0.1, 0.1, 0.1}});
  s.x0 = Vec::Zero(3);

  s.l1.Ae = -10.0 * Mat::Identity(3, 3);
  s.l1.gamma1 = 0.01;
  s.l1.T = 0.0;  // certify the sample time as part of the design
  s.l1.T_runtime = 1e-4;

  // Outputs: pitch angle (sum of the first and third states) and the
  // flight-path angle itself.
  Mat cy(2, 3);
  cy << 1.0, 0.0, 1.0,  //
      1.0, 0.0, 0.0;
  s.Cy = cy;
  s.Wy = 100.0 * Mat::Identity(2, 2);
  const int m = s.plant.m();
  s.Wu = Mat::Identity(m, m);
  // The move-suppression weight must stay small here: the short-period mode
  // is open-loop unstable, and a heavy rate penalty slows the planner's
  // input response enough to induce a receding-horizon limit cycle.
  s.Wdu = 0.01 * Mat::Identity(m, m);
  s.horizon = 20;
  s.t_delta = 0.01;
  s.reference = [](double t) {
    Vec r(2);
    if (t < 7.5) {
      r << 9.0, 6.5;
    } else {
      r.setZero();
    }
    return r;
  };

  if (!siso) {
    s.true_matched = [](double t, const Vec& x) {
      return Vec{{-1.44 * std::sin(0.4 * kPi * t) - 0.18 * x(2) * x(2),
                  0.18 - 0.36 * x(2)}};
    };
    s.true_unmatched = [](double t) {
      return Vec{{3.0 * std::sin(0.6 * kPi * t)}};
    };
  } else {
    s.true_matched = [](double t, const Vec& x) {
      return Vec{{-1.44 * std::sin(0.4 * kPi * t) - 0.18 * x(2) * x(2)}};
    };
    s.true_unmatched = [](double t) {
      return Vec{{5.0 * std::sin(0.6 * kPi * t), std::cos(0.4 * kPi * t)}};
    };
  }

  s.duration = 15.0;
  s.dt_sim = 1e-4;

  // Constants that only appear inside the callbacks above.
  s.extra_constants = Vec{{1.44, 0.18, 0.36, 9.0, 6.5, 7.5}};
  return s;
}

}  // namespace

Scenario f16_scenario() { return f16_common(false); }

Scenario f16_siso_scenario() { return f16_common(true); }

// ---------------------------------------------------------------------------
// Small-body proximity operations

Scenario asteroid_scenario(AsteroidPhase phase) {
  const bool circ = (phase == AsteroidPhase::kCircumnavigate);

  Scenario s;
  s.name = circ ? "asteroid" : "asteroid-phase2";

  const double n_spin = 3.3118e-4;   // rad/s
  const double mu_design = 4.1e-4;   // km^3/s^2, onboard model
  const double mu_true = 4.46e-4;    // km^3/s^2
  const double r_ref = 10.0;         // km, shared reference radius
  const GravityField design_field =
      ellipsoid_field(20.0, 5.0, 5.0, mu_design, n_spin, r_ref);
  const GravityField true_field =
      ellipsoid_field(21.0, 5.5, 4.6, mu_true, n_spin, r_ref);

  const Vec design_semi{{20.0, 5.0, 5.0}};
  const Vec safety_semi{{20.0, 12.0, 7.5}};
  const Vec hold_point{{5.0, 12.0, 1.0}};
  const Vec landing_point{{5.86, 5.21, 1.54}};
  const Vec start_pos = circ ? Vec{{20.0, -15.0, 0.0}} : hold_point;
  const Vec target = circ ? hold_point : landing_point;

  const double u_max = circ ? 1e-4 : 2e-3;   // km/s^2 per axis
  const double v_max = 0.01;                 // km/s per axis
  const double pos_extent = circ ? 40.0 : 15.0;

  Vec x_eq(6);
  x_eq << target, Vec::Zero(3);
  auto [a_lin, b_lin, u0] = linearize_at(design_field, x_eq);

  Mat bu(6, 3);
  bu << Mat::Identity(3, 3), Mat::Zero(3, 3);
  s.plant = LtiPlant(a_lin, b_lin, bu);

  // States are deltas about the phase target; inputs are thrust deltas about
  // the hover input u0.
  s.X = Box::symmetric(Vec{{pos_extent, pos_extent, pos_extent,  //
                            v_max, v_max, v_max}});
  s.U = Box(Vec::Constant(3, -u_max) - u0, Vec::Constant(3, u_max) - u0);
  Vec delta0(6);
  delta0 << start_pos - target, Vec::Zero(3);
  s.X0 = Box(delta0, delta0);
  s.x0 = delta0;

  // Truth: the real field differs in shape and mass. The model error enters
  // only through the acceleration rows, so it is entirely matched.
  {
    const Mat a_cap = a_lin;
    const Vec u0_cap = u0;
    const Vec target_cap = target;
    const GravityField true_cap = true_field;
    s.true_matched = [a_cap, u0_cap, target_cap, true_cap](double,
                                                           const Vec& dx) {
      Vec x_abs(6);
      x_abs << target_cap + dx.head(3), dx.tail(3);
      const Vec drift = asteroid_true_dynamics(true_cap, x_abs, Vec::Zero(3));
      return (drift.tail(3) + u0_cap - (a_cap * dx).tail(3)).eval();
    };
  }
  s.true_unmatched = [](double) { return Vec::Zero(3); };
  s.uncertainty.b_wj = Vec::Zero(3);

  // Model-error envelopes sampled over the mission box, with positions
  // clamped to the exterior of the phase's exclusion region: circumnavigation
  // enforces the safety keep-out, and the descent corridor cannot enter the
  // body, so flown states never visit the interior, where neither field model
  // means anything and the raw difference would swamp the envelope.
  {
    const Vec clamp_semi =
        circ ? safety_semi
             : Vec{{21.0, 5.5, 5.0}};  // componentwise max of the two bodies
    const Vec target_cap = target;
    auto clamp_exterior = [clamp_semi, target_cap](const Vec& dx) {
      Vec p = target_cap + dx.head(3);
      const double s2 = p.cwiseQuotient(clamp_semi).squaredNorm();
      if (s2 < 1.0) {
        p = (s2 > 1e-12) ? (p / std::sqrt(s2)).eval()
                         : Vec{{clamp_semi(0), 0.0, 0.0}};
      }
      Vec out(6);
      out << p - target_cap, dx.tail(3);
      return out;
    };
    auto fm = [&](const Vec& dx) {
      return s.true_matched(0.0, clamp_exterior(dx));
    };
    const MatchedEnvelope env = sample_matched_envelope(fm, s.X);
    const Mat gmax = env.gmax;
    const Vec lmax = env.lmax;
    // The mismatch depends on position only (the velocity terms of both
    // fields are the same exact Coriolis coupling), so the peak bound scans a
    // dense position grid at the queried box's velocity midpoint. The
    // mismatch spikes in narrow pockets along the clamp surface — coarse
    // scans plateau and then jump severalfold when a pocket is finally hit,
    // so no early exit: always the full density, then a pad of the sampled
    // gradient over one grid cell, plus a 20% margin.
    const auto truth = s.true_matched;
    s.uncertainty.b_fj = [truth, clamp_exterior, gmax](const Box& z) {
      constexpr int kPts = 99;
      Vec best = Vec::Zero(3);
      Vec dx(6);
      dx.tail(3) = 0.5 * (z.lo.tail(3) + z.hi.tail(3));
      for (int a = 0; a < kPts; ++a) {
        dx(0) = z.lo(0) + (z.hi(0) - z.lo(0)) * a / (kPts - 1);
        for (int b = 0; b < kPts; ++b) {
          dx(1) = z.lo(1) + (z.hi(1) - z.lo(1)) * b / (kPts - 1);
          for (int c = 0; c < kPts; ++c) {
            dx(2) = z.lo(2) + (z.hi(2) - z.lo(2)) * c / (kPts - 1);
            best = best.cwiseMax(truth(0.0, clamp_exterior(dx)).cwiseAbs());
          }
        }
      }
      Vec cell_half = Vec::Zero(6);
      cell_half.head(3) = 0.5 / (kPts - 1) * (z.hi - z.lo).head(3);
      return (1.2 * (best + gmax * cell_half)).eval();
    };
    s.uncertainty.L_fj = [lmax](const Box&) { return lmax; };
    s.uncertainty.l_f = [](const Box&) { return 0.0; };
  }

  // The planner's usable velocity box is what survives the tube erosion, so
  // the filter bandwidth starts high enough that the certified velocity tube
  // leaves most of the +/-0.01 budget to the nominal plan; the descent phase
  // needs more because its error envelope is an order of magnitude larger.
  s.l1.filters = FilterBank::uniform(3, circ ? 0.32 : 1.28);
  s.l1.Ae = -0.02 * Mat::Identity(6, 6);
  s.l1.gamma1 = 1e-3;
  s.l1.T = 0.0;
  s.l1.T_runtime = 1.0;

  // Gain synthesis: velocity rows as the performance output with a strong
  // input weight, and a decay grid matched to the orbital timescale.
  {
    Mat cz(6, 6);
    cz << Mat::Zero(3, 3), Mat::Identity(3, 3), Mat::Zero(3, 6);
    Mat dz(6, 3);
    dz << Mat::Zero(3, 3), 1e3 * Mat::Identity(3, 3);
    std::vector<double> grid;
    for (int i = 1; i <= 40; ++i) grid.push_back(2e-4 * i);
    s.ppg = PpgProblem(a_lin, b_lin, bu, cz, dz, grid);
  }

  s.Cy = Mat::Identity(6, 6);
  Vec wy_diag(6);
  wy_diag << 1.0, 1.0, 1.0, 100.0, 100.0, 100.0;
  s.Wy = wy_diag.asDiagonal();
  s.Wu = (circ ? 5e8 : 5e4) * Mat::Identity(3, 3);
  s.Wdu = Mat::Zero(3, 3);
  s.horizon = 40;
  s.t_delta = circ ? 30.0 : 10.0;
  s.reference = [](double) { return Vec::Zero(6).eval(); };

  if (circ) {
    const Vec semi = safety_semi;
    const Vec tgt = target;
    s.stage_constraints = [semi, tgt](const Vec& dx) {
      return phase1_avoidance_rows(semi, tgt, tgt + dx.head(3));
    };
  } else {
    const Vec axis = ellipsoid_outward_normal(design_semi, target);
    const auto rows =
        phase2_pyramid_rows(target, axis, 30.0 * kPi / 180.0, target);
    s.stage_constraints = [rows](const Vec&) { return rows; };
    // The corridor's apex is the landing target itself: a tube-tightened
    // cone excludes a whole neighborhood of the apex and the plan would hover
    // a tube-radius short of touchdown. The rows bind the nominal plan only.
    s.tighten_stage_rows = false;
  }

  s.duration = circ ? 12000.0 : 2500.0;
  s.dt_sim = circ ? 1.0 : 0.1;

  Vec extra(17);
  extra << 21.0, 5.5, 4.6, mu_true, mu_design, n_spin, r_ref,  //
      safety_semi, start_pos, target, 30.0;
  s.extra_constants = extra;
  return s;
}

// ---------------------------------------------------------------------------
// Reduced-scale analysis case

Scenario scalar_scenario() {
  Scenario s;
  s.name = "scalar";

  Mat a(1, 1), b(1, 1);
  a << 0.0;
  b << 1.0;
  s.plant = LtiPlant(a, b, Mat(1, 0));

  Mat kx(1, 1);
  kx << -1.0;
  s.Kx_fixed = kx;

  s.uncertainty.b_fj = [](const Box& z) {
    const double zmax = std::max(std::abs(z.lo(0)), std::abs(z.hi(0)));
    return Vec{{0.1 + 0.05 * std::tanh(zmax)}};
  };
  s.uncertainty.L_fj = [](const Box&) { return Vec{{0.05}}; };
  s.uncertainty.l_f = [](const Box&) { return 0.2; };
  s.uncertainty.b_wj = Vec(0);

  s.X = Box::symmetric(Vec{{2.0}});
  s.U = Box::symmetric(Vec{{5.0}});
  s.X0 = Box(Vec::Zero(1), Vec::Zero(1));
  s.x0 = Vec::Zero(1);

  s.l1.filters = FilterBank::uniform(1, 10.0);
  s.l1.Ae = -5.0 * Mat::Identity(1, 1);
  s.l1.gamma1 = 0.05;
  s.l1.T = 0.0;
  s.l1.T_runtime = 0.0;  // run the estimator at the certified rate

  s.Cy = Mat::Identity(1, 1);
  s.Wy = 10.0 * Mat::Identity(1, 1);
  s.Wu = 0.1 * Mat::Identity(1, 1);
  s.Wdu = 0.01 * Mat::Identity(1, 1);
  s.horizon = 20;
  s.t_delta = 0.05;
  s.reference = [](double) { return Vec{{0.5}}; };

  s.true_matched = [](double t, const Vec& x) {
    return Vec{{0.1 * std::sin(2.0 * t) + 0.05 * std::tanh(x(0))}};
  };
  s.true_unmatched = [](double) { return Vec(0); };

  s.duration = 5.0;
  s.dt_sim = 1e-3;

  s.extra_constants = Vec{{0.1, 0.05, 2.0, 0.5}};
  return s;
}

Scenario scenario_by_name(const std::string& name) {
  if (name == "f16") return f16_scenario();
  if (name == "f16-siso") return f16_siso_scenario();
  if (name == "asteroid") return asteroid_scenario(AsteroidPhase::kCircumnavigate);
  if (name == "asteroid-phase2") return asteroid_scenario(AsteroidPhase::kLand);
  if (name == "scalar") return scalar_scenario();
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

std::vector<std::string> builtin_scenarios() {
  return {"f16", "f16-siso", "asteroid", "asteroid-phase2", "scalar"};
}

}  // namespace ucmpc
