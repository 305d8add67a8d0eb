#include "ucmpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ucmpc {

namespace {

int period_steps(double period, double dt) {
  if (period <= 0.0) return 1;
  return std::max(1, static_cast<int>(std::llround(period / dt)));
}

struct SampleFlags {
  bool tube_ok = true;
  bool ua_ok = true;
  bool x_in = true;
  bool u_in = true;
};

SampleFlags flags_at(const Vec& x, const Vec& x_n, const Vec& u_a,
                     const Vec& u, const Box& box_x, const Box& box_u,
                     const TighteningReport* rep) {
  SampleFlags f;
  if (rep) {
    f.tube_ok =
        ((x - x_n).cwiseAbs().array() <= rep->tilde_rho.array() + 1e-12).all();
    f.ua_ok = (u_a.cwiseAbs().array() <= rep->rho_ua.array() + 1e-12).all();
  }
  f.x_in = box_x.contains(x, 1e-12);
  f.u_in = box_u.contains(u, 1e-12);
  return f;
}

// Worst signed margin of v staying inside the box, ignoring absent bounds.
void box_margin(const Box& box, const Vec& v, double t, double* worst,
                double* when) {
  for (int i = 0; i < box.dim(); ++i) {
    if (box.lo(i) > -Box::kUnbounded) {
      const double margin = v(i) - box.lo(i);
      if (margin < *worst) {
        *worst = margin;
        *when = t;
      }
    }
    if (box.hi(i) < Box::kUnbounded) {
      const double margin = box.hi(i) - v(i);
      if (margin < *worst) {
        *worst = margin;
        *when = t;
      }
    }
  }
}

}  // namespace

SimLog run_ucmpc(const Scenario& sc, const TighteningReport& rep,
                 double duration, double dt_sim, const RunOptions& opts) {
  if (dt_sim <= 0.0 || duration <= 0.0) {
    throw std::invalid_argument("run_ucmpc: duration and dt_sim must be > 0");
  }
  const LtiPlant& plant = sc.plant;
  const int n = plant.n();
  const int m = plant.m();

  const FeedbackGain kx = opts.kx_override.size() > 0
                              ? FeedbackGain(plant, opts.kx_override)
                              : sc.gain();

  MpcProblem prob;
  std::tie(prob.Ad, prob.Bd) = discretize(plant.A, plant.B, sc.t_delta);
  prob.dt = sc.t_delta;
  prob.N = sc.horizon;
  prob.Cy = sc.Cy;
  prob.Wy = sc.Wy;
  prob.Wu = sc.Wu;
  prob.Wdu = sc.Wdu;
  prob.Xn = rep.Xn;
  prob.Un = rep.Un;
  prob.reference = sc.reference;

  const double t_runtime = sc.l1.T_runtime > 0.0 ? sc.l1.T_runtime : rep.T_final;
  const int est_every = period_steps(t_runtime, dt_sim);
  const double t_est = est_every * dt_sim;
  const Mat est_gain = estimation_gain(sc.l1.Ae, t_est);

  const int mpc_every = period_steps(sc.t_delta, dt_sim);
  const int log_every = period_steps(opts.dt_log, dt_sim);
  const long steps = std::llround(duration / dt_sim);

  SimLog log;
  log.n = n;
  log.m = m;
  log.dt_log = log_every * dt_sim;

  Vec x = sc.x0;
  Vec x_n = sc.x0;
  PredictorState ps = PredictorState::start_at(sc.x0);
  FilterState fs = FilterState::zeros(m);
  Vec u_bar = Vec::Zero(m);
  Vec u_prev = Vec::Zero(m);
  bool mpc_ok_now = true;

  Vec x_r = sc.x0;
  FilterState fs_r = FilterState::zeros(m);

  const bool has_f = static_cast<bool>(sc.true_matched);
  const bool has_w = static_cast<bool>(sc.true_unmatched) && plant.nw() > 0 &&
                     !opts.disable_w;
  auto f_of = [&](double tt, const Vec& xs) {
    return has_f ? sc.true_matched(tt, xs) : Vec::Zero(m).eval();
  };

  // Joint continuous state [x; x_n; x_hat; xi (+ x_r; xi_r)] integrated with
  // one RK4 per step; u_bar and sigma_hat are held between their updates,
  // the feedback and filter evolve continuously.
  const bool oracle = opts.with_oracle;
  const int zdim = 3 * n + m + (oracle ? n + m : 0);
  auto rhs = [&](double tt, const Vec& z) {
    Vec dz(zdim);
    const Vec xs = z.segment(0, n);
    const Vec xns = z.segment(n, n);
    const Vec xhs = z.segment(2 * n, n);
    const Vec xis = z.segment(3 * n, m);
    const Vec f = f_of(tt, xs);
    const Vec ua = opts.disable_ua ? Vec::Zero(m).eval() : xis;
    const Vec uu = u_bar + kx.Kx * (xs - xns) + ua;
    Vec dx = plant.A * xs + plant.B * (uu + f);
    if (has_w) dx += plant.Bu * sc.true_unmatched(tt);
    dz.segment(0, n) = dx;
    dz.segment(n, n) = plant.A * xns + plant.B * u_bar;
    dz.segment(2 * n, n) =
        plant.A * xs + plant.B * uu + ps.sigma_hat + sc.l1.Ae * (xhs - xs);
    const Vec v = -(plant.Bdag * ps.sigma_hat);
    dz.segment(3 * n, m) = rep.filters_final.kf.cwiseProduct(v - xis);
    if (oracle) {
      const Vec xrs = z.segment(3 * n + m, n);
      const Vec xirs = z.segment(4 * n + m, m);
      const Vec fr = f_of(tt, xrs);
      const Vec ur = u_bar + kx.Kx * (xrs - xns) + xirs;
      Vec dxr = plant.A * xrs + plant.B * (ur + fr);
      if (has_w) dxr += plant.Bu * sc.true_unmatched(tt);
      dz.segment(3 * n + m, n) = dxr;
      dz.segment(4 * n + m, m) = rep.filters_final.kf.cwiseProduct(-fr - xirs);
    }
    return dz;
  };

  for (long k = 0; k <= steps; ++k) {
    const double t = k * dt_sim;

    if (k > 0 && k % est_every == 0) {
      estimation_update_with_gain(ps, t_est, est_gain);
    }

    if (k < steps && k % mpc_every == 0) {
      std::vector<LinearStateConstraint> rows;
      if (sc.stage_constraints) {
        rows = sc.stage_constraints(x_n);
        if (sc.tighten_stage_rows) {
          for (auto& r : rows) {
            // The half-space must hold for the true state; shrink it by the
            // certified per-channel tube widths.
            r.b -= r.a.cwiseAbs().dot(rep.tilde_rho);
          }
        }
      }
      prob.state_halfspaces = rows;
      const MpcSolution sol = solve_mpc(prob, x_n, t, u_prev);
      log.mpc.push_back({t, sol.solved, sol.numeric_fault, sol.qp_iterations,
                         sol.objective, sol.max_slack});
      if (sol.solved) {
        u_bar = sol.u_seq.col(0);
        u_prev = u_bar;
        mpc_ok_now = true;
      } else {
        std::ostringstream msg;
        msg << (sol.numeric_fault ? "numeric fault in MPC solve"
                                  : "MPC infeasible from the nominal state")
            << " at t=" << t;
        log.failures.push_back({t, msg.str()});
        mpc_ok_now = false;
        if (sol.numeric_fault) log.aborted = true;
        // On plain infeasibility the previous input is held.
      }
    }

    const Vec u_a_applied = opts.disable_ua ? Vec::Zero(m).eval() : fs.u_a;
    const Vec u_applied = u_bar + kx.Kx * (x - x_n) + u_a_applied;

    if (k % log_every == 0 || k == steps || log.aborted) {
      log.t.push_back(t);
      log.x.push_back(x);
      log.x_n.push_back(x_n);
      log.x_hat.push_back(ps.x_hat);
      log.sigma_hat.push_back(ps.sigma_hat);
      log.u_bar.push_back(u_bar);
      log.u_a.push_back(u_a_applied);
      log.u.push_back(u_applied);
      log.mpc_ok.push_back(mpc_ok_now ? 1 : 0);
      if (oracle) {
        log.x_r.push_back(x_r);
        log.gap_xr_x.push_back((x_r - x).lpNorm<Eigen::Infinity>());
        log.gap_xr_xn.push_back((x_r - x_n).lpNorm<Eigen::Infinity>());
      }
    }
    if (k == steps || log.aborted) break;

    Vec z(zdim);
    z.segment(0, n) = x;
    z.segment(n, n) = x_n;
    z.segment(2 * n, n) = ps.x_hat;
    z.segment(3 * n, m) = fs.xi;
    if (oracle) {
      z.segment(3 * n + m, n) = x_r;
      z.segment(4 * n + m, m) = fs_r.xi;
    }
    const Vec z_next = rk4_step(rhs, t, z, dt_sim);
    if (!z_next.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state while integrating past t=" << t;
      log.failures.push_back({t, msg.str()});
      log.aborted = true;
      continue;  // log the last healthy sample, then stop
    }
    x = z_next.segment(0, n);
    x_n = z_next.segment(n, n);
    ps.x_hat = z_next.segment(2 * n, n);
    ps.x_tilde = ps.x_hat - x;
    fs.xi = z_next.segment(3 * n, m);
    fs.u_a = fs.xi;
    if (oracle) {
      x_r = z_next.segment(3 * n + m, n);
      fs_r.xi = z_next.segment(4 * n + m, m);
      fs_r.u_a = fs_r.xi;
    }
  }

  return log;
}

SimLog run_vanilla_mpc(const Scenario& sc, double duration, double dt_sim,
                       const RunOptions& opts) {
  if (dt_sim <= 0.0 || duration <= 0.0) {
    throw std::invalid_argument(
        "run_vanilla_mpc: duration and dt_sim must be > 0");
  }
  const LtiPlant& plant = sc.plant;
  const int n = plant.n();
  const int m = plant.m();

  MpcProblem prob;
  std::tie(prob.Ad, prob.Bd) = discretize(plant.A, plant.B, sc.t_delta);
  prob.dt = sc.t_delta;
  prob.N = sc.horizon;
  prob.Cy = sc.Cy;
  prob.Wy = sc.Wy;
  prob.Wu = sc.Wu;
  prob.Wdu = sc.Wdu;
  prob.Xn = sc.X;
  prob.Un = sc.U;
  prob.reference = sc.reference;

  const int mpc_every = period_steps(sc.t_delta, dt_sim);
  const int log_every = period_steps(opts.dt_log, dt_sim);
  const long steps = std::llround(duration / dt_sim);

  SimLog log;
  log.n = n;
  log.m = m;
  log.dt_log = log_every * dt_sim;

  Vec x = sc.x0;
  Vec u_bar = Vec::Zero(m);
  Vec u_prev = Vec::Zero(m);
  bool mpc_ok_now = true;
  const Vec zeros_n = Vec::Zero(n);
  const Vec zeros_m = Vec::Zero(m);

  const bool has_f = static_cast<bool>(sc.true_matched);
  const bool has_w = static_cast<bool>(sc.true_unmatched) && plant.nw() > 0 &&
                     !opts.disable_w;
  auto rhs = [&](double tt, const Vec& xs) {
    const Vec f = has_f ? sc.true_matched(tt, xs) : zeros_m;
    Vec dx = plant.A * xs + plant.B * (u_bar + f);
    if (has_w) dx += plant.Bu * sc.true_unmatched(tt);
    return dx;
  };

  for (long k = 0; k <= steps; ++k) {
    const double t = k * dt_sim;

    if (k < steps && k % mpc_every == 0) {
      prob.state_halfspaces =
          sc.stage_constraints ? sc.stage_constraints(x)
                               : std::vector<LinearStateConstraint>{};
      const MpcSolution sol =
          solve_mpc_soft(prob, x, t, u_prev, sc.soft_penalty);
      log.mpc.push_back({t, sol.solved, sol.numeric_fault, sol.qp_iterations,
                         sol.objective, sol.max_slack});
      if (sol.solved) {
        u_bar = sol.u_seq.col(0);
        u_prev = u_bar;
        mpc_ok_now = true;
      } else {
        std::ostringstream msg;
        msg << (sol.numeric_fault ? "numeric fault in MPC solve"
                                  : "MPC infeasible")
            << " at t=" << t;
        log.failures.push_back({t, msg.str()});
        mpc_ok_now = false;
        if (sol.numeric_fault) log.aborted = true;
      }
    }

    if (k % log_every == 0 || k == steps || log.aborted) {
      log.t.push_back(t);
      log.x.push_back(x);
      log.x_n.push_back(x);  // the baseline has no separate nominal system
      log.x_hat.push_back(x);
      log.sigma_hat.push_back(zeros_n);
      log.u_bar.push_back(u_bar);
      log.u_a.push_back(zeros_m);
      log.u.push_back(u_bar);
      log.mpc_ok.push_back(mpc_ok_now ? 1 : 0);
    }
    if (k == steps || log.aborted) break;

    const Vec x_next = rk4_step(rhs, t, x, dt_sim);
    if (!x_next.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state while integrating past t=" << t;
      log.failures.push_back({t, msg.str()});
      log.aborted = true;
      continue;
    }
    x = x_next;
  }

  return log;
}

SimLog run_reference_oracle(const Scenario& sc, const TighteningReport& rep,
                            double duration, double dt_sim,
                            const RunOptions& opts) {
  RunOptions o = opts;
  o.with_oracle = true;
  return run_ucmpc(sc, rep, duration, dt_sim, o);
}

VerificationSummary verify_bounds(const SimLog& log, const Scenario& sc,
                                  const TighteningReport& rep) {
  VerificationSummary out;
  const int n = log.n;
  const int m = log.m;
  const std::size_t count = log.t.size();
  constexpr double kTol = 1e-9;

  for (int i = 0; i < n; ++i) {
    ClaimCheck c;
    c.name = "tube channel " + std::to_string(i + 1);
    c.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) {
      const double margin =
          rep.tilde_rho(i) - std::abs(log.x[k](i) - log.x_n[k](i));
      if (margin < c.worst_margin) {
        c.worst_margin = margin;
        c.worst_time = log.t[k];
      }
    }
    c.pass = c.worst_margin >= -kTol;
    out.claims.push_back(std::move(c));
  }

  for (int j = 0; j < m; ++j) {
    ClaimCheck c;
    c.name = "adaptive-input channel " + std::to_string(j + 1);
    c.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) {
      const double margin = rep.rho_ua(j) - std::abs(log.u_a[k](j));
      if (margin < c.worst_margin) {
        c.worst_margin = margin;
        c.worst_time = log.t[k];
      }
    }
    c.pass = c.worst_margin >= -kTol;
    out.claims.push_back(std::move(c));
  }

  {
    ClaimCheck c;
    c.name = "state box";
    c.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) {
      box_margin(sc.X, log.x[k], log.t[k], &c.worst_margin, &c.worst_time);
    }
    c.pass = c.worst_margin >= -kTol;
    out.claims.push_back(std::move(c));
  }
  {
    ClaimCheck c;
    c.name = "input box";
    c.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) {
      box_margin(sc.U, log.u[k], log.t[k], &c.worst_margin, &c.worst_time);
    }
    c.pass = c.worst_margin >= -kTol;
    out.claims.push_back(std::move(c));
  }

  out.all_pass = true;
  for (const auto& c : out.claims) out.all_pass = out.all_pass && c.pass;
  return out;
}

std::vector<std::string> csv_columns(const SimLog& log) {
  std::vector<std::string> cols{"t"};
  auto block = [&](const std::string& stem, int count) {
    for (int i = 1; i <= count; ++i) cols.push_back(stem + std::to_string(i));
  };
  block("x", log.n);
  block("xn", log.n);
  block("xhat", log.n);
  block("sighat", log.n);
  block("ua", log.m);
  block("u", log.m);
  cols.insert(cols.end(), {"tube_ok", "ua_ok", "x_in_X", "u_in_U", "mpc_ok"});
  if (!log.x_r.empty()) {
    block("xr", log.n);
    cols.push_back("gap_xr_x");
    cols.push_back("gap_xr_xn");
  }
  return cols;
}

void write_csv(const SimLog& log, const Scenario& sc,
               const TighteningReport* rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << std::setprecision(17);

  const auto cols = csv_columns(log);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << cols[i] << (i + 1 < cols.size() ? "," : "\n");
  }

  auto put_vec = [&](const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << "," << v(i);
  };
  for (std::size_t k = 0; k < log.t.size(); ++k) {
    out << log.t[k];
    put_vec(log.x[k]);
    put_vec(log.x_n[k]);
    put_vec(log.x_hat[k]);
    put_vec(log.sigma_hat[k]);
    put_vec(log.u_a[k]);
    put_vec(log.u[k]);
    const SampleFlags f = flags_at(log.x[k], log.x_n[k], log.u_a[k], log.u[k],
                                   sc.X, sc.U, rep);
    out << "," << (f.tube_ok ? 1 : 0) << "," << (f.ua_ok ? 1 : 0) << ","
        << (f.x_in ? 1 : 0) << "," << (f.u_in ? 1 : 0) << ","
        << log.mpc_ok[k];
    if (!log.x_r.empty()) {
      put_vec(log.x_r[k]);
      out << "," << log.gap_xr_x[k] << "," << log.gap_xr_xn[k];
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace ucmpc
