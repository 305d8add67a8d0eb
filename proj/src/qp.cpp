#include "ucmpc/qp.hpp"

#include <algorithm>
#include <cmath>

namespace ucmpc {

QpSolution solve_qp(const Mat& h0, const Vec& q0, const Mat& g0,
                    const Vec& hvec0, const QpOptions& opts) {
  const int n = static_cast<int>(h0.rows());
  const int mc = static_cast<int>(g0.rows());
  if (h0.cols() != n || q0.size() != n || g0.cols() != (mc ? n : g0.cols()) ||
      hvec0.size() != mc) {
    throw std::invalid_argument("solve_qp: dimension mismatch");
  }

  QpSolution sol;
  if (mc == 0) {
    Eigen::LDLT<Mat> ldlt(h0);
    sol.x = ldlt.solve(-q0);
    sol.status = ldlt.info() == Eigen::Success ? QpStatus::kOptimal
                                               : QpStatus::kInfeasible;
    sol.objective = 0.5 * sol.x.dot(h0 * sol.x) + q0.dot(sol.x);
    return sol;
  }

  // Ruiz equilibration of the stacked matrix [[H, G'], [G, 0]]. Receding
  // horizon problems mix variables and bounds spanning many orders of
  // magnitude (thrust boxes of 1e-5 against kilometer-scale states and
  // penalty costs of 1e5), and the interior point iteration stalls on the
  // raw data. Diagonal scaling is undone on every exit path.
  Mat h = h0;
  Mat g = g0;
  Vec col_scale = Vec::Ones(n);
  Vec row_scale = Vec::Ones(mc);
  for (int sweep = 0; sweep < 3; ++sweep) {
    Vec dc(n), dr(mc);
    for (int j = 0; j < n; ++j) {
      const double norm = std::max(h.col(j).lpNorm<Eigen::Infinity>(),
                                   g.col(j).lpNorm<Eigen::Infinity>());
      dc(j) = 1.0 / std::sqrt(std::max(norm, 1e-12));
    }
    for (int i = 0; i < mc; ++i) {
      dr(i) = 1.0 / std::sqrt(
                        std::max(g.row(i).lpNorm<Eigen::Infinity>(), 1e-12));
    }
    h = dc.asDiagonal() * h * dc.asDiagonal();
    g = dr.asDiagonal() * g * dc.asDiagonal();
    col_scale = col_scale.cwiseProduct(dc);
    row_scale = row_scale.cwiseProduct(dr);
  }
  const Vec q = col_scale.cwiseProduct(q0);
  const Vec hvec = row_scale.cwiseProduct(hvec0);
  const double scale0 = std::max(
      {1.0, q0.lpNorm<Eigen::Infinity>(), hvec0.lpNorm<Eigen::Infinity>()});
  auto finish = [&](const Vec& xs) {
    sol.x = col_scale.cwiseProduct(xs);
    sol.objective = 0.5 * sol.x.dot(h0 * sol.x) + q0.dot(sol.x);
  };

  // Mehrotra starting point: least-squares multipliers for the dual residual
  // at x = 0 (crucial when the linear cost carries a large penalty term),
  // then shift both cone variables strictly positive and balanced.
  Vec x = Vec::Zero(n);
  Vec s = hvec - g * x;
  Vec z;
  {
    Mat gram = g * g.transpose();
    gram.diagonal().array() += 1e-10 * std::max(1.0, gram.trace() / mc);
    z = Eigen::LDLT<Mat>(gram).solve(-g * q);
    const double ds = std::max(-1.5 * s.minCoeff(), 0.0);
    const double dz = std::max(-1.5 * z.minCoeff(), 0.0);
    s.array() += ds;
    z.array() += dz;
    const double dot = s.dot(z);
    const double shift_s = 0.5 * dot / std::max(z.sum(), 1e-300);
    const double shift_z = 0.5 * dot / std::max(s.sum(), 1e-300);
    s.array() += std::max(shift_s, 1e-3);
    z.array() += std::max(shift_z, 1e-3);
  }

  const double scale =
      std::max({1.0, q.lpNorm<Eigen::Infinity>(), hvec.lpNorm<Eigen::Infinity>()});

  int iters_done = 0;
  for (int it = 0; it < opts.max_iters; ++it) {
    iters_done = it;
    Vec r_dual = h * x + q + g.transpose() * z;
    Vec r_prim = g * x + s - hvec;
    const double mu = s.dot(z) / mc;

    const double res = std::max(r_dual.lpNorm<Eigen::Infinity>(),
                                r_prim.lpNorm<Eigen::Infinity>());
    if (res <= opts.tol * scale && mu <= opts.tol * scale) {
      sol.status = QpStatus::kOptimal;
      finish(x);
      sol.iterations = it;
      return sol;
    }

    // Reduced normal system: (H + G' W G) dx = rhs, W = diag(z/s).
    Vec w = z.cwiseQuotient(s);
    Mat kkt = h + g.transpose() * w.asDiagonal() * g;
    Eigen::LDLT<Mat> ldlt(kkt);
    if (ldlt.info() != Eigen::Success) {
      kkt.diagonal().array() += 1e-12 * std::max(1.0, kkt.norm());
      ldlt.compute(kkt);
    }

    auto solve_step = [&](const Vec& rc) {
      // Newton system with complementarity linearization Z ds + S dz = rc,
      // slacks eliminated through the primal residual.
      Vec tmp = (rc + z.cwiseProduct(r_prim)).cwiseQuotient(s);
      Vec dx = ldlt.solve(-r_dual - g.transpose() * tmp);
      Vec ds = -r_prim - g * dx;
      Vec dz = (rc - z.cwiseProduct(ds)).cwiseQuotient(s);
      return std::make_tuple(dx, ds, dz);
    };

    // Affine (predictor) step.
    auto [dx_a, ds_a, dz_a] = solve_step(-s.cwiseProduct(z));
    auto step_len = [](const Vec& v, const Vec& dv) {
      double a = 1.0;
      for (int i = 0; i < v.size(); ++i) {
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
      }
      return a;
    };
    const double a_aff =
        std::min(step_len(s, ds_a), step_len(z, dz_a));
    const double mu_aff =
        (s + a_aff * ds_a).dot(z + a_aff * dz_a) / mc;
    const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);

    // Corrector step with centering.
    Vec rc = Vec::Constant(mc, sigma * mu) - s.cwiseProduct(z) -
             ds_a.cwiseProduct(dz_a);
    auto [dx, ds, dz] = solve_step(rc);

    const double a = 0.99 * std::min(step_len(s, ds), step_len(z, dz));
    if (!dx.allFinite() || a <= 1e-14) break;
    x += a * dx;
    s += a * ds;
    z += a * dz;

    // Primal infeasibility heuristic: multipliers diverging while primal
    // residual refuses to fall.
    if (z.lpNorm<Eigen::Infinity>() > 1e12 * scale &&
        r_prim.lpNorm<Eigen::Infinity>() > 1e-6 * scale) {
      sol.status = QpStatus::kInfeasible;
      finish(x);
      sol.iterations = it;
      return sol;
    }
  }

  finish(x);
  sol.iterations = iters_done + 1;
  sol.status = (g0 * sol.x - hvec0).maxCoeff() > 1e-6 * scale0
                   ? QpStatus::kInfeasible
                   : QpStatus::kMaxIterations;
  return sol;
}

}  // namespace ucmpc
