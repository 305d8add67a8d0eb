#include "ucmpc/mpc.hpp"

#include <algorithm>
#include <cmath>

namespace ucmpc {

std::pair<Mat, Mat> discretize(const Mat& a, const Mat& b, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize: dt must be > 0");
  return zoh_discretize(a, b, dt);
}

namespace {

struct Condensed {
  Mat f;   // stacked free response, (nN x n)
  Mat g;   // stacked forced response, (nN x mN)
};

Condensed condense(const MpcProblem& p) {
  const int n = p.n(), m = p.m(), N = p.N;
  Condensed c;
  c.f = Mat::Zero(n * N, n);
  c.g = Mat::Zero(n * N, m * N);
  Mat ak = Mat::Identity(n, n);
  for (int k = 1; k <= N; ++k) {
    // Row block k-1 holds x_k = Ad^k x0 + sum_j Ad^(k-1-j) Bd u_j.
    if (k == 1) {
      c.g.block(0, 0, n, m) = p.Bd;
    } else {
      c.g.block((k - 1) * n, 0, n, m * (k - 1)) =
          p.Ad * c.g.block((k - 2) * n, 0, n, m * (k - 1));
      c.g.block((k - 1) * n, (k - 1) * m, n, m) = p.Bd;
    }
    ak = p.Ad * ak;
    c.f.block((k - 1) * n, 0, n, n) = ak;
  }
  return c;
}

bool box_nonempty(const Box& b) {
  return b.dim() == 0 || ((b.hi - b.lo).array() >= 0.0).all();
}

struct Assembled {
  Mat h;
  Vec q;
  double constant = 0.0;
  Mat gi;       // inequality rows on U
  Vec hi;
  int soft_rows = 0;  // leading rows of gi that receive slacks in soft mode
};

Assembled assemble(const MpcProblem& p, const Vec& x0, double t_now,
                   const Vec& u_prev, const Condensed& c) {
  const int n = p.n(), m = p.m(), N = p.N;
  const int py = static_cast<int>(p.Cy.rows());
  const int nu = m * N;

  // Stacked reference and output map.
  Vec r_stack = Vec::Zero(py * N);
  for (int k = 1; k <= N; ++k) {
    if (p.reference) r_stack.segment((k - 1) * py, py) = p.reference(t_now + k * p.dt);
  }
  Mat cy_g = Mat::Zero(py * N, nu);
  Mat cy_f = Mat::Zero(py * N, n);
  for (int k = 0; k < N; ++k) {
    cy_g.middleRows(k * py, py) = p.Cy * c.g.middleRows(k * n, n);
    cy_f.middleRows(k * py, py) = p.Cy * c.f.middleRows(k * n, n);
  }

  Assembled a;
  a.h = Mat::Zero(nu, nu);
  a.q = Vec::Zero(nu);

  // Tracking term, terminal weight folded into the last stage block.
  {
    Mat w = Mat::Zero(py * N, py * N);
    for (int k = 0; k < N; ++k) {
      Mat wk = p.dt * p.Wy;
      if (k == N - 1 && p.Wyf.size() > 0) wk += p.Wyf;
      w.block(k * py, k * py, py, py) = wk;
    }
    Vec bias = cy_f * x0 - r_stack;
    a.h += 2.0 * cy_g.transpose() * w * cy_g;
    a.q += 2.0 * cy_g.transpose() * w * bias;
    a.constant += bias.dot(w * bias);
  }

  // Input magnitude.
  for (int k = 0; k < N; ++k) {
    a.h.block(k * m, k * m, m, m) += 2.0 * p.dt * p.Wu;
  }

  // Input rate ((u_k - u_{k-1})/dt, u_{-1} = last applied input).
  if (p.Wdu.size() > 0 && p.Wdu.norm() > 0.0) {
    const Mat wdu = p.Wdu / p.dt;  // dt * Wdu / dt^2
    Mat d = Mat::Zero(nu, nu);
    for (int k = 0; k < N; ++k) {
      d.block(k * m, k * m, m, m) = Mat::Identity(m, m);
      if (k > 0) d.block(k * m, (k - 1) * m, m, m) = -Mat::Identity(m, m);
    }
    Vec pvec = Vec::Zero(nu);
    pvec.head(m) = u_prev;
    Mat wbig = Mat::Zero(nu, nu);
    for (int k = 0; k < N; ++k) wbig.block(k * m, k * m, m, m) = wdu;
    a.h += 2.0 * d.transpose() * wbig * d;
    a.q += -2.0 * d.transpose() * wbig * pvec;
    a.constant += pvec.dot(wbig * pvec);
  }

  // Inequalities. Soft-eligible rows (state box, extra half-spaces, terminal
  // box) come first so the soft variant can attach slacks to a prefix.
  std::vector<Vec> rows;
  std::vector<double> rhs;
  auto add_state_row = [&](int stage, const Vec& coeff, double bound) {
    // coeff' x_stage <= bound, stage in 1..N
    Vec row = coeff.transpose() * c.g.middleRows((stage - 1) * n, n);
    rows.push_back(row);
    rhs.push_back(bound - coeff.dot(c.f.middleRows((stage - 1) * n, n) * x0));
  };
  for (int k = 1; k <= N; ++k) {
    for (int i = 0; i < p.Xn.dim(); ++i) {
      if (p.Xn.hi[i] < Box::kUnbounded) {
        Vec e = Vec::Zero(n);
        e[i] = 1.0;
        add_state_row(k, e, p.Xn.hi[i]);
      }
      if (p.Xn.lo[i] > -Box::kUnbounded) {
        Vec e = Vec::Zero(n);
        e[i] = -1.0;
        add_state_row(k, e, -p.Xn.lo[i]);
      }
    }
    for (const auto& hs : p.state_halfspaces) {
      add_state_row(k, hs.a, hs.b);
    }
  }
  if (p.Xf) {
    for (int i = 0; i < p.Xf->dim(); ++i) {
      if (p.Xf->hi[i] < Box::kUnbounded) {
        Vec e = Vec::Zero(n);
        e[i] = 1.0;
        add_state_row(N, e, p.Xf->hi[i]);
      }
      if (p.Xf->lo[i] > -Box::kUnbounded) {
        Vec e = Vec::Zero(n);
        e[i] = -1.0;
        add_state_row(N, e, -p.Xf->lo[i]);
      }
    }
  }
  a.soft_rows = static_cast<int>(rows.size());

  // Hard input box.
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < m; ++j) {
      if (p.Un.hi[j] < Box::kUnbounded) {
        Vec row = Vec::Zero(nu);
        row[k * m + j] = 1.0;
        rows.push_back(row);
        rhs.push_back(p.Un.hi[j]);
      }
      if (p.Un.lo[j] > -Box::kUnbounded) {
        Vec row = Vec::Zero(nu);
        row[k * m + j] = -1.0;
        rows.push_back(row);
        rhs.push_back(-p.Un.lo[j]);
      }
    }
  }

  a.gi = Mat::Zero(static_cast<int>(rows.size()), nu);
  a.hi = Vec::Zero(static_cast<int>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    a.gi.row(static_cast<int>(i)) = rows[i].transpose();
    a.hi[static_cast<int>(i)] = rhs[i];
  }
  return a;
}

MpcSolution finish(const MpcProblem& p, const Vec& x0, const Vec& u,
                   const QpSolution& qp, double constant) {
  const int n = p.n(), m = p.m(), N = p.N;
  MpcSolution s;
  s.qp_iterations = qp.iterations;
  s.solved = qp.status == QpStatus::kOptimal;
  s.numeric_fault = qp.status == QpStatus::kMaxIterations;
  s.u_seq = Mat::Zero(m, N);
  for (int k = 0; k < N; ++k) s.u_seq.col(k) = u.segment(k * m, m);
  s.x_seq = Mat::Zero(n, N + 1);
  s.x_seq.col(0) = x0;
  for (int k = 0; k < N; ++k) {
    s.x_seq.col(k + 1) = p.Ad * s.x_seq.col(k) + p.Bd * s.u_seq.col(k);
  }
  s.objective = qp.objective + constant;
  return s;
}

void validate(const MpcProblem& p, const Vec& x0, const Vec& u_prev) {
  if (p.N < 1) throw std::invalid_argument("MpcProblem: N must be >= 1");
  if (p.Ad.rows() != p.Ad.cols() || p.Bd.rows() != p.Ad.rows()) {
    throw std::invalid_argument("MpcProblem: Ad/Bd shape");
  }
  if (x0.size() != p.n() || u_prev.size() != p.m()) {
    throw std::invalid_argument("solve_mpc: x0/u_prev dimension");
  }
  if (p.Cy.cols() != p.n()) throw std::invalid_argument("MpcProblem: Cy shape");
}

}  // namespace

MpcSolution solve_mpc(const MpcProblem& p, const Vec& x0, double t_now,
                      const Vec& u_prev) {
  validate(p, x0, u_prev);
  MpcSolution bad;
  if (!box_nonempty(p.Xn) || !box_nonempty(p.Un)) return bad;
  if (!p.Xn.contains(x0, 1e-9)) return bad;

  const Condensed c = condense(p);
  const Assembled a = assemble(p, x0, t_now, u_prev, c);
  QpSolution qp = solve_qp(a.h, a.q, a.gi, a.hi);
  if (qp.status == QpStatus::kInfeasible) {
    MpcSolution s;
    s.qp_iterations = qp.iterations;
    return s;
  }
  return finish(p, x0, qp.x, qp, a.constant);
}

MpcSolution solve_mpc_soft(const MpcProblem& p, const Vec& x0, double t_now,
                           const Vec& u_prev, double penalty) {
  validate(p, x0, u_prev);
  if (!(penalty > 0.0)) {
    throw std::invalid_argument("solve_mpc_soft: penalty must be > 0");
  }
  const Condensed c = condense(p);
  const Assembled a = assemble(p, x0, t_now, u_prev, c);
  const int nu = static_cast<int>(a.h.rows());
  const int ns = a.soft_rows;
  const int rows = static_cast<int>(a.gi.rows());

  // Variables [U; S]; soft rows become g'U - s_i <= h_i with s_i >= 0
  // penalized linearly (exact penalty).
  Mat h = Mat::Zero(nu + ns, nu + ns);
  h.topLeftCorner(nu, nu) = a.h;
  Vec q(nu + ns);
  q.head(nu) = a.q;
  q.tail(ns) = Vec::Constant(ns, penalty);

  Mat gi = Mat::Zero(rows + ns, nu + ns);
  gi.topLeftCorner(rows, nu) = a.gi;
  for (int i = 0; i < ns; ++i) {
    gi(i, nu + i) = -1.0;            // relax the soft row by its slack
    gi(rows + i, nu + i) = -1.0;     // s_i >= 0
  }
  Vec hi(rows + ns);
  hi.head(rows) = a.hi;
  hi.tail(ns).setZero();

  QpSolution qp = solve_qp(h, q, gi, hi);
  MpcSolution s = finish(p, x0, qp.x.head(nu), qp, a.constant);
  if (ns > 0) {
    s.max_slack = qp.x.tail(ns).maxCoeff();
    s.objective -= penalty * qp.x.tail(ns).sum();  // report the nominal cost
  }
  // The initial state is data, not a decision; report its violation as the
  // stage-0 slack so callers can log constraint breaches.
  if (p.Xn.dim() > 0) {
    const double v0 = std::max(
        (p.Xn.lo - x0).maxCoeff(), (x0 - p.Xn.hi).maxCoeff());
    s.max_slack = std::max(s.max_slack, std::max(v0, 0.0));
  }
  return s;
}

}  // namespace ucmpc
