#include "ucmpc/ppg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace ucmpc {

namespace {
constexpr double kStrictShift = 1e-7;  // margin standing in for strict LMIs
}

PpgProblem::PpgProblem(Mat a, Mat b, Mat bu, Mat cz, Mat dz,
                       std::vector<double> grid)
    : A(std::move(a)),
      B(std::move(b)),
      Bu(std::move(bu)),
      Cz(std::move(cz)),
      Dz(std::move(dz)),
      lambda_grid(std::move(grid)) {
  const int nn = n();
  if (A.cols() != nn || B.rows() != nn || Bu.rows() != nn ||
      Cz.cols() != nn || Dz.rows() != Cz.rows() || Dz.cols() != B.cols()) {
    throw std::invalid_argument("PpgProblem: dimension mismatch");
  }
  if (lambda_grid.empty()) lambda_grid = default_lambda_grid(A);
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end()) ||
      lambda_grid.front() <= 0.0) {
    throw std::invalid_argument(
        "PpgProblem: lambda grid must be positive ascending");
  }
}

PpgProblem PpgProblem::from_plant(const LtiPlant& plant, Mat cz, Mat dz,
                                  std::vector<double> grid) {
  return PpgProblem(plant.A, plant.B, plant.Bu, std::move(cz), std::move(dz),
                    std::move(grid));
}

std::vector<double> default_lambda_grid(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  const double min_re = es.eigenvalues().real().minCoeff();
  const double cap = 2.0 * std::abs(min_re) + 1.0;
  std::vector<double> grid;
  for (int k = 1; k <= 40; ++k) grid.push_back(cap * k / 40.0);
  return grid;
}

std::pair<Mat, Mat> ppg_blocks_at(const PpgProblem& p, double lambda,
                                  const Mat& v, const Mat& y, double mu,
                                  double beta) {
  const int n = p.n(), nw = p.nw(), q = p.q();
  Mat avby = p.A * v + p.B * y;
  Mat block1 = Mat::Zero(n + nw, n + nw);
  block1.topLeftCorner(n, n) = avby + avby.transpose() + lambda * v;
  block1.topRightCorner(n, nw) = p.Bu;
  block1.bottomLeftCorner(nw, n) = p.Bu.transpose();
  block1.bottomRightCorner(nw, nw) = -mu * Mat::Identity(nw, nw);

  Mat czv = p.Cz * v + p.Dz * y;
  Mat block2 = Mat::Zero(n + nw + q, n + nw + q);
  block2.topLeftCorner(n, n) = lambda * v;
  block2.block(n, n, nw, nw) = (beta - mu) * Mat::Identity(nw, nw);
  block2.bottomLeftCorner(q, n) = czv;
  block2.topRightCorner(n, q) = czv.transpose();
  block2.bottomRightCorner(q, q) = beta * Mat::Identity(q, q);
  return {block1, block2};
}

std::pair<double, double> ppg_certificate_margins(const PpgProblem& problem,
                                                  const PpgResult& result) {
  auto [b1, b2] = ppg_blocks_at(problem, result.lambda, result.V, result.Y,
                                result.mu, result.beta);
  Eigen::SelfAdjointEigenSolver<Mat> e1(b1), e2(b2);
  return {e1.eigenvalues().maxCoeff(), e2.eigenvalues().minCoeff()};
}

namespace {

// Decision layout: [vech(V) | vec(Y) or nothing | mu | beta].
struct Packing {
  int n = 0, m = 0;
  bool free_y = true;
  Mat kx_fixed;  // used when !free_y

  int v_len() const { return n * (n + 1) / 2; }
  int y_len() const { return free_y ? m * n : 0; }
  int total() const { return v_len() + y_len() + 2; }
  int mu_idx() const { return v_len() + y_len(); }
  int beta_idx() const { return mu_idx() + 1; }

  Mat unpack_v(const Vec& x) const {
    Mat v(n, n);
    int idx = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        v(i, j) = x[idx];
        v(j, i) = x[idx];
        ++idx;
      }
    }
    return v;
  }
  Mat unpack_y(const Vec& x, const Mat& v) const {
    if (!free_y) return kx_fixed * v;
    Mat y(m, n);
    int idx = v_len();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) y(i, j) = x[idx++];
    }
    return y;
  }
};

SdpProblem build_sdp(const PpgProblem& p, double lambda, const Packing& pack) {
  SdpProblem sdp;
  sdp.num_vars = pack.total();
  sdp.c = Vec::Zero(pack.total());
  sdp.c[pack.beta_idx()] = 1.0;

  auto eval_blocks = [&](const Vec& x) {
    Mat v = pack.unpack_v(x);
    Mat y = pack.unpack_y(x, v);
    auto [b1, b2] = ppg_blocks_at(p, lambda, v, y, x[pack.mu_idx()],
                                  x[pack.beta_idx()]);
    const int d1 = static_cast<int>(b1.rows());
    const int d2 = static_cast<int>(b2.rows());
    Mat g1 = -b1 - kStrictShift * Mat::Identity(d1, d1);
    Mat g2 = b2 - kStrictShift * Mat::Identity(d2, d2);
    return std::make_pair(g1, g2);
  };

  const Vec zero = Vec::Zero(pack.total());
  auto [f0_1, f0_2] = eval_blocks(zero);
  SdpBlock b1{f0_1, {}}, b2{f0_2, {}};
  for (int k = 0; k < pack.total(); ++k) {
    Vec unit = zero;
    unit[k] = 1.0;
    auto [g1, g2] = eval_blocks(unit);
    b1.Fk.push_back(g1 - f0_1);
    b2.Fk.push_back(g2 - f0_2);
  }
  sdp.blocks = {std::move(b1), std::move(b2)};
  return sdp;
}

PpgResult extract_result(const PpgProblem&, double lambda,
                         const Packing& pack, const SdpSolution& sol) {
  PpgResult r;
  r.feasible = sol.feasible;
  if (!sol.feasible) return r;
  r.lambda = lambda;
  r.V = pack.unpack_v(sol.x);
  r.Y = pack.unpack_y(sol.x, r.V);
  r.mu = sol.x[pack.mu_idx()];
  r.beta = sol.x[pack.beta_idx()];
  if (pack.free_y) {
    Eigen::LLT<Mat> llt(r.V);
    if (llt.info() != Eigen::Success) {
      r.feasible = false;
      return r;
    }
    r.Kx = llt.solve(r.Y.transpose()).transpose();
  } else {
    r.Kx = pack.kx_fixed;
  }
  return r;
}

PpgResult best_over_grid(const PpgProblem& problem, const Packing& pack,
                         const SdpOptions& opts) {
  PpgResult best;
  std::ostringstream diag;
  for (double lambda : problem.lambda_grid) {
    SdpProblem sdp = build_sdp(problem, lambda, pack);
    SdpSolution sol = solve_sdp(sdp, opts);
    PpgResult r = extract_result(problem, lambda, pack, sol);
    if (!r.feasible) {
      diag << "lambda=" << lambda << ": infeasible; ";
      continue;
    }
    if (!best.feasible || r.beta < best.beta) best = r;
  }
  if (!best.feasible) {
    throw InfeasibleError("ppg synthesis failed on the whole grid: " +
                          diag.str());
  }
  return best;
}

}  // namespace

PpgResult solve_ppg_fixed_lambda(const PpgProblem& problem, double lambda,
                                 const SdpOptions& opts) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("solve_ppg_fixed_lambda: lambda must be > 0");
  }
  Packing pack;
  pack.n = problem.n();
  pack.m = problem.m();
  pack.free_y = true;
  SdpProblem sdp = build_sdp(problem, lambda, pack);
  return extract_result(problem, lambda, pack, solve_sdp(sdp, opts));
}

PpgResult synthesize_kx(const PpgProblem& problem, const SdpOptions& opts) {
  Packing pack;
  pack.n = problem.n();
  pack.m = problem.m();
  pack.free_y = true;
  return best_over_grid(problem, pack, opts);
}

PpgResult certify_ppg(const PpgProblem& problem, const Mat& kx,
                      const SdpOptions& opts) {
  if (kx.rows() != problem.m() || kx.cols() != problem.n()) {
    throw std::invalid_argument("certify_ppg: gain dimension mismatch");
  }
  Packing pack;
  pack.n = problem.n();
  pack.m = problem.m();
  pack.free_y = false;
  pack.kx_fixed = kx;
  return best_over_grid(problem, pack, opts);
}

const Vec& PiecewiseConstantSignal::at(double t) const {
  // t_start ascending; return the value of the segment containing t.
  size_t lo = 0;
  for (size_t i = 0; i < t_start.size(); ++i) {
    if (t_start[i] <= t) lo = i;
    else break;
  }
  return value[lo];
}

double simulate_peak_to_peak(const PpgProblem& problem, const Mat& kx,
                             const PiecewiseConstantSignal& w, double horizon,
                             double dt) {
  const Mat a_cl = problem.A + problem.B * kx;
  const Mat cz_cl = problem.Cz + problem.Dz * kx;
  auto [ad, bd] = zoh_discretize(a_cl, problem.Bu, dt);
  Vec x = Vec::Zero(problem.n());
  double peak = 0.0;
  for (double t = 0.0; t < horizon; t += dt) {
    x = ad * x + bd * w.at(t);
    peak = std::max(peak, (cz_cl * x).norm());
  }
  return peak;
}

double verify_ppg_by_simulation(const PpgResult& result,
                                const PpgProblem& problem, int trials,
                                std::uint64_t seed) {
  const Mat a_cl = problem.A + problem.B * result.Kx;
  if (!is_hurwitz(a_cl)) {
    throw std::invalid_argument("verify_ppg_by_simulation: closed loop unstable");
  }
  Eigen::EigenSolver<Mat> es(a_cl, false);
  const double slowest = (-es.eigenvalues().real().array()).minCoeff();
  const double fastest =
      std::max(es.eigenvalues().array().abs().maxCoeff(), slowest);
  const double horizon = 20.0 / slowest;
  const double dt = 1.0 / (20.0 * fastest);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int nw = problem.nw();

  auto random_direction = [&]() {
    if (nw == 0) return Vec(0);
    Vec d(nw);
    do {
      for (int i = 0; i < nw; ++i) d[i] = gauss(rng);
    } while (d.norm() < 1e-12);
    d /= d.norm();  // unit 2-norm, components flipped at switches
    return d;
  };

  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    PiecewiseConstantSignal w;
    const int switches = 1 + static_cast<int>(uni(rng) * 30);
    std::vector<double> times{0.0};
    for (int s = 1; s < switches; ++s) times.push_back(uni(rng) * horizon);
    std::sort(times.begin(), times.end());
    for (double ts : times) {
      w.t_start.push_back(ts);
      w.value.push_back(random_direction());
    }
    worst = std::max(
        worst, simulate_peak_to_peak(problem, result.Kx, w, horizon, dt));
  }
  if (worst > result.beta * (1.0 + 1e-6)) {
    throw std::runtime_error(
        "verify_ppg_by_simulation: observed peak " + std::to_string(worst) +
        " exceeds certified bound " + std::to_string(result.beta));
  }
  return worst;
}

}  // namespace ucmpc
