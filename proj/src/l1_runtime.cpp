#include "ucmpc/l1_runtime.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace ucmpc {

PredictorState PredictorState::start_at(const Vec& x0) {
  PredictorState ps;
  ps.x_hat = x0;
  ps.sigma_hat = Vec::Zero(x0.size());
  ps.x_tilde = Vec::Zero(x0.size());
  return ps;
}

FilterState FilterState::zeros(int m) {
  FilterState fs;
  fs.xi = Vec::Zero(m);
  fs.u_a = Vec::Zero(m);
  return fs;
}

void predictor_step(PredictorState& ps, const Vec& x, const Vec& u_opt,
                    const Vec& u_a, double dt, const LtiPlant& plant,
                    const FeedbackGain& kx, const Mat& ae) {
  const Vec drive = (plant.A + plant.B * kx.Kx) * x +
                    plant.B * (u_opt + u_a) + ps.sigma_hat - ae * x;
  ps.x_hat = rk4_step(
      [&](double, const Vec& xh) -> Vec { return drive + ae * xh; }, 0.0,
      ps.x_hat, dt);
  if (!ps.x_hat.allFinite()) {
    throw std::runtime_error("state predictor produced a non-finite value");
  }
  ps.x_tilde = ps.x_hat - x;
}

Mat estimation_gain(const Mat& ae, double t) {
  if (!(t > 0.0)) {
    throw std::invalid_argument("estimation_gain: sample time must be > 0");
  }
  const Mat phi = expm_integral(ae, t);
  Eigen::FullPivLU<Mat> lu(phi);
  if (!lu.isInvertible()) {
    std::cerr << "estimation_gain: integral map singular at T = " << t
              << "; using the small-T limit -(1/T) I\n";
    return -(1.0 / t) * Mat::Identity(ae.rows(), ae.cols());
  }
  return -lu.solve(matrix_exponential(ae * t));
}

void estimation_update(PredictorState& ps, double t_sample, const Mat& ae) {
  estimation_update_with_gain(ps, t_sample, estimation_gain(ae, t_sample));
}

void estimation_update_with_gain(PredictorState& ps, double t_sample,
                                 const Mat& gain) {
  ps.sigma_hat = gain * ps.x_tilde;
  ps.t_last_update += t_sample;
}

Vec adaptive_input(FilterState& fs, const Vec& sigma_hat, const Mat& bdag,
                   double dt, const FilterBank& filters) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("adaptive_input: dt must be > 0");
  }
  const Vec v = -(bdag * sigma_hat);
  for (int j = 0; j < fs.xi.size(); ++j) {
    const double decay = std::exp(-filters.kf(j) * dt);
    fs.xi(j) = decay * fs.xi(j) + (1.0 - decay) * v(j);
  }
  fs.u_a = fs.xi;
  return fs.u_a;
}

}  // namespace ucmpc
